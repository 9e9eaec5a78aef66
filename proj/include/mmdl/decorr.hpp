#pragma once

#include <utility>
#include <vector>

#include "mmdl/autodiff.hpp"
#include "mmdl/matrix.hpp"

namespace mmdl {

// Orthonormal projection into the decorrelation subspace, fitted from the
// eigenbasis of the normalized second-moment matrix of a representation batch.
struct DecorrLayer {
    Matrix projection;                // n x q, orthonormal columns
    std::vector<double> eigenvalues;  // q values, descending

    std::size_t input_dim() const { return projection.rows(); }
    std::size_t output_dim() const { return projection.cols(); }
};

// C = (1/m) sum_j y_j y_j^T / (y_j^T y_j): symmetric PSD with trace 1.
Matrix normalized_second_moment(const Matrix& y);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues sorted
// descending (ties keep original index order); each eigenvector column has its
// largest-magnitude entry made non-negative.
std::pair<std::vector<double>, Matrix> jacobi_eigh(const Matrix& c);

DecorrLayer fit_decorrelation(const Matrix& y, std::size_t q);

// z = y * W^D. The layer is held constant; gradients flow through y only.
Matrix project(const DecorrLayer& layer, const Matrix& y);
ad::NodePtr project(const DecorrLayer& layer, const ad::NodePtr& y);

// Identity layer used when decorrelation is toggled off.
DecorrLayer identity_decorr(std::size_t n);

}  // namespace mmdl
