#include "mmdl/matrix.hpp"

#include <cmath>
#include <utility>

#include "mmdl/errors.hpp"

namespace mmdl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions mismatch, " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

double row_norm(const Matrix& a, std::size_t row) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(row, j) * a(row, j);
    return std::sqrt(s);
}

double dot_rows(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    if (a.cols() != b.cols()) {
        throw ShapeError("dot_rows: width mismatch, " + a.shape_str() + " vs " + b.shape_str());
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
    return s;
}

double cosine_rows(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    const double na = row_norm(a, i);
    const double nb = row_norm(b, j);
    if (na < 1e-12 || nb < 1e-12) {
        throw NumericError("cosine_rows: degenerate (near-zero) row");
    }
    return dot_rows(a, i, b, j) / (na * nb);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: shape mismatch, " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::fabs(a.raw()[i] - b.raw()[i]));
    }
    return m;
}

}  // namespace mmdl
