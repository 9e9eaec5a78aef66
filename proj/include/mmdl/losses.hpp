#pragma once

#include <cstdint>
#include <vector>

#include "mmdl/autodiff.hpp"
#include "mmdl/domain.hpp"
#include "mmdl/matrix.hpp"

namespace mmdl {

// Batch indices of one mined quadruplet: a same-identity NIR/VIS anchor pair
// plus the hardest other-identity negative in each domain.
struct QuadrupletTuple {
    std::size_t anchor_nir;
    std::size_t anchor_vis;
    std::size_t neg_nir;
    std::size_t neg_vis;
};

struct MiningResult {
    std::vector<QuadrupletTuple> tuples;
    std::size_t skipped = 0;  // anchor pairs lacking a negative in some domain
};

// Class-weight head of the angular margin loss. Columns of class_weights are
// kept unit-norm by renormalize_columns after every optimizer step.
struct HamlHead {
    Matrix class_weights;     // q x c
    double scale = 16.0;      // s
    double margin_nir = 0.9;  // m1
    double margin_vis = 0.9;  // m2
    double weight_nir = 0.6;  // lambda_N
    double weight_vis = 0.4;  // lambda_V

    std::size_t num_classes() const { return class_weights.cols(); }
};

struct MmlConfig {
    double alpha1 = 0.2;
    double alpha2 = 0.1;
    double lambda1 = 10.0;
    double lambda2 = 1.0;
};

// Differentiable cosine similarity of two 1xq rows.
ad::NodePtr cosine_similarity(const ad::NodePtr& u, const ad::NodePtr& v);

// Online hard-negative selection over current values; no gradient through the
// argmax. Ties break toward the lowest batch index.
MiningResult mine_quadruplets(const Matrix& z, const std::vector<std::size_t>& identities,
                              const std::vector<Domain>& domains);

// Quadruplet margin loss: mean over tuples of the four hinge terms.
ad::NodePtr qml(const ad::NodePtr& z, const std::vector<QuadrupletTuple>& tuples,
                double alpha1, double alpha2);

// Heterogeneous angular margin loss. Returns the scalar loss together with the
// class-weight leaf so the caller can read its gradient.
struct HamlGraph {
    ad::NodePtr loss;
    ad::NodePtr class_weight_node;
};
HamlGraph haml(const ad::NodePtr& z, const std::vector<std::size_t>& identities,
               const std::vector<Domain>& domains, const HamlHead& head);

// lambda1 * qml + lambda2 * haml.
ad::NodePtr mml(const ad::NodePtr& qml_value, const ad::NodePtr& haml_value,
                const MmlConfig& cfg);

HamlHead init_haml_head(std::size_t q, std::size_t classes, std::uint64_t seed);
void renormalize_columns(Matrix& w);

}  // namespace mmdl
