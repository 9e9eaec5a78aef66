#pragma once

#include <cstdint>
#include <vector>

#include "mmdl/autodiff.hpp"
#include "mmdl/matrix.hpp"

namespace mmdl {

// Weights of the shared two-domain representation network: dense layers with
// tanh hidden activations and a linear output layer.
struct NetworkParams {
    std::vector<std::size_t> layer_sizes;  // input-dim, hidden..., n
    std::vector<Matrix> weights;           // layer_sizes[i] x layer_sizes[i+1]
    std::vector<Matrix> biases;            // 1 x layer_sizes[i+1]

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
};

struct LrSchedule {
    double initial = 1e-4;
    double final = 1e-6;
    std::size_t total_epochs = 1;
};

// Uniform init scaled by 1/sqrt(fan-in); biases zero; deterministic per seed.
NetworkParams init_network(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

// Forward graph through the network. Leaves for every weight and bias are
// returned alongside the output so callers can read gradients after backward.
struct EncodeGraph {
    ad::NodePtr output;                  // b x n
    std::vector<ad::NodePtr> weight_nodes;
    std::vector<ad::NodePtr> bias_nodes;
};
EncodeGraph encode(const NetworkParams& params, const Matrix& x);

// Value-only forward pass (no graph), for evaluation.
Matrix encode_values(const NetworkParams& params, const Matrix& x);

// In-place p <- p - lr * g for every parameter.
void sgd_step(NetworkParams& params, const std::vector<Matrix>& weight_grads,
              const std::vector<Matrix>& bias_grads, double lr);

// Exponential interpolation from initial to final across total_epochs.
double lr_at(const LrSchedule& schedule, std::size_t epoch);

}  // namespace mmdl
