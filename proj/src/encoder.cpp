#include "mmdl/encoder.hpp"

#include <cmath>

#include "mmdl/errors.hpp"
#include "mmdl/rng.hpp"

namespace mmdl {

NetworkParams init_network(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw ConfigError("init_network: need at least 2 layer sizes");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw ConfigError("init_network: layer sizes must be positive");
    }
    NetworkParams params;
    params.layer_sizes = layer_sizes;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
        params.weights.push_back(
            rng.uniform_matrix(layer_sizes[l], layer_sizes[l + 1], -bound, bound));
        params.biases.emplace_back(1, layer_sizes[l + 1]);
    }
    return params;
}

EncodeGraph encode(const NetworkParams& params, const Matrix& x) {
    if (x.cols() != params.input_dim()) {
        throw ShapeError("encode: input width " + std::to_string(x.cols()) +
                         " does not match first layer size " +
                         std::to_string(params.input_dim()));
    }
    EncodeGraph g;
    ad::NodePtr h = ad::constant(x);
    const std::size_t last = params.weights.size() - 1;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        g.weight_nodes.push_back(ad::param(params.weights[l]));
        g.bias_nodes.push_back(ad::param(params.biases[l]));
        h = ad::add_rowvec(ad::matmul(h, g.weight_nodes[l]), g.bias_nodes[l]);
        if (l != last) h = ad::tanh_op(h);  // linear final layer
    }
    g.output = h;
    return g;
}

Matrix encode_values(const NetworkParams& params, const Matrix& x) {
    if (x.cols() != params.input_dim()) {
        throw ShapeError("encode_values: input width " + std::to_string(x.cols()) +
                         " does not match first layer size " +
                         std::to_string(params.input_dim()));
    }
    Matrix h = x;
    const std::size_t last = params.weights.size() - 1;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        Matrix z = matmul(h, params.weights[l]);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += params.biases[l](0, j);
        if (l != last)
            for (double& v : z.raw()) v = std::tanh(v);
        h = std::move(z);
    }
    return h;
}

void sgd_step(NetworkParams& params, const std::vector<Matrix>& weight_grads,
              const std::vector<Matrix>& bias_grads, double lr) {
    if (!(lr > 0.0)) throw ConfigError("sgd_step: lr must be positive");
    if (weight_grads.size() != params.weights.size() ||
        bias_grads.size() != params.biases.size()) {
        throw ShapeError("sgd_step: gradient count mismatch");
    }
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        if (!params.weights[l].same_shape(weight_grads[l]) ||
            !params.biases[l].same_shape(bias_grads[l])) {
            throw ShapeError("sgd_step: gradient shape mismatch at layer " +
                             std::to_string(l));
        }
        for (std::size_t i = 0; i < params.weights[l].size(); ++i)
            params.weights[l].raw()[i] -= lr * weight_grads[l].raw()[i];
        for (std::size_t i = 0; i < params.biases[l].size(); ++i)
            params.biases[l].raw()[i] -= lr * bias_grads[l].raw()[i];
    }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
    if (!(schedule.initial >= schedule.final && schedule.final > 0.0)) {
        throw ConfigError("lr_at: schedule must satisfy initial >= final > 0");
    }
    if (epoch >= schedule.total_epochs) {
        throw ConfigError("lr_at: epoch " + std::to_string(epoch) + " out of range for " +
                          std::to_string(schedule.total_epochs) + " epochs");
    }
    if (schedule.total_epochs == 1) return schedule.initial;
    const double frac = static_cast<double>(epoch) /
                        static_cast<double>(schedule.total_epochs - 1);
    return schedule.initial * std::pow(schedule.final / schedule.initial, frac);
}

}  // namespace mmdl
