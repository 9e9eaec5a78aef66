#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mmdl/matrix.hpp"

namespace mmdl {

// Deterministic random source. Distributions are implemented directly on top
// of the engine output so a given seed yields the same stream on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (no cached spare, two draws per call).
    double normal();

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);
    Matrix normal_matrix(std::size_t rows, std::size_t cols, double sigma = 1.0);

    // Haar-ish random orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
    Matrix random_orthogonal(std::size_t n);

    // Unit vector uniform on the sphere in R^dim.
    std::vector<double> unit_vector(std::size_t dim);

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

}  // namespace mmdl
