#include "mmdl/rng.hpp"

#include <cmath>
#include <numbers>

#include "mmdl/errors.hpp"

namespace mmdl {

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ConfigError("Rng::index: n must be positive");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

Matrix Rng::uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (double& v : m.raw()) v = uniform(lo, hi);
    return m;
}

Matrix Rng::normal_matrix(std::size_t rows, std::size_t cols, double sigma) {
    Matrix m(rows, cols);
    for (double& v : m.raw()) v = sigma * normal();
    return m;
}

Matrix Rng::random_orthogonal(std::size_t n) {
    // Modified Gram-Schmidt on a Gaussian matrix; columns become orthonormal.
    Matrix g = normal_matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += g(i, j) * g(i, k);
            for (std::size_t i = 0; i < n; ++i) g(i, j) -= d * g(i, k);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += g(i, j) * g(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) throw NumericError("random_orthogonal: rank-deficient draw");
        for (std::size_t i = 0; i < n; ++i) g(i, j) /= nrm;
    }
    return g;
}

std::vector<double> Rng::unit_vector(std::size_t dim) {
    std::vector<double> v(dim);
    double nrm = 0.0;
    do {
        nrm = 0.0;
        for (double& x : v) {
            x = normal();
            nrm += x * x;
        }
        nrm = std::sqrt(nrm);
    } while (nrm < 1e-12);
    for (double& x : v) x /= nrm;
    return v;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw ConfigError("sample_without_replacement: k > n");
    // Partial Fisher-Yates over an index pool.
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + index(n - i);
        std::swap(pool[i], pool[j]);
        out[i] = pool[i];
    }
    return out;
}

}  // namespace mmdl
