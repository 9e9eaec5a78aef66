#include "mmdl/decorr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmdl/errors.hpp"

namespace mmdl {

Matrix normalized_second_moment(const Matrix& y) {
    const std::size_t m = y.rows(), n = y.cols();
    if (m < 1) throw ShapeError("normalized_second_moment: empty batch");
    Matrix c(n, n);
    for (std::size_t j = 0; j < m; ++j) {
        double sq = 0.0;
        for (std::size_t k = 0; k < n; ++k) sq += y(j, k) * y(j, k);
        if (std::sqrt(sq) < 1e-12) {
            throw NumericError("normalized_second_moment: degenerate row " +
                               std::to_string(j) + " (norm < 1e-12)");
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) c(a, b) += y(j, a) * y(j, b) / sq;
    }
    for (double& v : c.raw()) v /= static_cast<double>(m);
    return c;
}

std::pair<std::vector<double>, Matrix> jacobi_eigh(const Matrix& c) {
    const std::size_t n = c.rows();
    if (c.cols() != n) throw ShapeError("jacobi_eigh: matrix not square, " + c.shape_str());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(c(i, j) - c(j, i)) > 1e-10) {
                throw NumericError("jacobi_eigh: input not symmetric at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
            }

    Matrix a = c;
    Matrix v = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a(p, q)));
        if (off < 1e-12) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cs * akp - sn * akq;
                    a(k, q) = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cs * apk - sn * aqk;
                    a(q, k) = sn * apk + cs * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }

    // Sort descending; equal eigenvalues keep their original index order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    std::vector<double> vals(n);
    Matrix vecs(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        const std::size_t s = idx[col];
        vals[col] = a(s, s);
        // Sign convention: largest-magnitude entry non-negative.
        std::size_t imax = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::fabs(v(k, s)) > std::fabs(v(imax, s))) imax = k;
        const double sign = (v(imax, s) < 0.0) ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) vecs(k, col) = sign * v(k, s);
    }
    return {vals, vecs};
}

DecorrLayer fit_decorrelation(const Matrix& y, std::size_t q) {
    const std::size_t n = y.cols();
    if (q < 1 || q > n) {
        throw ConfigError("fit_decorrelation: q = " + std::to_string(q) +
                          " outside [1, " + std::to_string(n) + "]");
    }
    const Matrix c = normalized_second_moment(y);
    auto [vals, vecs] = jacobi_eigh(c);

    DecorrLayer layer;
    layer.projection = Matrix(n, q);
    layer.eigenvalues.assign(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(q));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) layer.projection(i, j) = vecs(i, j);
    return layer;
}

Matrix project(const DecorrLayer& layer, const Matrix& y) {
    if (y.cols() != layer.input_dim()) {
        throw ShapeError("project: input width " + std::to_string(y.cols()) +
                         " does not match layer input dim " +
                         std::to_string(layer.input_dim()));
    }
    return matmul(y, layer.projection);
}

ad::NodePtr project(const DecorrLayer& layer, const ad::NodePtr& y) {
    if (y->value.cols() != layer.input_dim()) {
        throw ShapeError("project: input width " + std::to_string(y->value.cols()) +
                         " does not match layer input dim " +
                         std::to_string(layer.input_dim()));
    }
    return ad::matmul(y, ad::constant(layer.projection));
}

DecorrLayer identity_decorr(std::size_t n) {
    DecorrLayer layer;
    layer.projection = Matrix::identity(n);
    layer.eigenvalues.assign(n, 0.0);
    return layer;
}

}  // namespace mmdl
