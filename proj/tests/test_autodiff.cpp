#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmdl/autodiff.hpp"
#include "mmdl/errors.hpp"
#include "mmdl/gradcheck.hpp"
#include "mmdl/rng.hpp"

using namespace mmdl;

TEST_CASE("matmul values") {
    Rng rng(11);
    const Matrix b = rng.uniform_matrix(2, 5, -1, 1);

    // identity and zero cases
    auto out = ad::matmul(ad::constant(Matrix::identity(2)), ad::constant(b));
    CHECK(max_abs_diff(out->value, b) == 0.0);
    out = ad::matmul(ad::constant(Matrix(3, 2)), ad::constant(b));
    CHECK(max_abs_diff(out->value, Matrix(3, 5)) == 0.0);

    // hand multiplication
    out = ad::matmul(ad::constant(Matrix(2, 2, {1, 2, 3, 4})),
                     ad::constant(Matrix(2, 2, {5, 6, 7, 8})));
    CHECK(max_abs_diff(out->value, Matrix(2, 2, {19, 22, 43, 50})) == 0.0);
}

TEST_CASE("matmul shape error names both shapes") {
    const auto a = ad::constant(Matrix(2, 3));
    const auto b = ad::constant(Matrix(2, 3));
    CHECK_THROWS_WITH_AS(ad::matmul(a, b),
                         doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("matmul associativity on random conforming triples") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = rng.uniform_matrix(3, 4, -1, 1);
        const Matrix b = rng.uniform_matrix(4, 2, -1, 1);
        const Matrix c = rng.uniform_matrix(2, 5, -1, 1);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        CHECK(max_abs_diff(left, right) < 1e-10);
    }
}

TEST_CASE("row_l2_normalize values") {
    auto out = ad::row_l2_normalize(ad::constant(Matrix(1, 2, {3, 4})));
    CHECK(out->value(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(out->value(0, 1) == doctest::Approx(0.8).epsilon(1e-15));

    out = ad::row_l2_normalize(ad::constant(Matrix(2, 2, {1, 0, 0, 2})));
    CHECK(max_abs_diff(out->value, Matrix::identity(2)) == 0.0);
}

TEST_CASE("row_l2_normalize unit norms and idempotence") {
    Rng rng(3);
    Matrix m(4, 3);
    do {
        m = rng.uniform_matrix(4, 3, -1, 1);
    } while (row_norm(m, 0) < 0.1 || row_norm(m, 1) < 0.1 || row_norm(m, 2) < 0.1 ||
             row_norm(m, 3) < 0.1);
    const auto once = ad::row_l2_normalize(ad::constant(m));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::fabs(row_norm(once->value, i) - 1.0) < 1e-12);
    }
    const auto twice = ad::row_l2_normalize(once);
    CHECK(max_abs_diff(once->value, twice->value) < 1e-12);
}

TEST_CASE("row_l2_normalize degenerate row names the index") {
    Matrix m(3, 2, {1, 1, 0, 0, 1, 1});
    CHECK_THROWS_WITH_AS(ad::row_l2_normalize(ad::constant(m)),
                         doctest::Contains("row 1"), NumericError);
}

TEST_CASE("backward on linear and quadratic losses") {
    auto x = ad::param(Matrix(2, 3, {1, -2, 0.5, 3, -1, 2}));
    ad::backward(ad::full_sum(x));
    CHECK(max_abs_diff(x->grad, Matrix(2, 3, 1.0)) == 0.0);

    auto y = ad::param(Matrix(1, 2, {1, 2}));
    ad::backward(ad::full_sum(ad::mul(y, y)));
    CHECK(max_abs_diff(y->grad, Matrix(1, 2, {2, 4})) == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    auto x = ad::param(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(ad::backward(x), ShapeError);
}

TEST_CASE("backward accumulates across calls without reset") {
    auto x = ad::param(Matrix(1, 2, {1, 2}));
    auto loss = ad::full_sum(ad::mul(x, x));
    ad::backward(loss);
    ad::backward(loss);
    CHECK(max_abs_diff(x->grad, Matrix(1, 2, {4, 8})) == 0.0);
}

TEST_CASE("gradient linearity: sum of two graphs") {
    Rng rng(17);
    const Matrix x0 = rng.uniform_matrix(2, 3, -1, 1);

    auto xa = ad::param(x0);
    ad::backward(ad::full_sum(ad::tanh_op(xa)));
    auto xb = ad::param(x0);
    ad::backward(ad::full_sum(ad::mul(xb, xb)));

    auto xc = ad::param(x0);
    ad::backward(ad::add(ad::full_sum(ad::tanh_op(xc)), ad::full_sum(ad::mul(xc, xc))));

    for (std::size_t i = 0; i < x0.size(); ++i) {
        CHECK(std::fabs(xc->grad.raw()[i] - (xa->grad.raw()[i] + xb->grad.raw()[i])) <
              1e-12);
    }
}

TEST_CASE("finite_diff_check on a constant is zero") {
    const auto f = [](const std::vector<ad::NodePtr>& leaves) {
        return ad::scale(ad::full_sum(ad::sub(leaves[0], leaves[0])), 1.0);
    };
    CHECK(finite_diff_check(f, {Matrix(2, 2, 0.7)}, 1e-5) == 0.0);
}

TEST_CASE("finite_diff_check on a quadratic form matches 2Ax") {
    Rng rng(23);
    Matrix a = rng.uniform_matrix(3, 3, -1, 1);
    a = matmul(a, transpose(a));  // symmetric
    const Matrix x = rng.uniform_matrix(3, 1, -1, 1);

    const auto f = [&a](const std::vector<ad::NodePtr>& leaves) {
        const auto an = ad::constant(a);
        return ad::full_sum(
            ad::mul(leaves[0], ad::matmul(an, leaves[0])));  // x . (A x)
    };
    CHECK(finite_diff_check(f, {x}, 1e-5) < 1e-8);

    // independent analytic oracle: gradient of x^T A x is 2 A x for symmetric A
    auto leaf = ad::param(x);
    ad::backward(ad::full_sum(ad::mul(leaf, ad::matmul(ad::constant(a), leaf))));
    const Matrix expected = matmul(a, x);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(leaf->grad(i, 0) == doctest::Approx(2.0 * expected(i, 0)).epsilon(1e-12));
    }
}

TEST_CASE("finite_diff_check validates eps") {
    const auto f = [](const std::vector<ad::NodePtr>& leaves) {
        return ad::full_sum(leaves[0]);
    };
    CHECK_THROWS_AS(finite_diff_check(f, {Matrix(1, 1, 1.0)}, 0.0), ConfigError);
    CHECK_THROWS_AS(finite_diff_check(f, {Matrix(1, 1, 1.0)}, 1e-2), ConfigError);
}

TEST_CASE("every forward operation passes the finite-difference check") {
    Rng rng(41);
    const Matrix a = rng.uniform_matrix(3, 4, -1, 1);
    const Matrix b = rng.uniform_matrix(3, 4, -1, 1);
    const Matrix c = rng.uniform_matrix(4, 2, -1, 1);
    const Matrix bias = rng.uniform_matrix(1, 4, -1, 1);

    using Leaves = std::vector<ad::NodePtr>;
    const auto check1 = [&](const GraphFn& f, const Matrix& p) {
        CHECK(finite_diff_check(f, {p}, 1e-5) < 1e-5);
    };

    check1([](const Leaves& l) { return ad::full_sum(ad::tanh_op(l[0])); }, a);
    check1([](const Leaves& l) { return ad::full_sum(ad::scale(l[0], -2.5)); }, a);
    check1([](const Leaves& l) { return ad::full_sum(ad::add_scalar(l[0], 3.0)); }, a);
    check1([](const Leaves& l) { return ad::full_sum(ad::transpose_op(l[0])); }, a);
    check1([](const Leaves& l) { return ad::full_sum(ad::slice_rows(l[0], 1, 2)); }, a);
    check1([](const Leaves& l) {
        return ad::full_sum(ad::mul(ad::row_sum(l[0]), ad::row_sum(l[0])));
    }, a);
    check1([](const Leaves& l) {
        return ad::full_sum(ad::mul(ad::row_l2_normalize(l[0]),
                                    ad::slice_rows(ad::row_l2_normalize(l[0]), 0, 3)));
    }, a);

    CHECK(finite_diff_check(
              [](const Leaves& l) { return ad::full_sum(ad::mul(ad::add(l[0], l[1]),
                                                               ad::sub(l[0], l[1]))); },
              {a, b}, 1e-5) < 1e-5);
    CHECK(finite_diff_check(
              [](const Leaves& l) {
                  return ad::full_sum(ad::tanh_op(ad::matmul(l[0], l[1])));
              },
              {a, c}, 1e-5) < 1e-5);
    CHECK(finite_diff_check(
              [](const Leaves& l) {
                  return ad::full_sum(ad::tanh_op(ad::add_rowvec(l[0], l[1])));
              },
              {a, bias}, 1e-5) < 1e-5);

    // relu: nudge inputs away from the kink
    Matrix ar = a;
    for (double& v : ar.raw()) {
        if (std::fabs(v) < 0.05) v += 0.1;
    }
    check1([](const Leaves& l) { return ad::full_sum(ad::relu(l[0])); }, ar);

    const Matrix u = rng.uniform_matrix(1, 5, -1, 1);
    const Matrix v = rng.uniform_matrix(1, 5, -1, 1);
    CHECK(finite_diff_check(
              [](const Leaves& l) { return ad::cosine_sim(l[0], l[1]); }, {u, v},
              1e-5) < 1e-5);

    const std::vector<std::size_t> labels = {0, 2, 1};
    const std::vector<double> margins = {0.9, 0.5, 0.0};
    const Matrix cosines = rng.uniform_matrix(3, 3, -0.8, 0.8);
    CHECK(finite_diff_check(
              [&](const Leaves& l) {
                  return ad::full_sum(ad::arc_margin(l[0], labels, margins));
              },
              {cosines}, 1e-5) < 1e-5);
    CHECK(finite_diff_check(
              [&](const Leaves& l) {
                  return ad::full_sum(ad::softmax_xent(ad::scale(l[0], 4.0), labels));
              },
              {cosines}, 1e-5) < 1e-5);
}
