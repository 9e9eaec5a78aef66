#include "mmdl/gradcheck.hpp"

#include <cmath>

#include "mmdl/errors.hpp"

namespace mmdl {

namespace {

double eval_scalar(const GraphFn& f, const std::vector<Matrix>& params) {
    std::vector<ad::NodePtr> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(ad::constant(p));
    const ad::NodePtr loss = f(leaves);
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw ShapeError("finite_diff_check: f must return a 1x1 node, got " +
                         loss->value.shape_str());
    }
    const double v = loss->value(0, 0);
    if (!std::isfinite(v)) {
        throw NumericError("finite_diff_check: non-finite evaluation of f");
    }
    return v;
}

}  // namespace

double finite_diff_check(const GraphFn& f, const std::vector<Matrix>& params, double eps) {
    if (!(eps > 0.0 && eps <= 1e-3)) {
        throw ConfigError("finite_diff_check: eps must be in (0, 1e-3]");
    }

    // Analytic gradients via one reverse pass.
    std::vector<ad::NodePtr> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(ad::param(p));
    const ad::NodePtr loss = f(leaves);
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw ShapeError("finite_diff_check: f must return a 1x1 node, got " +
                         loss->value.shape_str());
    }
    ad::backward(loss);

    double max_rel_err = 0.0;
    std::vector<Matrix> perturbed = params;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double saved = perturbed[k].raw()[i];
            perturbed[k].raw()[i] = saved + eps;
            const double fp = eval_scalar(f, perturbed);
            perturbed[k].raw()[i] = saved - eps;
            const double fm = eval_scalar(f, perturbed);
            perturbed[k].raw()[i] = saved;

            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = leaves[k]->grad.raw()[i];
            const double err = std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
            max_rel_err = std::max(max_rel_err, err);
        }
    }
    return max_rel_err;
}

}  // namespace mmdl
