#pragma once

#include <functional>
#include <vector>

#include "mmdl/autodiff.hpp"
#include "mmdl/matrix.hpp"

namespace mmdl {

// A scalar-valued graph builder: given leaves for each parameter matrix,
// returns the 1x1 loss node.
using GraphFn = std::function<ad::NodePtr(const std::vector<ad::NodePtr>&)>;

// Central-difference verification of the analytic gradients of f.
// Returns max over all parameter entries of
//   |analytic - (f(p+eps) - f(p-eps)) / (2 eps)| / max(1, |analytic|).
double finite_diff_check(const GraphFn& f, const std::vector<Matrix>& params, double eps);

}  // namespace mmdl
