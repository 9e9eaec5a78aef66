#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "mmdl/matrix.hpp"

namespace mmdl::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the reverse-mode graph. The graph is built fresh for every
// forward pass; a Node's value is immutable after construction.
struct Node {
    Matrix value;
    Matrix grad;  // same shape as value, zero-initialized
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_rule;  // pulls this->grad into parents
    bool requires_grad = false;
    bool is_leaf = false;

    explicit Node(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

// Graph entry points.
NodePtr constant(Matrix v);
NodePtr param(Matrix v);  // requires-grad leaf

// Forward operations, each with a backward rule.
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // elementwise
NodePtr scale(const NodePtr& a, double c);
NodePtr add_scalar(const NodePtr& a, double c);
NodePtr add_rowvec(const NodePtr& a, const NodePtr& v);  // [p x q] + [1 x q]
NodePtr tanh_op(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr row_sum(const NodePtr& a);   // [p x q] -> [p x 1]
NodePtr full_sum(const NodePtr& a);  // -> [1 x 1]
NodePtr transpose_op(const NodePtr& a);
NodePtr slice_rows(const NodePtr& a, std::size_t begin, std::size_t count);
NodePtr row_l2_normalize(const NodePtr& a);
NodePtr cosine_sim(const NodePtr& u, const NodePtr& v);  // [1 x q] pair -> [1 x 1]

// Additive angular margin on the target logit of each row: entry (i, labels[i])
// of the cosine matrix is replaced by cos(theta + m_i) when cos(theta) is above
// cos(pi - m_i) and by the monotone fallback cos(theta) - m_i*sin(m_i) otherwise.
NodePtr arc_margin(const NodePtr& cosines, const std::vector<std::size_t>& labels,
                   const std::vector<double>& margins);

// Row-wise softmax cross-entropy against integer labels; returns [b x 1] losses.
NodePtr softmax_xent(const NodePtr& logits, const std::vector<std::size_t>& labels);

// Reverse sweep from a scalar loss. Gradients of leaves accumulate across
// calls; gradients of interior nodes are recomputed each call.
void backward(const NodePtr& loss);

}  // namespace mmdl::ad
