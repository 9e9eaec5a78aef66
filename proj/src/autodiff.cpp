#include "mmdl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "mmdl/errors.hpp"

namespace mmdl::ad {

namespace {

NodePtr make_op(Matrix value, std::vector<NodePtr> parents,
                std::function<void(Node&)> rule) {
    auto n = std::make_shared<Node>(std::move(value));
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) n->backward_rule = std::move(rule);
    return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (!a->value.same_shape(b->value)) {
        throw ShapeError(std::string(op) + ": shape mismatch, " + a->value.shape_str() +
                         " vs " + b->value.shape_str());
    }
}

}  // namespace

NodePtr constant(Matrix v) { return std::make_shared<Node>(std::move(v)); }

NodePtr param(Matrix v) {
    auto n = std::make_shared<Node>(std::move(v));
    n->requires_grad = true;
    n->is_leaf = true;
    return n;
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    Matrix out = mmdl::matmul(a->value, b->value);  // validates inner dims
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            const Matrix da = mmdl::matmul(self.grad, mmdl::transpose(b->value));
            for (std::size_t i = 0; i < da.size(); ++i) a->grad.raw()[i] += da.raw()[i];
        }
        if (b->requires_grad) {
            const Matrix db = mmdl::matmul(mmdl::transpose(a->value), self.grad);
            for (std::size_t i = 0; i < db.size(); ++i) b->grad.raw()[i] += db.raw()[i];
        }
    });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += b->value.raw()[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                a->grad.raw()[i] += self.grad.raw()[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                b->grad.raw()[i] += self.grad.raw()[i];
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] -= b->value.raw()[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                a->grad.raw()[i] += self.grad.raw()[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                b->grad.raw()[i] -= self.grad.raw()[i];
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] *= b->value.raw()[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                a->grad.raw()[i] += self.grad.raw()[i] * b->value.raw()[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                b->grad.raw()[i] += self.grad.raw()[i] * a->value.raw()[i];
    });
}

NodePtr scale(const NodePtr& a, double c) {
    Matrix out = a->value;
    for (double& v : out.raw()) v *= c;
    return make_op(std::move(out), {a}, [a, c](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            a->grad.raw()[i] += c * self.grad.raw()[i];
    });
}

NodePtr add_scalar(const NodePtr& a, double c) {
    Matrix out = a->value;
    for (double& v : out.raw()) v += c;
    return make_op(std::move(out), {a}, [a](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            a->grad.raw()[i] += self.grad.raw()[i];
    });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& v) {
    if (v->value.rows() != 1 || v->value.cols() != a->value.cols()) {
        throw ShapeError("add_rowvec: expected 1x" + std::to_string(a->value.cols()) +
                         " bias, got " + v->value.shape_str());
    }
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += v->value(0, j);
    return make_op(std::move(out), {a, v}, [a, v](Node& self) {
        if (a->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                a->grad.raw()[i] += self.grad.raw()[i];
        if (v->requires_grad)
            for (std::size_t i = 0; i < self.grad.rows(); ++i)
                for (std::size_t j = 0; j < self.grad.cols(); ++j)
                    v->grad(0, j) += self.grad(i, j);
    });
}

NodePtr tanh_op(const NodePtr& a) {
    Matrix out = a->value;
    for (double& v : out.raw()) v = std::tanh(v);
    return make_op(std::move(out), {a}, [a](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double y = self.value.raw()[i];
            a->grad.raw()[i] += self.grad.raw()[i] * (1.0 - y * y);
        }
    });
}

NodePtr relu(const NodePtr& a) {
    Matrix out = a->value;
    for (double& v : out.raw()) v = std::max(v, 0.0);
    return make_op(std::move(out), {a}, [a](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (a->value.raw()[i] > 0.0) a->grad.raw()[i] += self.grad.raw()[i];
        }
    });
}

NodePtr row_sum(const NodePtr& a) {
    Matrix out(a->value.rows(), 1);
    for (std::size_t i = 0; i < a->value.rows(); ++i)
        for (std::size_t j = 0; j < a->value.cols(); ++j) out(i, 0) += a->value(i, j);
    return make_op(std::move(out), {a}, [a](Node& self) {
        for (std::size_t i = 0; i < a->grad.rows(); ++i)
            for (std::size_t j = 0; j < a->grad.cols(); ++j)
                a->grad(i, j) += self.grad(i, 0);
    });
}

NodePtr full_sum(const NodePtr& a) {
    double s = 0.0;
    for (double v : a->value.raw()) s += v;
    return make_op(Matrix(1, 1, {s}), {a}, [a](Node& self) {
        const double g = self.grad(0, 0);
        for (double& gv : a->grad.raw()) gv += g;
    });
}

NodePtr transpose_op(const NodePtr& a) {
    return make_op(mmdl::transpose(a->value), {a}, [a](Node& self) {
        const Matrix gt = mmdl::transpose(self.grad);
        for (std::size_t i = 0; i < gt.size(); ++i) a->grad.raw()[i] += gt.raw()[i];
    });
}

NodePtr slice_rows(const NodePtr& a, std::size_t begin, std::size_t count) {
    if (begin + count > a->value.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " +
                         a->value.shape_str());
    }
    const std::size_t q = a->value.cols();
    Matrix out(count, q);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < q; ++j) out(i, j) = a->value(begin + i, j);
    return make_op(std::move(out), {a}, [a, begin, count, q](Node& self) {
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < q; ++j)
                a->grad(begin + i, j) += self.grad(i, j);
    });
}

NodePtr row_l2_normalize(const NodePtr& a) {
    const std::size_t p = a->value.rows(), q = a->value.cols();
    Matrix out(p, q);
    std::vector<double> norms(p);
    for (std::size_t i = 0; i < p; ++i) {
        norms[i] = mmdl::row_norm(a->value, i);
        if (norms[i] < 1e-12) {
            throw NumericError("row_l2_normalize: degenerate row " + std::to_string(i) +
                               " (norm < 1e-12)");
        }
        for (std::size_t j = 0; j < q; ++j) out(i, j) = a->value(i, j) / norms[i];
    }
    return make_op(std::move(out), {a}, [a, norms](Node& self) {
        const std::size_t q = self.value.cols();
        for (std::size_t i = 0; i < self.value.rows(); ++i) {
            double gdot = 0.0;
            for (std::size_t j = 0; j < q; ++j) gdot += self.grad(i, j) * self.value(i, j);
            for (std::size_t j = 0; j < q; ++j)
                a->grad(i, j) += (self.grad(i, j) - gdot * self.value(i, j)) / norms[i];
        }
    });
}

NodePtr cosine_sim(const NodePtr& u, const NodePtr& v) {
    if (u->value.rows() != 1 || v->value.rows() != 1 || u->value.cols() != v->value.cols()) {
        throw ShapeError("cosine_sim: expected two 1xq rows, got " + u->value.shape_str() +
                         " and " + v->value.shape_str());
    }
    const double nu = mmdl::row_norm(u->value, 0);
    const double nv = mmdl::row_norm(v->value, 0);
    if (nu < 1e-12 || nv < 1e-12) {
        throw NumericError("cosine_sim: degenerate (near-zero) vector");
    }
    const double c = mmdl::dot_rows(u->value, 0, v->value, 0) / (nu * nv);
    return make_op(Matrix(1, 1, {c}), {u, v}, [u, v, nu, nv, c](Node& self) {
        const double g = self.grad(0, 0);
        const std::size_t q = u->value.cols();
        for (std::size_t j = 0; j < q; ++j) {
            const double uj = u->value(0, j), vj = v->value(0, j);
            if (u->requires_grad)
                u->grad(0, j) += g * (vj / (nu * nv) - c * uj / (nu * nu));
            if (v->requires_grad)
                v->grad(0, j) += g * (uj / (nu * nv) - c * vj / (nv * nv));
        }
    });
}

NodePtr arc_margin(const NodePtr& cosines, const std::vector<std::size_t>& labels,
                   const std::vector<double>& margins) {
    const std::size_t b = cosines->value.rows(), c = cosines->value.cols();
    if (labels.size() != b || margins.size() != b) {
        throw ShapeError("arc_margin: label/margin count does not match batch of " +
                         std::to_string(b));
    }
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] >= c) {
            throw ConfigError("arc_margin: label " + std::to_string(labels[i]) +
                              " out of range for " + std::to_string(c) + " classes");
        }
    }
    Matrix out = cosines->value;
    std::vector<double> dfs(b);  // d(target logit)/d(cos theta)
    for (std::size_t i = 0; i < b; ++i) {
        const double m = margins[i];
        const double t = cosines->value(i, labels[i]);
        const double cm = std::cos(m), sm = std::sin(m);
        if (t > std::cos(std::numbers::pi - m)) {
            const double st = std::sqrt(std::max(1.0 - t * t, 1e-12));
            out(i, labels[i]) = t * cm - st * sm;
            dfs[i] = cm + t * sm / st;
        } else {
            out(i, labels[i]) = t - m * sm;
            dfs[i] = 1.0;
        }
    }
    return make_op(std::move(out), {cosines},
                   [cosines, labels, dfs](Node& self) {
                       for (std::size_t i = 0; i < self.grad.rows(); ++i)
                           for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                               const double f = (j == labels[i]) ? dfs[i] : 1.0;
                               cosines->grad(i, j) += f * self.grad(i, j);
                           }
                   });
}

NodePtr softmax_xent(const NodePtr& logits, const std::vector<std::size_t>& labels) {
    const std::size_t b = logits->value.rows(), c = logits->value.cols();
    if (labels.size() != b) {
        throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(b));
    }
    Matrix out(b, 1);
    Matrix softmax(b, c);
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] >= c) {
            throw ConfigError("softmax_xent: label " + std::to_string(labels[i]) +
                              " out of range for " + std::to_string(c) + " classes");
        }
        double mx = logits->value(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits->value(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(logits->value(i, j) - mx);
        for (std::size_t j = 0; j < c; ++j)
            softmax(i, j) = std::exp(logits->value(i, j) - mx) / z;
        out(i, 0) = std::log(z) + mx - logits->value(i, labels[i]);
    }
    return make_op(std::move(out), {logits},
                   [logits, labels, softmax](Node& self) {
                       for (std::size_t i = 0; i < softmax.rows(); ++i) {
                           const double g = self.grad(i, 0);
                           for (std::size_t j = 0; j < softmax.cols(); ++j) {
                               const double onehot = (j == labels[i]) ? 1.0 : 0.0;
                               logits->grad(i, j) += g * (softmax(i, j) - onehot);
                           }
                       }
                   });
}

void backward(const NodePtr& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw ShapeError("backward: loss must be 1x1, got " + loss->value.shape_str());
    }
    // Iterative post-order DFS; recursion would overflow on long op chains.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Interior gradients are recomputed per call; leaf gradients accumulate.
    for (Node* n : order) {
        if (!n->is_leaf) n->zero_grad();
    }
    loss->grad(0, 0) += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->requires_grad && n->backward_rule) n->backward_rule(*n);
    }
}

}  // namespace mmdl::ad
