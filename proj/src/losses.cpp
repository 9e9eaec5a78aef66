#include "mmdl/losses.hpp"

#include <cmath>
#include <numbers>

#include "mmdl/errors.hpp"
#include "mmdl/rng.hpp"

namespace mmdl {

ad::NodePtr cosine_similarity(const ad::NodePtr& u, const ad::NodePtr& v) {
    return ad::cosine_sim(u, v);
}

MiningResult mine_quadruplets(const Matrix& z, const std::vector<std::size_t>& identities,
                              const std::vector<Domain>& domains) {
    const std::size_t b = z.rows();
    if (identities.size() != b || domains.size() != b) {
        throw ShapeError("mine_quadruplets: label count does not match batch of " +
                         std::to_string(b));
    }
    MiningResult result;
    for (std::size_t i = 0; i < b; ++i) {
        if (domains[i] != Domain::NIR) continue;
        for (std::size_t j = 0; j < b; ++j) {
            if (domains[j] != Domain::VIS || identities[j] != identities[i]) continue;

            // Hardest other-identity negatives: max cosine, ties to lowest index.
            std::size_t neg_nir = b, neg_vis = b;
            double best_nir = -2.0, best_vis = -2.0;
            for (std::size_t k = 0; k < b; ++k) {
                if (identities[k] == identities[i]) continue;
                if (domains[k] == Domain::NIR) {
                    const double c = cosine_rows(z, k, z, j);  // closest NIR to z^V_j
                    if (c > best_nir) {
                        best_nir = c;
                        neg_nir = k;
                    }
                } else {
                    const double c = cosine_rows(z, k, z, i);  // closest VIS to z^N_j
                    if (c > best_vis) {
                        best_vis = c;
                        neg_vis = k;
                    }
                }
            }
            if (neg_nir == b || neg_vis == b) {
                ++result.skipped;
                continue;
            }
            result.tuples.push_back({i, j, neg_nir, neg_vis});
        }
    }
    return result;
}

ad::NodePtr qml(const ad::NodePtr& z, const std::vector<QuadrupletTuple>& tuples,
                double alpha1, double alpha2) {
    if (tuples.empty()) return ad::constant(Matrix(1, 1, {0.0}));

    ad::NodePtr total = ad::constant(Matrix(1, 1, {0.0}));
    for (const auto& t : tuples) {
        const ad::NodePtr zn_j = ad::slice_rows(z, t.anchor_nir, 1);
        const ad::NodePtr zv_j = ad::slice_rows(z, t.anchor_vis, 1);
        const ad::NodePtr zn_k = ad::slice_rows(z, t.neg_nir, 1);
        const ad::NodePtr zv_l = ad::slice_rows(z, t.neg_vis, 1);

        const ad::NodePtr cpos = ad::cosine_sim(zn_j, zv_j);
        const ad::NodePtr c_nv = ad::cosine_sim(zn_j, zv_l);
        const ad::NodePtr c_vv = ad::cosine_sim(zv_j, zv_l);
        const ad::NodePtr c_vn = ad::cosine_sim(zv_j, zn_k);
        const ad::NodePtr c_nn = ad::cosine_sim(zn_j, zn_k);

        ad::NodePtr sum = ad::relu(ad::add_scalar(ad::sub(c_nv, cpos), alpha1));
        sum = ad::add(sum, ad::relu(ad::add_scalar(ad::sub(c_vv, cpos), alpha2)));
        sum = ad::add(sum, ad::relu(ad::add_scalar(ad::sub(c_vn, cpos), alpha1)));
        sum = ad::add(sum, ad::relu(ad::add_scalar(ad::sub(c_nn, cpos), alpha2)));
        total = ad::add(total, sum);
    }
    return ad::scale(total, 1.0 / static_cast<double>(tuples.size()));
}

HamlGraph haml(const ad::NodePtr& z, const std::vector<std::size_t>& identities,
               const std::vector<Domain>& domains, const HamlHead& head) {
    const std::size_t b = z->value.rows();
    if (identities.size() != b || domains.size() != b) {
        throw ShapeError("haml: label count does not match batch of " + std::to_string(b));
    }
    if (z->value.cols() != head.class_weights.rows()) {
        throw ShapeError("haml: embedding dim " + std::to_string(z->value.cols()) +
                         " does not match head dim " +
                         std::to_string(head.class_weights.rows()));
    }
    if (std::fabs(head.weight_nir + head.weight_vis - 1.0) > 1e-12) {
        throw ConfigError("haml: domain weights must sum to 1");
    }
    if (!(head.scale > 0.0) || head.margin_nir < 0.0 || head.margin_vis < 0.0 ||
        head.margin_nir > std::numbers::pi / 2 || head.margin_vis > std::numbers::pi / 2) {
        throw ConfigError("haml: scale must be positive and margins in [0, pi/2]");
    }

    HamlGraph g;
    g.class_weight_node = ad::param(head.class_weights);

    // Both embeddings and class weights live on the unit hypersphere.
    const ad::NodePtr zn = ad::row_l2_normalize(z);
    const ad::NodePtr wn = ad::transpose_op(
        ad::row_l2_normalize(ad::transpose_op(g.class_weight_node)));
    const ad::NodePtr cosines = ad::matmul(zn, wn);

    std::vector<double> margins(b);
    std::size_t n_nir = 0, n_vis = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (domains[i] == Domain::NIR) {
            margins[i] = head.margin_nir;
            ++n_nir;
        } else {
            margins[i] = head.margin_vis;
            ++n_vis;
        }
    }

    const ad::NodePtr logits =
        ad::scale(ad::arc_margin(cosines, identities, margins), head.scale);
    const ad::NodePtr xent = ad::softmax_xent(logits, identities);

    // Each domain's mean, scaled by its lambda; an absent domain contributes 0.
    Matrix weights(b, 1);
    for (std::size_t i = 0; i < b; ++i) {
        weights(i, 0) = (domains[i] == Domain::NIR)
                            ? head.weight_nir / static_cast<double>(n_nir)
                            : head.weight_vis / static_cast<double>(n_vis);
    }
    g.loss = ad::full_sum(ad::mul(xent, ad::constant(weights)));
    return g;
}

ad::NodePtr mml(const ad::NodePtr& qml_value, const ad::NodePtr& haml_value,
                const MmlConfig& cfg) {
    return ad::add(ad::scale(qml_value, cfg.lambda1), ad::scale(haml_value, cfg.lambda2));
}

HamlHead init_haml_head(std::size_t q, std::size_t classes, std::uint64_t seed) {
    if (q == 0 || classes == 0) {
        throw ConfigError("init_haml_head: dims must be positive");
    }
    HamlHead head;
    Rng rng(seed);
    head.class_weights = rng.normal_matrix(q, classes);
    renormalize_columns(head.class_weights);
    return head;
}

void renormalize_columns(Matrix& w) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) nrm += w(i, j) * w(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) {
            throw NumericError("renormalize_columns: degenerate column " + std::to_string(j));
        }
        for (std::size_t i = 0; i < w.rows(); ++i) w(i, j) /= nrm;
    }
}

}  // namespace mmdl
