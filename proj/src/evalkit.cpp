#include "mmdl/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "mmdl/errors.hpp"

namespace mmdl {

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["rank1"] = rank1;
    j["rank_k"] = nlohmann::json::array();
    for (const auto& [k, v] : rank_k) j["rank_k"].push_back({k, v});
    j["vr_at_far"] = nlohmann::json::array();
    for (const auto& [far, vr] : vr_at_far) j["vr_at_far"].push_back({far, vr});
    j["genuine_count"] = genuine_count;
    j["impostor_count"] = impostor_count;
    return j.dump(2);
}

Matrix similarity_matrix(const Matrix& probe, const Matrix& gallery) {
    if (probe.cols() != gallery.cols()) {
        throw ShapeError("similarity_matrix: width mismatch, " + probe.shape_str() +
                         " vs " + gallery.shape_str());
    }
    Matrix s(probe.rows(), gallery.rows());
    for (std::size_t i = 0; i < probe.rows(); ++i)
        for (std::size_t j = 0; j < gallery.rows(); ++j)
            s(i, j) = cosine_rows(probe, i, gallery, j);
    return s;
}

double rank_k_accuracy(const Matrix& s, const std::vector<std::size_t>& probe_labels,
                       const std::vector<std::size_t>& gallery_labels, std::size_t k) {
    const std::size_t p = s.rows(), g = s.cols();
    if (probe_labels.size() != p || gallery_labels.size() != g) {
        throw ShapeError("rank_k_accuracy: label lengths do not match matrix " +
                         s.shape_str());
    }
    if (k < 1 || k > g) {
        throw ConfigError("rank_k_accuracy: k = " + std::to_string(k) +
                          " outside [1, " + std::to_string(g) + "]");
    }
    std::size_t hits = 0;
    std::vector<std::size_t> order(g);
    for (std::size_t i = 0; i < p; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (s(i, a) != s(i, b)) return s(i, a) > s(i, b);
            return a < b;  // ties to the lower gallery index
        });
        for (std::size_t r = 0; r < k; ++r) {
            if (gallery_labels[order[r]] == probe_labels[i]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(p);
}

std::pair<double, double> vr_at_far(const std::vector<double>& genuine,
                                    const std::vector<double>& impostor, double far) {
    if (genuine.empty() || impostor.empty()) {
        throw DataError("vr_at_far: empty score list");
    }
    if (far < 0.0 || far > 1.0) throw ConfigError("vr_at_far: far must be in [0, 1]");

    std::vector<double> imp = impostor;
    std::sort(imp.begin(), imp.end());
    const double n = static_cast<double>(imp.size());

    // Smallest observed impostor score whose accept count meets the budget;
    // if even the maximum fails (e.g. far = 0), step just above it.
    double threshold = std::nextafter(imp.back(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < imp.size(); ++i) {
        if (i > 0 && imp[i] == imp[i - 1]) continue;
        const double accepted = static_cast<double>(
            imp.end() - std::lower_bound(imp.begin(), imp.end(), imp[i]));
        if (accepted / n <= far) {
            threshold = imp[i];
            break;
        }
    }

    std::size_t accepted_genuine = 0;
    for (double v : genuine) {
        if (v >= threshold) ++accepted_genuine;
    }
    const double vr = static_cast<double>(accepted_genuine) /
                      static_cast<double>(genuine.size());
    return {vr, threshold};
}

EvalReport evaluate(const NetworkParams& params, const DecorrLayer& layer,
                    const Dataset& test_set, const EvalProtocol& protocol) {
    std::vector<std::size_t> probe_rows, gallery_rows;
    for (std::size_t i = 0; i < test_set.samples.size(); ++i) {
        (test_set.samples[i].domain == Domain::NIR ? probe_rows : gallery_rows).push_back(i);
    }
    if (probe_rows.empty() || gallery_rows.empty()) {
        throw DataError("evaluate: test set must contain both NIR (probe) and VIS "
                        "(gallery) samples");
    }

    const Matrix probe = project(layer, encode_values(params, test_set.feature_matrix(probe_rows)));
    const Matrix gallery =
        project(layer, encode_values(params, test_set.feature_matrix(gallery_rows)));

    std::vector<std::size_t> probe_labels, gallery_labels;
    for (std::size_t r : probe_rows) probe_labels.push_back(test_set.samples[r].identity);
    for (std::size_t r : gallery_rows) gallery_labels.push_back(test_set.samples[r].identity);

    const Matrix s = similarity_matrix(probe, gallery);

    EvalReport report;
    report.rank1 = rank_k_accuracy(s, probe_labels, gallery_labels, 1);
    for (std::size_t k : protocol.ks) {
        if (k <= gallery_rows.size()) {
            report.rank_k.emplace_back(k, rank_k_accuracy(s, probe_labels, gallery_labels, k));
        }
    }

    std::vector<double> genuine, impostor;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            (probe_labels[i] == gallery_labels[j] ? genuine : impostor).push_back(s(i, j));
    report.genuine_count = genuine.size();
    report.impostor_count = impostor.size();
    for (double far : protocol.fars) {
        report.vr_at_far.emplace_back(far, vr_at_far(genuine, impostor, far).first);
    }
    return report;
}

std::vector<RocPoint> roc_points(const std::vector<double>& genuine,
                                 const std::vector<double>& impostor) {
    if (genuine.empty() || impostor.empty()) {
        throw DataError("roc_points: empty score list");
    }
    std::vector<double> imp = impostor;
    std::sort(imp.begin(), imp.end());
    std::vector<double> gen = genuine;
    std::sort(gen.begin(), gen.end());

    std::vector<RocPoint> points;
    for (std::size_t i = 0; i < imp.size(); ++i) {
        if (i > 0 && imp[i] == imp[i - 1]) continue;
        const double t = imp[i];
        const double far = static_cast<double>(
                               imp.end() - std::lower_bound(imp.begin(), imp.end(), t)) /
                           static_cast<double>(imp.size());
        const double vr = static_cast<double>(
                              gen.end() - std::lower_bound(gen.begin(), gen.end(), t)) /
                          static_cast<double>(gen.size());
        points.push_back({t, far, vr});
    }
    return points;
}

void write_roc_csv(const std::vector<RocPoint>& points, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_roc_csv: cannot open " + path);
    out << "threshold,far,vr\n";
    for (const auto& p : points) {
        out << p.threshold << "," << p.far << "," << p.vr << "\n";
    }
    if (!out) throw IoError("write_roc_csv: write failure on " + path);
}

}  // namespace mmdl
