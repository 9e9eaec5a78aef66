#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmdl/decorr.hpp"
#include "mmdl/encoder.hpp"
#include "mmdl/matrix.hpp"
#include "mmdl/synthdata.hpp"

namespace mmdl {

struct RocPoint {
    double threshold;
    double far;
    double vr;
};

struct EvalReport {
    double rank1 = 0.0;
    std::vector<std::pair<std::size_t, double>> rank_k;   // (k, fraction)
    std::vector<std::pair<double, double>> vr_at_far;     // (far, vr)
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;

    std::string to_json() const;
};

struct EvalProtocol {
    std::vector<std::size_t> ks = {1, 5, 10};
    std::vector<double> fars = {0.1, 0.01, 0.001};
};

// Entry (i, j) = cosine similarity of probe row i and gallery row j.
Matrix similarity_matrix(const Matrix& probe, const Matrix& gallery);

// Fraction of probes whose top-k gallery entries (descending similarity, ties
// to the lower gallery index) contain the probe's identity.
double rank_k_accuracy(const Matrix& s, const std::vector<std::size_t>& probe_labels,
                       const std::vector<std::size_t>& gallery_labels, std::size_t k);

// Threshold = smallest impostor score t with FAR(t) <= far (impostor max plus
// one ulp when even that fails); VR = fraction of genuine scores >= t.
std::pair<double, double> vr_at_far(const std::vector<double>& genuine,
                                    const std::vector<double>& impostor, double far);

// Full protocol: NIR samples are probes, VIS samples the gallery.
EvalReport evaluate(const NetworkParams& params, const DecorrLayer& layer,
                    const Dataset& test_set, const EvalProtocol& protocol = {});

// Optional ROC trace for plotting: one point per distinct impostor threshold.
std::vector<RocPoint> roc_points(const std::vector<double>& genuine,
                                 const std::vector<double>& impostor);
void write_roc_csv(const std::vector<RocPoint>& points, const std::string& path);

}  // namespace mmdl
