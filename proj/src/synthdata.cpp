#include "mmdl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "mmdl/errors.hpp"

namespace mmdl {

std::vector<std::size_t> Dataset::identity_set() const {
    std::vector<std::size_t> ids;
    for (const auto& s : samples) ids.push_back(s.identity);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

Matrix Dataset::feature_matrix(const std::vector<std::size_t>& rows) const {
    const std::size_t d = input_dim();
    Matrix m(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& f = samples.at(rows[i]).features;
        if (f.size() != d) throw DataError("feature_matrix: inconsistent feature widths");
        for (std::size_t j = 0; j < d; ++j) m(i, j) = f[j];
    }
    return m;
}

namespace {

void validate(const SynthConfig& cfg) {
    if (cfg.identities < 1 || cfg.samples_per_identity_per_domain < 1 ||
        cfg.latent_dim < 1 || cfg.input_dim < cfg.latent_dim) {
        throw ConfigError("generate: counts must be >= 1 and input_dim >= latent_dim");
    }
    if (cfg.domain_gap < 0.0 || cfg.noise_sigma < 0.0) {
        throw ConfigError("generate: domain_gap and noise_sigma must be >= 0");
    }
    if (cfg.domain_gap > 0.0) {
        // The equal-angle rotation pairs latent coordinates, and the two
        // domain offsets live outside the latent subspace.
        if (cfg.latent_dim % 2 != 0) {
            throw ConfigError("generate: latent_dim must be even when domain_gap > 0");
        }
        if (cfg.input_dim < cfg.latent_dim + 2) {
            throw ConfigError("generate: input_dim must be >= latent_dim + 2 when "
                              "domain_gap > 0");
        }
    }
}

// Rotation by phi in every (2k, 2k+1) plane of the basis given by b's columns.
std::vector<double> rotate_equal_angle(const Matrix& basis, const std::vector<double>& u,
                                       double phi) {
    const std::size_t l = u.size();
    // coordinates in the plane basis
    std::vector<double> c(l, 0.0);
    for (std::size_t j = 0; j < l; ++j)
        for (std::size_t i = 0; i < l; ++i) c[j] += basis(i, j) * u[i];
    const double cs = std::cos(phi), sn = std::sin(phi);
    for (std::size_t k = 0; k + 1 < l; k += 2) {
        const double a = c[k], b = c[k + 1];
        c[k] = cs * a - sn * b;
        c[k + 1] = sn * a + cs * b;
    }
    std::vector<double> out(l, 0.0);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) out[i] += basis(i, j) * c[j];
    return out;
}

}  // namespace

Dataset generate(const SynthConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    const std::size_t l = cfg.latent_dim, d = cfg.input_dim;
    const double g = cfg.domain_gap;

    const Matrix plane_basis = rng.random_orthogonal(l);
    const Matrix frame = rng.random_orthogonal(d);  // columns: embedding + offsets
    const double phi = g * std::numbers::pi / 12.0;  // per-domain half-angle

    Dataset ds;
    ds.samples.reserve(cfg.identities * cfg.samples_per_identity_per_domain * 2);
    for (std::size_t id = 0; id < cfg.identities; ++id) {
        const std::vector<double> latent = rng.unit_vector(l);
        for (Domain dom : {Domain::NIR, Domain::VIS}) {
            const double sign = (dom == Domain::NIR) ? -1.0 : 1.0;
            const std::vector<double> rotated =
                (g > 0.0) ? rotate_equal_angle(plane_basis, latent, sign * phi) : latent;
            // embed and add the domain offset (frame column l or l+1)
            std::vector<double> base(d, 0.0);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < l; ++j) base[i] += frame(i, j) * rotated[j];
                if (g > 0.0) {
                    const std::size_t off_col = (dom == Domain::NIR) ? l : l + 1;
                    base[i] += g * frame(i, off_col);
                }
            }
            for (std::size_t s = 0; s < cfg.samples_per_identity_per_domain; ++s) {
                Sample sample;
                sample.identity = cfg.first_identity + id;
                sample.domain = dom;
                sample.features = base;
                for (double& v : sample.features) v += cfg.noise_sigma * rng.normal();
                ds.samples.push_back(std::move(sample));
            }
        }
    }
    return ds;
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
    if (!out) throw IoError("write_dataset: cannot open " + path);
    const std::size_t d = ds.input_dim();
    out << "identity,domain";
    for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
    out << "\n";
    char buf[64];
    for (const auto& s : ds.samples) {
        out << s.identity << "," << to_string(s.domain);
        for (double v : s.features) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write_dataset: write failure on " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("read_dataset: empty file " + path);
    if (line.rfind("identity,domain", 0) != 0) {
        throw DataError("read_dataset: bad header in " + path);
    }

    std::size_t width = 1;  // column count from the header
    for (char ch : line) {
        if (ch == ',') ++width;
    }

    Dataset ds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) {
            throw DataError("read_dataset: line " + std::to_string(line_no) +
                            ": expected at least 3 columns");
        }
        if (cells.size() != width) {
            throw DataError("read_dataset: line " + std::to_string(line_no) +
                            ": expected " + std::to_string(width) + " columns, got " +
                            std::to_string(cells.size()));
        }
        Sample s;
        try {
            std::size_t pos = 0;
            s.identity = std::stoull(cells[0], &pos);
            if (pos != cells[0].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError("read_dataset: line " + std::to_string(line_no) +
                            ": bad identity \"" + cells[0] + "\"");
        }
        try {
            s.domain = domain_from_string(cells[1]);
        } catch (const DataError& e) {
            throw DataError("read_dataset: line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        for (std::size_t j = 2; j < cells.size(); ++j) {
            char* end = nullptr;
            const double v = std::strtod(cells[j].c_str(), &end);
            if (end != cells[j].c_str() + cells[j].size() || cells[j].empty()) {
                throw DataError("read_dataset: line " + std::to_string(line_no) +
                                ": bad number \"" + cells[j] + "\"");
            }
            s.features.push_back(v);
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError("read_dataset: no samples in " + path);
    return ds;
}

std::vector<std::size_t> sample_batch(const Dataset& ds, std::size_t batch_size, Rng& rng) {
    if (batch_size < 4 || batch_size % 2 != 0) {
        throw ConfigError("sample_batch: batch size must be even and >= 4");
    }
    // identities that have samples in both domains
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_id;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        auto& entry = by_id[ds.samples[i].identity];
        (ds.samples[i].domain == Domain::NIR ? entry.first : entry.second).push_back(i);
    }
    std::vector<std::size_t> eligible;
    for (const auto& [id, lists] : by_id) {
        if (!lists.first.empty() && !lists.second.empty()) eligible.push_back(id);
    }
    const std::size_t want = batch_size / 2;
    if (eligible.size() < 2 || eligible.size() < want) {
        throw ConfigError("sample_batch: need " + std::to_string(std::max<std::size_t>(2, want)) +
                          " identities with both domains, have " +
                          std::to_string(eligible.size()));
    }

    const std::vector<std::size_t> chosen = rng.sample_without_replacement(eligible.size(), want);
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    for (std::size_t c : chosen) {
        const auto& lists = by_id.at(eligible[c]);
        batch.push_back(lists.first[rng.index(lists.first.size())]);
        batch.push_back(lists.second[rng.index(lists.second.size())]);
    }
    return batch;
}

}  // namespace mmdl
