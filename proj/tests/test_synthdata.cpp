#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "mmdl/errors.hpp"
#include "mmdl/synthdata.hpp"

using namespace mmdl;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.identities = 6;
    cfg.samples_per_identity_per_domain = 3;
    cfg.latent_dim = 8;
    cfg.input_dim = 12;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("generate counts, labels and domains") {
    SynthConfig cfg = small_config();
    cfg.first_identity = 100;
    const Dataset ds = generate(cfg);
    CHECK(ds.size() == 6 * 3 * 2);
    CHECK(ds.input_dim() == 12);

    std::map<std::size_t, std::pair<int, int>> per_id;  // (nir, vis) counts
    for (const Sample& s : ds.samples) {
        auto& c = per_id[s.identity];
        (s.domain == Domain::NIR ? c.first : c.second)++;
    }
    CHECK(per_id.size() == 6);
    for (const auto& [id, c] : per_id) {
        CHECK(id >= 100);
        CHECK(id < 106);
        CHECK(c.first == 3);
        CHECK(c.second == 3);
    }
    const auto ids = ds.identity_set();
    CHECK(ids.front() == 100);
    CHECK(ids.back() == 105);
}

TEST_CASE("generate is deterministic in the seed") {
    const SynthConfig cfg = small_config();
    CHECK(generate(cfg) == generate(cfg));
    SynthConfig other = cfg;
    other.seed = 12;
    CHECK(!(generate(cfg) == generate(other)));
}

TEST_CASE("zero gap and zero noise collapse the domains") {
    SynthConfig cfg = small_config();
    cfg.domain_gap = 0.0;
    cfg.noise_sigma = 0.0;
    const Dataset ds = generate(cfg);
    // with no gap and no noise every sample of an identity is the same point
    std::map<std::size_t, std::vector<const Sample*>> by_id;
    for (const Sample& s : ds.samples) by_id[s.identity].push_back(&s);
    for (const auto& [id, group] : by_id) {
        for (const Sample* s : group) {
            for (std::size_t j = 0; j < s->features.size(); ++j) {
                CHECK(std::fabs(s->features[j] - group[0]->features[j]) < 1e-12);
            }
        }
    }
}

TEST_CASE("noise-free cross-domain cosine is constant across identities") {
    SynthConfig cfg = small_config();
    cfg.noise_sigma = 0.0;
    cfg.domain_gap = 0.6;
    const Dataset ds = generate(cfg);

    std::map<std::size_t, std::pair<const Sample*, const Sample*>> pair_by_id;
    for (const Sample& s : ds.samples) {
        auto& p = pair_by_id[s.identity];
        (s.domain == Domain::NIR ? p.first : p.second) = &s;
    }
    // relative rotation angle is gap * pi/6, offsets add gap^2 to the norms
    const double expected = std::cos(0.6 * std::numbers::pi / 6.0) / (1.0 + 0.36);
    for (const auto& [id, p] : pair_by_id) {
        CHECK(std::fabs(cosine(p.first->features, p.second->features) - expected) <
              1e-10);
    }
}

TEST_CASE("generate validates its dimensions") {
    SynthConfig cfg = small_config();
    cfg.latent_dim = 7;  // must be even
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config();
    cfg.input_dim = cfg.latent_dim + 1;  // needs two offset directions
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config();
    cfg.identities = 0;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("csv round-trip reproduces the dataset exactly") {
    const Dataset ds = generate(small_config());
    const std::string path = temp_path("mmdl_synth_roundtrip.csv");
    write_dataset(ds, path);
    const Dataset back = read_dataset(path);
    CHECK(back == ds);

    // header spells out the layout
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("identity,domain,f0,", 0) == 0);
    std::remove(path.c_str());
}

TEST_CASE("read_dataset reports malformed rows with line numbers") {
    const std::string path = temp_path("mmdl_synth_bad.csv");
    {
        std::ofstream out(path);
        out << "identity,domain,f0,f1\n";
        out << "0,NIR,0.5,0.25\n";
        out << "0,IR,0.5,0.25\n";  // bad domain tag on line 3
    }
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("line 3"), DataError);

    {
        std::ofstream out(path);
        out << "identity,domain,f0,f1\n";
        out << "0,NIR,0.5\n";  // short row
    }
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("line 2"), DataError);

    std::ofstream(path) << "";
    CHECK_THROWS_AS(read_dataset(path), DataError);
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_dataset(temp_path("mmdl_synth_missing.csv")), IoError);
}

TEST_CASE("sample_batch contract") {
    const Dataset ds = generate(small_config());
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto batch = sample_batch(ds, 8, rng);
        REQUIRE(batch.size() == 8);
        std::set<std::size_t> seen_ids;
        for (std::size_t k = 0; k + 1 < batch.size(); k += 2) {
            const Sample& a = ds.samples[batch[k]];
            const Sample& b = ds.samples[batch[k + 1]];
            CHECK(a.identity == b.identity);
            CHECK(a.domain == Domain::NIR);
            CHECK(b.domain == Domain::VIS);
            CHECK(seen_ids.insert(a.identity).second);  // no repeated identity
        }
    }
    CHECK_THROWS_AS(sample_batch(ds, 7, rng), ConfigError);   // odd
    CHECK_THROWS_AS(sample_batch(ds, 14, rng), ConfigError);  // > 2 * identities
}

TEST_CASE("sample_batch covers identities uniformly") {
    const Dataset ds = generate(small_config());
    Rng rng(99);
    std::map<std::size_t, int> hits;
    const int draws = 10000;
    for (int trial = 0; trial < draws; ++trial) {
        for (std::size_t idx : sample_batch(ds, 4, rng)) {
            hits[ds.samples[idx].identity]++;
        }
    }
    // 2 identities per batch, 2 rows each -> expected 4 * draws / 6 per identity
    const double expected = 4.0 * draws / 6.0;
    REQUIRE(hits.size() == 6);
    for (const auto& [id, n] : hits) {
        CHECK(std::fabs(n - expected) / expected < 0.05);
    }
}
