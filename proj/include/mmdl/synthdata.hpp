#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmdl/domain.hpp"
#include "mmdl/matrix.hpp"
#include "mmdl/rng.hpp"

namespace mmdl {

// A feature vector standing in for a face image.
struct Sample {
    std::vector<double> features;
    std::size_t identity = 0;
    Domain domain = Domain::NIR;

    bool operator==(const Sample& other) const = default;
};

struct Dataset {
    std::vector<Sample> samples;

    bool operator==(const Dataset& other) const = default;

    std::size_t size() const { return samples.size(); }
    std::size_t input_dim() const { return samples.empty() ? 0 : samples[0].features.size(); }
    std::vector<std::size_t> identity_set() const;  // sorted, unique

    Matrix feature_matrix(const std::vector<std::size_t>& rows) const;
};

struct SynthConfig {
    std::size_t identities = 40;
    std::size_t samples_per_identity_per_domain = 8;
    std::size_t latent_dim = 16;
    std::size_t input_dim = 32;
    double domain_gap = 0.6;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
    std::size_t first_identity = 0;  // label offset, keeps train/test disjoint
};

// Each identity gets one latent on the unit sphere shared by both domains.
// The domain transform is an equal-angle rotation (+/- gap*pi/4 per domain)
// plus an off-subspace offset scaled by the gap, embedded into input_dim with
// additive Gaussian noise. Deterministic given the seed.
Dataset generate(const SynthConfig& cfg);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// batch_size/2 identities without replacement, one NIR + one VIS sample each.
// Returned values are indices into ds.samples.
std::vector<std::size_t> sample_batch(const Dataset& ds, std::size_t batch_size, Rng& rng);

}  // namespace mmdl
