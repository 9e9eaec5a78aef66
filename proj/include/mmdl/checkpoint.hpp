#pragma once

#include <string>

#include "mmdl/decorr.hpp"
#include "mmdl/encoder.hpp"
#include "mmdl/losses.hpp"

namespace mmdl {

struct Checkpoint {
    NetworkParams params;
    DecorrLayer decorr;
    HamlHead head;
};

// Single file: one JSON header line (dims and scalars), then the raw
// little-endian 64-bit floats of every matrix in declared order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// expected_n / expected_q of 0 skip the corresponding dimension check.
Checkpoint load_checkpoint(const std::string& path, std::size_t expected_n = 0,
                           std::size_t expected_q = 0);

}  // namespace mmdl
