#pragma once

#include <string>

#include "mmdl/errors.hpp"

namespace mmdl {

enum class Domain { NIR, VIS };

inline std::string to_string(Domain d) { return d == Domain::NIR ? "NIR" : "VIS"; }

inline Domain domain_from_string(const std::string& s) {
    if (s == "NIR") return Domain::NIR;
    if (s == "VIS") return Domain::VIS;
    throw DataError("unknown domain tag \"" + s + "\"");
}

}  // namespace mmdl
