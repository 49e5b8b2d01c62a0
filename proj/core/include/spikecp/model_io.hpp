#pragma once

#include <iosfwd>
#include <string>

#include "spikecp/snn.hpp"

namespace spikecp {

inline constexpr const char* kModelFormat = "spikecp-model/1";

/// Human-readable key/value model file with row-major weight matrices.
/// Doubles are written with 17 significant digits, so round-trips are exact.
void save_model(std::ostream& os, const NetworkParams& params);
void save_model(const std::string& path, const NetworkParams& params);

NetworkParams load_model(std::istream& is, const std::string& name = "<stream>");
NetworkParams load_model(const std::string& path);

}  // namespace spikecp
