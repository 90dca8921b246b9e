#pragma once

#include <iosfwd>
#include <string>

#include "qim/measurements.hpp"

namespace qim {

/// Container layout (all integers little-endian):
///
///   8 bytes   magic "QIMENS\0\1"
///   8 bytes   header length H (uint64)
///   H bytes   UTF-8 JSON header with sorted keys:
///             {"field","format_version","kind","m","n","patterns",
///              "payload","payload_bytes","seed"}
///   payload   float64 values, row-major; complex values interleaved re, im.
///             explicit real: m x n rows; explicit complex: m x n rows;
///             cdp: L x n masks.
void write_ensemble(std::ostream& out, const SensingEnsemble& ensemble);
SensingEnsemble read_ensemble(std::istream& in);

void save_ensemble(const std::string& path, const SensingEnsemble& ensemble);
SensingEnsemble load_ensemble(const std::string& path);

}  // namespace qim
