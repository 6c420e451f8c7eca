#pragma once

#include <filesystem>

#include "presort/net.hpp"

namespace presort {

/// Versioned little-endian container:
///   "PSCK" | u32 version | NetConfig | u32 tensor count |
///   per tensor: u32 name length, name, u32 rank, u32 dims..., float32 data (row-major)
void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace presort
