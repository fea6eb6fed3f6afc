#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ost/analysis.hpp"

namespace ost {

// "OSTP v1" parameter container, little-endian:
//   magic "OSTP", version u32 = 1, entry count u32, then per entry
//   name length u16, UTF-8 name, rows u32, cols u32, rows*cols f32 row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const ParamSet& params, const std::filesystem::path& destination);
ParamSet read_checkpoint(const std::filesystem::path& source);

}  // namespace ost
