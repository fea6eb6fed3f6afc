#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ost/types.hpp"

namespace ost {

// "OSTE v1" embedding container, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "OSTE"
//   4       4     version (u32) = 1
//   8       4     rows (u32)
//   12      4     cols (u32)
//   16      8     flags (u64), bit 0 = unit_norm, other bits must be zero
//   24      4*r*c payload, IEEE-754 binary32, row-major
//
// Values are narrowed to float on write; reading widens back to double.
inline constexpr std::uint32_t kEmbedFormatVersion = 1;
inline constexpr std::size_t kEmbedHeaderBytes = 24;

std::vector<std::uint8_t> encode_embed_matrix(const EmbedMatrix& m);
EmbedMatrix decode_embed_matrix(std::span<const std::uint8_t> bytes);

// Throws IoError (with the path) when the file cannot be written.
void write_embed_matrix(const EmbedMatrix& m, const std::filesystem::path& destination);

// Throws IoError if the file cannot be opened, FormatError naming the
// first violated field otherwise.
EmbedMatrix read_embed_matrix(const std::filesystem::path& source);

// Whole-file helpers shared by the binary formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& source);
void write_file_bytes(const std::filesystem::path& destination,
                      std::span<const std::uint8_t> bytes);

}  // namespace ost
