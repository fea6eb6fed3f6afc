#include "ost/embed_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "byte_codec.hpp"
#include "ost/error.hpp"

namespace ost {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'T', 'E'};
constexpr std::uint64_t kFlagUnitNorm = 1;

}  // namespace

std::vector<std::uint8_t> encode_embed_matrix(const EmbedMatrix& m) {
  const Matrix& v = m.values();
  if (v.rows() > std::numeric_limits<std::uint32_t>::max() ||
      v.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("matrix too large for OSTE");
  }
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kEmbedFormatVersion);
  w.u32(static_cast<std::uint32_t>(v.rows()));
  w.u32(static_cast<std::uint32_t>(v.cols()));
  w.u64(m.unit_norm() ? kFlagUnitNorm : 0);
  for (double x : v.data()) {
    const auto f = static_cast<float>(x);
    if (!std::isfinite(f)) throw ValidationError("value overflows float32: " + std::to_string(x));
    w.f32(f);
  }
  return w.take();
}

EmbedMatrix decode_embed_matrix(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic");
  }
  r.bytes(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kEmbedFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = r.u32("rows");
  const std::uint32_t cols = r.u32("cols");
  const std::uint64_t flags = r.u64("flags");
  if (rows == 0) throw FormatError("rows must be >= 1");
  if (cols == 0) throw FormatError("cols must be >= 1");
  if ((flags & ~kFlagUnitNorm) != 0) throw FormatError("flags: unknown bits set");

  const std::uint64_t count = std::uint64_t{rows} * cols;
  if (r.remaining() < count * 4) {
    throw FormatError("truncated: payload has " + std::to_string(r.remaining()) +
                      " bytes, expected " + std::to_string(count * 4));
  }
  if (r.remaining() > count * 4) {
    throw FormatError("trailing bytes after payload");
  }
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      const float f = r.f32("payload");
      if (!std::isfinite(f)) {
        throw FormatError("non-finite value at row " + std::to_string(i) + " col " +
                          std::to_string(j));
      }
      m(i, j) = f;
    }
  }
  try {
    return EmbedMatrix(std::move(m), (flags & kFlagUnitNorm) != 0);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("unit_norm: ") + e.what());
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open " + source.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + source.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& destination,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + destination.string());
}

void write_embed_matrix(const EmbedMatrix& m, const std::filesystem::path& destination) {
  write_file_bytes(destination, encode_embed_matrix(m));
}

EmbedMatrix read_embed_matrix(const std::filesystem::path& source) {
  const auto bytes = read_file_bytes(source);
  try {
    return decode_embed_matrix(bytes);
  } catch (const FormatError& e) {
    throw FormatError(source.string() + ": " + e.what());
  }
}

}  // namespace ost
