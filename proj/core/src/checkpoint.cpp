#include "ost/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "byte_codec.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"

namespace ost {

namespace {
constexpr char kMagic[4] = {'O', 'S', 'T', 'P'};
}

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("parameter name too long: " + e.name.substr(0, 32) + "...");
    }
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.values.rows()));
    w.u32(static_cast<std::uint32_t>(e.values.cols()));
    for (double v : e.values.data()) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw ValidationError("parameter \"" + e.name + "\" overflows float32");
      w.f32(f);
    }
  }
  return w.take();
}

ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic");
  detail::ByteReader r(bytes);
  r.bytes(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("entry count");
  ParamSet out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint16_t len = r.u16("name length");
    const auto name_bytes = r.bytes(len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    if (r.remaining() < std::uint64_t{rows} * cols * 4) {
      throw FormatError("truncated: payload of \"" + name + "\"");
    }
    Matrix m(rows, cols);
    for (double& v : m.data()) {
      const float f = r.f32("payload");
      if (!std::isfinite(f)) throw FormatError("non-finite value in \"" + name + "\"");
      v = f;
    }
    try {
      out.add(std::move(name), std::move(m));
    } catch (const ValidationError& e) {
      throw FormatError(e.what());
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last entry");
  return out;
}

void write_checkpoint(const ParamSet& params, const std::filesystem::path& destination) {
  write_file_bytes(destination, encode_checkpoint(params));
}

ParamSet read_checkpoint(const std::filesystem::path& source) {
  const auto bytes = read_file_bytes(source);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(source.string() + ": " + e.what());
  }
}

}  // namespace ost
