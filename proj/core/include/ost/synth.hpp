#pragma once

#include <cstdint>
#include <filesystem>

#include "ost/evaluate.hpp"

namespace ost {

// Planted zero-shot benchmark.
//
// Class prototypes are uniform on the unit sphere. Each class gets
// `descriptors_per_class` spatio and temporal descriptors, each the
// prototype plus isotropic Gaussian noise (per-coordinate sd noise_desc),
// renormalized. Every frame of an item depicts one of its class's
// descriptors picked at random, plus per-coordinate noise noise_frames,
// renormalized. Category embeddings share one common direction and carry
// only a weak prototype component (plus noise_desc noise), so the bare
// class names are semantically dense.
struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_classes = 10;
  std::size_t items_per_class = 20;
  std::size_t dim = 32;
  double noise_frames = 0.3;
  double noise_desc = 0.2;
  std::size_t frames_per_item = 2;
  std::size_t descriptors_per_class = 3;
  // Weight of the class prototype inside a category embedding, relative to
  // the shared direction.
  double category_signal = 0.5;

  void validate() const;
};

struct SynthBenchmark {
  EvalManifest manifest;
  std::filesystem::path manifest_path;
  std::filesystem::path bank_path;
};

// Writes bank.json, manifest.json, emb/*.oste and items/*.oste under
// out_dir. The same config always produces byte-identical files.
SynthBenchmark synth_benchmark(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace ost
