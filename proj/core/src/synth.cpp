#include "ost/synth.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "ost/bank.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"
#include "ost/prompts.hpp"
#include "ost/random.hpp"

namespace ost {

void SynthConfig::validate() const {
  if (n_classes < 1) throw ValidationError("n_classes must be >= 1");
  if (items_per_class < 1) throw ValidationError("items_per_class must be >= 1");
  if (dim < 2) throw ValidationError("dim must be >= 2");
  if (frames_per_item < 1) throw ValidationError("frames_per_item must be >= 1");
  if (descriptors_per_class < 1) throw ValidationError("descriptors_per_class must be >= 1");
  if (!(noise_frames >= 0.0) || !(noise_desc >= 0.0)) {
    throw ValidationError("noise levels must be >= 0");
  }
  if (!(category_signal >= 0.0)) throw ValidationError("category_signal must be >= 0");
}

namespace {

std::vector<double> gaussian_direction(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// base + sigma * N(0, I), copied into row r of out.
void noisy_row(Rng& rng, std::span<const double> base, double sigma, Matrix& out, std::size_t r) {
  for (std::size_t j = 0; j < base.size(); ++j) out(r, j) = base[j] + sigma * rng.normal();
}

std::string numbered(const char* fmt, std::size_t a, std::size_t b = 0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

}  // namespace

SynthBenchmark synth_benchmark(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t d = cfg.dim;
  const std::size_t n = cfg.descriptors_per_class;

  std::vector<std::vector<double>> protos;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) protos.push_back(gaussian_direction(rng, d));
  const std::vector<double> common = gaussian_direction(rng, d);

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "emb", ec);
  std::filesystem::create_directories(out_dir / "items", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DescriptorBank bank;
  bank.n_spatio = n;
  bank.n_temporal = n;
  bank.template_version = "synthetic-v1";
  std::vector<EmbedMatrix> descriptors;  // spatio rows then temporal rows, per class

  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    const auto& p = protos[c];
    Matrix spatio(n, d);
    Matrix temporal(n, d);
    for (std::size_t r = 0; r < n; ++r) noisy_row(rng, p, cfg.noise_desc, spatio, r);
    for (std::size_t r = 0; r < n; ++r) noisy_row(rng, p, cfg.noise_desc, temporal, r);
    Matrix category(1, d);
    for (std::size_t j = 0; j < d; ++j) {
      category(0, j) = common[j] + cfg.category_signal * p[j] + cfg.noise_desc * rng.normal();
    }

    const auto s = EmbedMatrix::normalized(std::move(spatio));
    const auto t = EmbedMatrix::normalized(std::move(temporal));
    const std::string stem = numbered("emb/class_%02zu", c);
    write_embed_matrix(s, out_dir / (stem + "_spatio.oste"));
    write_embed_matrix(t, out_dir / (stem + "_temporal.oste"));
    write_embed_matrix(EmbedMatrix::normalized(std::move(category)),
                       out_dir / (stem + "_category.oste"));

    Matrix both(2 * n, d);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        both(r, j) = s.values()(r, j);
        both(n + r, j) = t.values()(r, j);
      }
    }
    descriptors.emplace_back(std::move(both), true);

    ClassEntry entry;
    entry.name = numbered("class_%02zu", c);
    for (std::size_t r = 0; r < n; ++r) {
      entry.spatio_texts.push_back(numbered("appearance cue %zu of class %zu", r, c));
      entry.temporal_texts_raw.push_back(numbered("motion step %zu of class %zu", r, c));
      entry.temporal_texts_conditioned.push_back(
          condition_on_category(entry.name, entry.temporal_texts_raw.back()));
    }
    entry.spatio_emb_ref = stem + "_spatio.oste";
    entry.temporal_emb_ref = stem + "_temporal.oste";
    entry.category_emb_ref = stem + "_category.oste";
    bank.classes.push_back(std::move(entry));
  }

  SynthBenchmark out;
  out.bank_path = out_dir / "bank.json";
  out.manifest_path = out_dir / "manifest.json";
  save_descriptor_bank(bank, out.bank_path);
  out.manifest.bank = "bank.json";

  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    const Matrix& anchors = descriptors[c].values();
    for (std::size_t i = 0; i < cfg.items_per_class; ++i) {
      Matrix frames(cfg.frames_per_item, d);
      for (std::size_t f = 0; f < cfg.frames_per_item; ++f) {
        const std::size_t pick = rng.below(anchors.rows());
        noisy_row(rng, anchors.row(pick), cfg.noise_frames, frames, f);
      }
      const std::string ref = numbered("items/c%02zu_i%03zu.oste", c, i);
      write_embed_matrix(EmbedMatrix::normalized(std::move(frames)), out_dir / ref);
      out.manifest.items.push_back({ref, bank.classes[c].name});
    }
  }
  save_eval_manifest(out.manifest, out.manifest_path);
  return out;
}

}  // namespace ost
