#include "tcas/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "tcas/error.hpp"
#include "tcas/features.hpp"
#include "tcas/rng.hpp"

namespace tcas::feat {

namespace {

nd::Tensor unit_vector(Rng& rng, std::size_t n) {
  nd::Tensor v({n});
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v.data()) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v.data()) x /= norm;
  return v;
}

double cosine(const nd::Tensor& a, const nd::Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
  return d;  // unit vectors
}

void validate(const SynthSpec& spec) {
  if (spec.total() == 0 || spec.frames == 0 || spec.channels == 0)
    throw ConfigError("synth: counts and extents must be positive");
  if (spec.window_len < 1 || spec.window_len > spec.frames)
    throw ConfigError("synth: window_len must lie in [1, frames]");
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale))
    throw ConfigError("synth: noise_scale must be finite and >= 0");
}

struct AttackPool {
  std::vector<std::string> tts;
  std::vector<std::string> vc;
};

AttackPool attack_pool(const std::string& split) {
  if (split == "eval") return {{"A07", "A08", "A09", "A10", "A11", "A12", "A16"}, {"A13", "A14", "A15", "A17", "A18", "A19"}};
  return {{"A01", "A02", "A03", "A04"}, {"A05", "A06"}};
}

}  // namespace

ClassSignatures synth_signatures(const SynthSpec& spec) {
  validate(spec);
  Rng rng = Rng::stream(spec.seed, "signature");
  ClassSignatures sig{unit_vector(rng, spec.channels), unit_vector(rng, spec.channels)};
  // Redraw vc while cos > 0.5 (impossible to satisfy when C = 1).
  while (spec.channels > 1 && cosine(sig.tts, sig.vc) > 0.5) sig.vc = unit_vector(rng, spec.channels);
  return sig;
}

SynthOutput synthesize_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir, const std::string& split) {
  validate(spec);
  if (split.empty()) throw ConfigError("synth: split name must not be empty");
  const ClassSignatures sig = synth_signatures(spec);
  const AttackPool pool = attack_pool(split);

  std::error_code ec;
  std::filesystem::create_directories(out_dir / split, ec);
  if (ec) throw IoError("cannot create " + (out_dir / split).string() + ": " + ec.message());

  Rng rng = Rng::stream(spec.seed, "data/" + split);
  SynthOutput out{out_dir / (split + ".tsv"), out_dir / (split + ".mask.tsv"), {}};
  std::vector<std::pair<std::string, PlantWindow>> windows;
  const std::array<Label, 3> order = {Label::bonafide, Label::tts, Label::vc};
  std::size_t tts_count = 0, vc_count = 0;

  for (std::size_t i = 0; i < spec.total(); ++i) {
    const Label label = order[i % order.size()];
    char id[64];
    std::snprintf(id, sizeof id, "%s_%05zu", split.c_str(), out.entries.size());
    nd::Tensor frames({spec.frames, spec.channels});
    for (auto& v : frames.data()) v = spec.noise_scale * rng.normal();

    ManifestEntry entry{id, split + "/" + id + ".feat", label, "-"};
    if (label != Label::bonafide) {
      const nd::Tensor& p = label == Label::tts ? sig.tts : sig.vc;
      const std::size_t start = rng.below(spec.frames - spec.window_len + 1);
      for (std::size_t t = start; t < start + spec.window_len; ++t)
        for (std::size_t c = 0; c < spec.channels; ++c) frames.at(t, c) += p[c];
      windows.emplace_back(id, PlantWindow{start, start + spec.window_len - 1});
      entry.attack_id = label == Label::tts ? pool.tts[tts_count++ % pool.tts.size()]
                                            : pool.vc[vc_count++ % pool.vc.size()];
    }
    write_features(FeatureSeq{id, std::move(frames), kDefaultFrameStride}, out_dir / entry.path);
    out.entries.push_back(std::move(entry));
  }
  write_manifest(out.entries, out.manifest);
  write_plant_windows(windows, out.masks);
  return out;
}

}  // namespace tcas::feat
