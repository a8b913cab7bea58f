#pragma once

// Synthetic labeled corpus with known artifact positions. Bonafide frames are
// Gaussian noise; spoofed utterances add a fixed unit-norm class signature to
// a contiguous window of frames.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tcas/manifest.hpp"
#include "tcas/tensor.hpp"

namespace tcas::feat {

struct SynthSpec {
  std::size_t total() const { return n_total ? n_total : 3 * n_per_class; }

  std::size_t n_per_class = 200;
  /// When nonzero, overrides 3·n_per_class; classes are assigned round-robin.
  std::size_t n_total = 0;
  std::size_t frames = 50;
  std::size_t channels = 24;
  std::size_t window_len = 10;
  double noise_scale = 0.25;
  std::uint64_t seed = 42;
};

struct ClassSignatures {
  nd::Tensor tts;  // {channels}
  nd::Tensor vc;
};

/// Signatures depend only on (seed, channels), so every split shares them.
ClassSignatures synth_signatures(const SynthSpec& spec);

struct SynthOutput {
  std::filesystem::path manifest;
  std::filesystem::path masks;
  std::vector<ManifestEntry> entries;
};

/// Writes `<split>.tsv`, `<split>.mask.tsv` and `<split>/<utt>.feat` under
/// out_dir. The split name selects the noise stream and the attack-id pool.
SynthOutput synthesize_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir,
                              const std::string& split);

}  // namespace tcas::feat
