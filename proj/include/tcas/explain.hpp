#pragma once

// Temporal class activation maps: extraction, rendering and localization scoring.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tcas/manifest.hpp"
#include "tcas/tensor.hpp"

namespace tcas::explain {

using nd::Tensor;

/// Per-frame, per-class activation, T′×K. When the map carries an utterance
/// row it is the last one.
struct TcaMap {
  std::string utt_id;
  std::vector<std::string> class_names;
  Tensor values;
  bool has_utterance_row = true;

  std::size_t num_frames() const { return values.rows() - (has_utterance_row ? 1 : 0); }
};

/// values[t,k] = z[k]·Σ_c S[t,c]·M[c,k]
Tensor tca_values(const Tensor& embed, const Tensor& gate, const Tensor& z);

TcaMap extract_tca_map(const Tensor& embed, const Tensor& gate, const Tensor& z, std::vector<std::string> class_names,
                       std::string utt_id, bool has_utterance_row);

using Rgb = std::array<std::uint8_t, 3>;

struct RenderSpec {
  std::vector<Rgb> palette = {Rgb{0, 158, 115}, Rgb{230, 159, 0}, Rgb{0, 114, 178}};
  /// Each map cell becomes a cell_width × cell_height block in the pixmap.
  std::size_t cell_width = 1;
  std::size_t cell_height = 1;
};

/// Clamped, max-abs normalized intensity in [0, 1]; 0 for an all-zero map.
double normalized_intensity(const TcaMap& map, std::size_t row, std::size_t cls);

/// Text rendering: a glyph line (argmax class initial, upper case in the top
/// intensity bucket) and a shade line per frame, then the utterance row
/// as a separate strip. Zero cells render as "·".
std::string render_ascii(const TcaMap& map, const RenderSpec& spec = {});

/// Binary "P6" pixmap: one row per class plus a composite argmax row,
/// one column per map row.
std::vector<std::uint8_t> encode_ppm(const TcaMap& map, const RenderSpec& spec = {});
void export_ppm(const TcaMap& map, const RenderSpec& spec, const std::filesystem::path& path);

/// "frame,class,value" with full-precision values.
std::string encode_csv(const TcaMap& map);
void export_csv(const TcaMap& map, const std::filesystem::path& path);
/// Parses encode_csv output back; class names must be known in advance.
TcaMap parse_csv(const std::string& text, const std::vector<std::string>& class_names, std::string utt_id,
                 bool has_utterance_row);

/// Rank AUC of values[:, true_class] for planted vs unplanted frames (ties
/// count 1/2). The utterance row is excluded.
double localization_score(const TcaMap& map, const feat::PlantMask& mask, std::size_t true_class);

}  // namespace tcas::explain
