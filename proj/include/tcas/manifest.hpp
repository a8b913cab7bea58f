#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcas::feat {

enum class Label { bonafide, tts, vc };

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view text);
/// Attack family of an ASVspoof2019-LA attack id (A01..A19), if known.
std::optional<Label> attack_family(std::string_view attack_id);

struct ManifestEntry {
  std::string utt_id;
  std::string path;
  Label label = Label::bonafide;
  std::string attack_id = "-";
};

/// Reads a TSV manifest (utt_id, path, label, attack_id; '#' comments).
/// Throws ParseError naming the offending line.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
/// Entry paths are relative to the manifest's directory.
std::filesystem::path resolve_entry(const std::filesystem::path& manifest, const ManifestEntry& entry);

/// Frames where an artifact was injected.
struct PlantMask {
  std::string utt_id;
  std::vector<bool> planted;
};

struct PlantWindow {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
};

/// TSV utt_id, start_frame, end_frame (0-based, inclusive).
std::map<std::string, PlantWindow> load_plant_windows(const std::filesystem::path& path);
void write_plant_windows(const std::vector<std::pair<std::string, PlantWindow>>& rows,
                         const std::filesystem::path& path);
/// Expands a window table row into a mask of num_frames; absent id → all false.
PlantMask make_plant_mask(const std::map<std::string, PlantWindow>& windows, const std::string& utt_id,
                          std::size_t num_frames);

}  // namespace tcas::feat
