#include "tcas/manifest.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "tcas/error.hpp"

namespace tcas::feat {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find('\t', begin);
    out.push_back(line.substr(begin, pos - begin));
    if (pos == std::string::npos) break;
    begin = pos + 1;
  }
  return out;
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::size_t parse_index(const std::string& text, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ParseError("bad frame index '" + text + "'", line_no);
  return v;
}

}  // namespace

std::string_view label_name(Label label) {
  switch (label) {
    case Label::bonafide: return "bonafide";
    case Label::tts: return "tts";
    case Label::vc: return "vc";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "bonafide") return Label::bonafide;
  if (text == "tts") return Label::tts;
  if (text == "vc") return Label::vc;
  return std::nullopt;
}

std::optional<Label> attack_family(std::string_view attack_id) {
  if (attack_id.size() != 3 || attack_id[0] != 'A') return std::nullopt;
  int n = 0;
  const auto [ptr, ec] = std::from_chars(attack_id.data() + 1, attack_id.data() + 3, n);
  if (ec != std::errc() || ptr != attack_id.data() + 3) return std::nullopt;
  if (n >= 1 && n <= 4) return Label::tts;
  if (n == 5 || n == 6) return Label::vc;
  if ((n >= 7 && n <= 12) || n == 16) return Label::tts;
  if ((n >= 13 && n <= 15) || (n >= 17 && n <= 19)) return Label::vc;
  return std::nullopt;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 4)
      throw ParseError("expected 4 tab-separated columns, got " + std::to_string(cols.size()), line_no);
    ManifestEntry e;
    e.utt_id = cols[0];
    e.path = cols[1];
    e.attack_id = cols[3];
    if (e.utt_id.empty() || e.path.empty()) throw ParseError("empty utt_id or path", line_no);
    const auto label = parse_label(cols[2]);
    if (!label) throw ParseError("unknown label '" + cols[2] + "'", line_no);
    e.label = *label;
    if (e.label == Label::bonafide && e.attack_id != "-")
      throw ParseError("bonafide entry must have attack_id '-'", line_no);
    if (e.label != Label::bonafide) {
      if (e.attack_id == "-") throw ParseError("spoofed entry needs an attack_id", line_no);
      const auto family = attack_family(e.attack_id);
      if (family && *family != e.label)
        throw ParseError("attack " + e.attack_id + " is not a " + std::string(label_name(e.label)) + " attack",
                         line_no);
    }
    if (!seen.insert(e.utt_id).second) throw ParseError("duplicate utt_id '" + e.utt_id + "'", line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "# utt_id\tpath\tlabel\tattack_id\n";
  for (const auto& e : entries) os << e.utt_id << '\t' << e.path << '\t' << label_name(e.label) << '\t' << e.attack_id << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

std::filesystem::path resolve_entry(const std::filesystem::path& manifest, const ManifestEntry& entry) {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

std::map<std::string, PlantWindow> load_plant_windows(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open plant mask file " + path.string());
  std::map<std::string, PlantWindow> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3) throw ParseError("expected 3 tab-separated columns", line_no);
    PlantWindow w{parse_index(cols[1], line_no), parse_index(cols[2], line_no)};
    if (w.end < w.start) throw ParseError("end_frame before start_frame", line_no);
    if (!out.emplace(cols[0], w).second) throw ParseError("duplicate utt_id '" + cols[0] + "'", line_no);
  }
  return out;
}

void write_plant_windows(const std::vector<std::pair<std::string, PlantWindow>>& rows,
                         const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "# utt_id\tstart_frame\tend_frame\n";
  for (const auto& [id, w] : rows) os << id << '\t' << w.start << '\t' << w.end << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

PlantMask make_plant_mask(const std::map<std::string, PlantWindow>& windows, const std::string& utt_id,
                          std::size_t num_frames) {
  PlantMask mask{utt_id, std::vector<bool>(num_frames, false)};
  if (const auto it = windows.find(utt_id); it != windows.end()) {
    if (it->second.end >= num_frames) throw UsageError("plant window for " + utt_id + " exceeds frame count");
    for (std::size_t t = it->second.start; t <= it->second.end; ++t) mask.planted[t] = true;
  }
  return mask;
}

}  // namespace tcas::feat
