#include "tcas/explain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tcas/error.hpp"

namespace tcas::explain {

Tensor tca_values(const Tensor& embed, const Tensor& gate, const Tensor& z) {
  if (embed.rank() != 2 || gate.rank() != 2 || embed.cols() != gate.rows() || gate.cols() != z.size())
    throw DimensionError("tca_values: S " + nd::shape_str(embed.shape()) + ", M " + nd::shape_str(gate.shape()) +
                         ", z " + nd::shape_str(z.shape()) + " do not conform");
  const std::size_t rows = embed.rows(), c = embed.cols(), k = z.size();
  Tensor out({rows, k});
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) acc += embed.at(t, ch) * gate.at(ch, j);
      out.at(t, j) = z[j] * acc;
    }
  return out;
}

TcaMap extract_tca_map(const Tensor& embed, const Tensor& gate, const Tensor& z, std::vector<std::string> class_names,
                       std::string utt_id, bool has_utterance_row) {
  if (class_names.size() != z.size()) throw DimensionError("extract_tca_map: one class name per logit required");
  if (has_utterance_row && embed.rows() < 2) throw DimensionError("extract_tca_map: no frame rows besides the utterance row");
  return TcaMap{std::move(utt_id), std::move(class_names), tca_values(embed, gate, z), has_utterance_row};
}

namespace {

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

std::size_t argmax_class(const TcaMap& map, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < map.values.cols(); ++k)
    if (map.values.at(row, k) > map.values.at(row, best)) best = k;
  return best;
}

void check_palette(const TcaMap& map, const RenderSpec& spec) {
  if (spec.palette.size() < map.values.cols())
    throw UsageError("render: palette has " + std::to_string(spec.palette.size()) + " colors for " +
                     std::to_string(map.values.cols()) + " classes");
}

int bucket(double intensity) {
  if (intensity <= 0.0) return -1;
  if (intensity < 1.0 / 3.0) return 0;
  if (intensity < 2.0 / 3.0) return 1;
  return 2;
}

constexpr const char* kNeutral = "·";
constexpr const char* kShades[3] = {"░", "▒", "█"};

char initial(const std::string& name, bool upper) {
  const char c = name.empty() ? '?' : name.front();
  return static_cast<char>(upper ? std::toupper(static_cast<unsigned char>(c)) : std::tolower(static_cast<unsigned char>(c)));
}

std::uint8_t scaled(std::uint8_t channel, double intensity) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(channel * intensity), 0, 255));
}

}  // namespace

double normalized_intensity(const TcaMap& map, std::size_t row, std::size_t cls) {
  const double scale = max_abs(map.values);
  if (scale == 0.0) return 0.0;
  return std::clamp(map.values.at(row, cls) / scale, 0.0, 1.0);
}

std::string render_ascii(const TcaMap& map, const RenderSpec& spec) {
  check_palette(map, spec);
  std::string glyphs, shades;
  auto cell = [&](std::size_t row, std::string& g, std::string& s) {
    const std::size_t k = argmax_class(map, row);
    const int b = bucket(normalized_intensity(map, row, k));
    if (b < 0) {
      g += kNeutral;
      s += kNeutral;
      return;
    }
    g += initial(map.class_names[k], b == 2);
    s += kShades[b];
  };
  for (std::size_t t = 0; t < map.num_frames(); ++t) cell(t, glyphs, shades);

  std::ostringstream os;
  os << "utt " << map.utt_id << "  classes:";
  for (const auto& name : map.class_names) os << ' ' << initial(name, false) << '=' << name;
  os << '\n';
  os << "frames |" << glyphs << "|\n";
  os << "shade  |" << shades << "|\n";
  if (map.has_utterance_row) {
    std::string g, s;
    cell(map.values.rows() - 1, g, s);
    os << "utt    |" << g << s << "|\n";
  }
  return os.str();
}

std::vector<std::uint8_t> encode_ppm(const TcaMap& map, const RenderSpec& spec) {
  check_palette(map, spec);
  if (spec.cell_width == 0 || spec.cell_height == 0) throw ConfigError("render: cell size must be positive");
  const std::size_t cols = map.values.rows(), classes = map.values.cols();
  const std::size_t width = cols * spec.cell_width, height = (classes + 1) * spec.cell_height;

  // Logical image: classes rows then the composite row.
  std::vector<Rgb> cells((classes + 1) * cols);
  for (std::size_t t = 0; t < cols; ++t) {
    for (std::size_t k = 0; k < classes; ++k) {
      const double i = normalized_intensity(map, t, k);
      const Rgb& c = spec.palette[k];
      cells[k * cols + t] = {scaled(c[0], i), scaled(c[1], i), scaled(c[2], i)};
    }
    const std::size_t best = argmax_class(map, t);
    cells[classes * cols + t] = cells[best * cols + t];
  }

  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + 3 * width * height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const Rgb& c = cells[(y / spec.cell_height) * cols + x / spec.cell_width];
      bytes.insert(bytes.end(), c.begin(), c.end());
    }
  return bytes;
}

void export_ppm(const TcaMap& map, const RenderSpec& spec, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(map, spec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

std::string encode_csv(const TcaMap& map) {
  if (map.class_names.size() != map.values.cols()) throw DimensionError("encode_csv: class names do not match map");
  std::string out = "frame,class,value\n";
  char buf[64];
  for (std::size_t t = 0; t < map.values.rows(); ++t)
    for (std::size_t k = 0; k < map.values.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", map.values.at(t, k));
      out += std::to_string(t) + "," + map.class_names[k] + "," + buf + "\n";
    }
  return out;
}

void export_csv(const TcaMap& map, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << encode_csv(map);
  if (!os) throw IoError("write failed for " + path.string());
}

TcaMap parse_csv(const std::string& text, const std::vector<std::string>& class_names, std::string utt_id,
                 bool has_utterance_row) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line) || line != "frame,class,value") throw ParseError("missing CSV header", line_no);
  std::vector<double> values;
  std::size_t max_frame = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw ParseError("expected 3 fields", line_no);
    std::size_t frame = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + c1, frame);
    if (ec != std::errc{} || ptr != line.data() + c1) throw ParseError("bad frame index", line_no);
    const std::string cls = line.substr(c1 + 1, c2 - c1 - 1);
    const std::size_t expected_row = values.size() / class_names.size();
    const std::size_t expected_cls = values.size() % class_names.size();
    if (frame != expected_row || cls != class_names[expected_cls]) throw ParseError("rows out of order", line_no);
    char* end = nullptr;
    const std::string num = line.substr(c2 + 1);
    values.push_back(std::strtod(num.c_str(), &end));
    if (end == num.c_str()) throw ParseError("bad value '" + num + "'", line_no);
    max_frame = frame;
  }
  if (values.empty() || values.size() % class_names.size() != 0) throw ParseError("incomplete map", line_no);
  return TcaMap{std::move(utt_id), class_names, Tensor({max_frame + 1, class_names.size()}, std::move(values)),
                has_utterance_row};
}

double localization_score(const TcaMap& map, const feat::PlantMask& mask, std::size_t true_class) {
  const std::size_t frames = map.num_frames();
  if (mask.planted.size() != frames)
    throw UsageError("localization_score: mask has " + std::to_string(mask.planted.size()) + " frames, map has " +
                     std::to_string(frames));
  if (true_class >= map.values.cols()) throw UsageError("localization_score: class out of range");
  const std::size_t n_pos = static_cast<std::size_t>(std::count(mask.planted.begin(), mask.planted.end(), true));
  const std::size_t n_neg = frames - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UsageError("localization_score: mask needs planted and unplanted frames");

  std::vector<std::size_t> order(frames);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.values.at(a, true_class) < map.values.at(b, true_class);
  });
  // Average ranks (1-based) over tie groups.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < frames;) {
    std::size_t j = i;
    const double v = map.values.at(order[i], true_class);
    while (j < frames && map.values.at(order[j], true_class) == v) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t q = i; q < j; ++q)
      if (mask.planted[order[q]]) rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(n_pos), n = static_cast<double>(n_neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace tcas::explain
