#include "tcas/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "tcas/config.hpp"
#include "tcas/error.hpp"

namespace tcas::metrics {

namespace {

void split_by_key(std::span<const ScoreRecord> scores, std::vector<double>& bona, std::vector<double>& spoof) {
  for (const auto& r : scores) (r.key == Key::bonafide ? bona : spoof).push_back(r.score);
}

void require_both(std::size_t bona, std::size_t spoof) {
  if (bona == 0 || spoof == 0) throw UsageError("scoring needs at least one bonafide and one spoof trial");
}

AttackEer attack_eer(const std::string& attack, const std::vector<double>& bona, const std::vector<double>& spoof) {
  return {attack, spoof.size(), compute_eer(bona, spoof).eer};
}

std::map<std::string, std::vector<double>> group_spoof(std::span<const ScoreRecord> scores) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : scores)
    if (r.key == Key::spoof) groups[r.attack_id].push_back(r.score);
  return groups;
}

Breakdown breakdown_impl(std::span<const ScoreRecord> scores, const std::vector<std::string>& expected, bool parallel) {
  std::vector<double> bona, spoof;
  split_by_key(scores, bona, spoof);
  require_both(bona.size(), spoof.size());
  const auto groups = group_spoof(scores);

  Breakdown out;
  out.pooled_eer = compute_eer(bona, spoof).eer;
  std::vector<std::pair<std::string, const std::vector<double>*>> work;
  for (const auto& [attack, s] : groups) work.emplace_back(attack, &s);
  out.per_attack.resize(work.size());
  const auto n = static_cast<std::ptrdiff_t>(work.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out.per_attack[idx] = attack_eer(work[idx].first, bona, *work[idx].second);
  }
  for (const auto& a : expected)
    if (!groups.contains(a)) out.skipped.push_back(a);
  return out;
}

}  // namespace

std::vector<OperatingPoint> sweep(std::span<const double> bonafide, std::span<const double> spoof) {
  std::vector<double> b(bonafide.begin(), bonafide.end()), s(spoof.begin(), spoof.end());
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> thresholds;
  thresholds.reserve(b.size() + s.size());
  std::merge(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nb = static_cast<double>(b.size()), ns = static_cast<double>(s.size());
  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size() + 1);
  std::size_t bi = 0, si = 0;  // counts strictly below the threshold
  for (double th : thresholds) {
    while (bi < b.size() && b[bi] < th) ++bi;
    while (si < s.size() && s[si] < th) ++si;
    points.push_back({th, static_cast<double>(bi) / nb, static_cast<double>(s.size() - si) / ns});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

EerResult eer_from_sweep(std::span<const OperatingPoint> points) {
  if (points.empty()) throw UsageError("eer_from_sweep: empty sweep");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = points[i].p_miss - points[i].p_fa;
    if (d < 0.0) continue;
    if (d == 0.0 || i == 0) return {points[i].p_miss, points[i].threshold};
    const OperatingPoint& lo = points[i - 1];
    const OperatingPoint& hi = points[i];
    const double d_lo = lo.p_miss - lo.p_fa;
    const double t = -d_lo / (d - d_lo);
    const double eer = lo.p_miss + t * (hi.p_miss - lo.p_miss);
    const double th = std::isfinite(hi.threshold) ? lo.threshold + t * (hi.threshold - lo.threshold) : lo.threshold;
    return {eer, th};
  }
  return {points.back().p_miss, points.back().threshold};
}

EerResult compute_eer(std::span<const double> bonafide, std::span<const double> spoof) {
  require_both(bonafide.size(), spoof.size());
  const auto points = sweep(bonafide, spoof);
  return eer_from_sweep(points);
}

EerResult compute_eer(std::span<const ScoreRecord> scores) {
  std::vector<double> bona, spoof;
  split_by_key(scores, bona, spoof);
  return compute_eer(bona, spoof);
}

TdcfCosts TdcfCostModel::costs() const {
  return {p_tar * (c_miss_cm - c_miss_asv * p_miss_asv) - p_non * c_fa_asv * p_fa_asv,
          c_fa_cm * p_spoof * (1.0 - p_miss_spoof_asv)};
}

TdcfCosts read_tdcf_costs(const std::filesystem::path& path) {
  TdcfCostModel m;
  std::optional<double> c1, c2;
  for (const auto& [key, value] : train::read_key_values(path)) {
    const double v = train::parse_double(key, value);
    if (key == "p_spoof") m.p_spoof = v;
    else if (key == "p_tar") m.p_tar = v;
    else if (key == "p_non") m.p_non = v;
    else if (key == "c_miss_asv") m.c_miss_asv = v;
    else if (key == "c_fa_asv") m.c_fa_asv = v;
    else if (key == "c_miss_cm") m.c_miss_cm = v;
    else if (key == "c_fa_cm") m.c_fa_cm = v;
    else if (key == "p_miss_asv") m.p_miss_asv = v;
    else if (key == "p_fa_asv") m.p_fa_asv = v;
    else if (key == "p_miss_spoof_asv") m.p_miss_spoof_asv = v;
    else if (key == "c1") c1 = v;
    else if (key == "c2") c2 = v;
    else throw ConfigError("unknown t-DCF key '" + key + "'");
  }
  TdcfCosts costs = m.costs();
  if (c1) costs.c1 = *c1;
  if (c2) costs.c2 = *c2;
  return costs;
}

TdcfResult compute_min_tdcf(std::span<const double> bonafide, std::span<const double> spoof, const TdcfCosts& costs) {
  if (!(costs.c1 > 0.0) || !(costs.c2 > 0.0)) throw ConfigError("t-DCF costs c1 and c2 must be positive");
  require_both(bonafide.size(), spoof.size());
  const double norm = std::min(costs.c1, costs.c2);
  TdcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& p : sweep(bonafide, spoof)) {
    const double v = (costs.c1 * p.p_miss + costs.c2 * p.p_fa) / norm;
    if (v < best.value) best = {v, p.threshold};
  }
  return best;
}

TdcfResult compute_min_tdcf(std::span<const ScoreRecord> scores, const TdcfCosts& costs) {
  std::vector<double> bona, spoof;
  split_by_key(scores, bona, spoof);
  return compute_min_tdcf(bona, spoof, costs);
}

Breakdown breakdown_by_attack(std::span<const ScoreRecord> scores, const std::vector<std::string>& expected) {
  return breakdown_impl(scores, expected, true);
}

namespace serial {
Breakdown breakdown_by_attack(std::span<const ScoreRecord> scores, const std::vector<std::string>& expected) {
  return breakdown_impl(scores, expected, false);
}
}  // namespace serial

std::string encode_scores(std::span<const ScoreRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.utt_id + " " + r.attack_id + " " + (r.key == Key::bonafide ? "bonafide" : "spoof") + " " +
           train::format_double(r.score) + "\n";
  }
  return out;
}

void write_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << encode_scores(records);
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<ScoreRecord> parse_scores(const std::string& text) {
  std::vector<ScoreRecord> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (fields.size() != 4)
      throw ParseError("expected 4 fields (utt_id attack_id key score), got " + std::to_string(fields.size()), line_no);
    ScoreRecord r{fields[0], fields[1], Key::bonafide, 0.0};
    if (fields[2] == "bonafide") r.key = Key::bonafide;
    else if (fields[2] == "spoof") r.key = Key::spoof;
    else throw ParseError("key must be bonafide or spoof, got '" + fields[2] + "'", line_no);
    const auto& s = fields[3];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), r.score);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(r.score))
      throw ParseError("bad score '" + s + "'", line_no);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open score file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scores(ss.str());
}

}  // namespace tcas::metrics
