#pragma once

// Countermeasure scoring: EER, normalized minimum tandem detection cost and
// per-attack breakdowns. Score polarity: higher = more bonafide; a trial is
// accepted as bonafide when score >= threshold.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tcas::metrics {

enum class Key { bonafide, spoof };

struct ScoreRecord {
  std::string utt_id;
  std::string attack_id;
  Key key = Key::bonafide;
  double score = 0.0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// One point of the threshold sweep.
struct OperatingPoint {
  double threshold;  // +inf for reject-all
  double p_miss;     // bonafide rejected
  double p_fa;       // spoof accepted
};

/// Every distinct score as threshold (ascending), then the reject-all point.
std::vector<OperatingPoint> sweep(std::span<const double> bonafide, std::span<const double> spoof);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Crossing of P_miss and P_fa, linearly interpolated between the two
/// bracketing sweep points.
EerResult eer_from_sweep(std::span<const OperatingPoint> points);
EerResult compute_eer(std::span<const double> bonafide, std::span<const double> spoof);
/// Throws UsageError unless both classes are present.
EerResult compute_eer(std::span<const ScoreRecord> scores);

/// Composite CM costs: t-DCF(θ) = c1·P_miss(θ) + c2·P_fa(θ).
struct TdcfCosts {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// ASV-side cost model from which c1 and c2 are composed.
struct TdcfCostModel {
  double p_spoof = 0.05;
  double p_tar = 0.95 * 0.99;
  double p_non = 0.95 * 0.01;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double p_miss_asv = 0.0;
  double p_fa_asv = 0.0;
  double p_miss_spoof_asv = 0.0;

  TdcfCosts costs() const;
};

/// Reads `key = value` lines naming TdcfCostModel fields, or c1/c2 directly.
TdcfCosts read_tdcf_costs(const std::filesystem::path& path);

struct TdcfResult {
  double value = 0.0;
  double threshold = 0.0;
};

/// min over the sweep of t-DCF(θ) / min(c1, c2). Throws ConfigError for
/// non-positive costs.
TdcfResult compute_min_tdcf(std::span<const double> bonafide, std::span<const double> spoof, const TdcfCosts& costs);
TdcfResult compute_min_tdcf(std::span<const ScoreRecord> scores, const TdcfCosts& costs);

struct AttackEer {
  std::string attack_id;
  std::size_t trials = 0;
  double eer = 0.0;
};

struct Breakdown {
  std::vector<AttackEer> per_attack;  // sorted by attack id
  double pooled_eer = 0.0;
  std::vector<std::string> skipped;   // requested attacks with no trials
};

/// Each attack's spoof scores against all bonafide scores. Attacks are
/// evaluated in parallel.
Breakdown breakdown_by_attack(std::span<const ScoreRecord> scores,
                              const std::vector<std::string>& expected_attacks = {});

namespace serial {
Breakdown breakdown_by_attack(std::span<const ScoreRecord> scores,
                              const std::vector<std::string>& expected_attacks = {});
}

/// "utt_id attack_id key score", one line per record.
void write_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path);
std::string encode_scores(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);
std::vector<ScoreRecord> parse_scores(const std::string& text);

}  // namespace tcas::metrics
