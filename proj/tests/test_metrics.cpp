#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "tcas/error.hpp"
#include "tcas/metrics.hpp"
#include "tcas/rng.hpp"

using namespace tcas;
using namespace tcas::metrics;
namespace fs = std::filesystem;

namespace {

std::vector<ScoreRecord> records(const std::vector<double>& bona, const std::vector<double>& spoof,
                                 const std::string& attack = "A07") {
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < bona.size(); ++i) out.push_back({"b" + std::to_string(i), "-", Key::bonafide, bona[i]});
  for (std::size_t i = 0; i < spoof.size(); ++i) out.push_back({"s" + std::to_string(i) + attack, attack, Key::spoof, spoof[i]});
  return out;
}

double brute_min_tdcf(const std::vector<double>& bona, const std::vector<double>& spoof, double c1, double c2) {
  std::vector<double> thresholds = bona;
  thresholds.insert(thresholds.end(), spoof.begin(), spoof.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double best = std::numeric_limits<double>::infinity();
  for (double th : thresholds) {
    const double miss = static_cast<double>(std::count_if(bona.begin(), bona.end(), [&](double s) { return s < th; })) / bona.size();
    const double fa = static_cast<double>(std::count_if(spoof.begin(), spoof.end(), [&](double s) { return s >= th; })) / spoof.size();
    best = std::min(best, (c1 * miss + c2 * fa) / std::min(c1, c2));
  }
  return best;
}

}  // namespace

TEST_CASE("eer examples") {
  CHECK(compute_eer(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}).eer == 0.0);
  CHECK(compute_eer(std::vector<double>{0.8, 0.2}, std::vector<double>{0.7, 0.3}).eer == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(compute_eer(std::vector<double>{3, 2, 1}, std::vector<double>{2.5, 0.5, 0}).eer ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(compute_eer(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}).eer == doctest::Approx(0.5));
  CHECK(compute_eer(std::vector<double>{0.1}, std::vector<double>{0.9}).eer == doctest::Approx(1.0));
}

TEST_CASE("eer properties") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> bona(20), spoof(30);
    for (auto& s : bona) s = rng.normal() + 1.0;
    for (auto& s : spoof) s = rng.normal();
    const double eer = compute_eer(bona, spoof).eer;
    CHECK(eer >= 0.0);
    CHECK(eer <= 1.0);
    std::vector<double> tb = bona, ts = spoof;
    for (auto& s : tb) s = std::exp(3.0 * s) + 7.0;
    for (auto& s : ts) s = std::exp(3.0 * s) + 7.0;
    CHECK(compute_eer(tb, ts).eer == doctest::Approx(eer).epsilon(1e-12));
    const bool separated = *std::min_element(bona.begin(), bona.end()) > *std::max_element(spoof.begin(), spoof.end());
    CHECK((eer == 0.0) == separated);
  }
}

TEST_CASE("sweep ends with reject-all") {
  const auto pts = sweep(std::vector<double>{1, 2}, std::vector<double>{2, 3});
  REQUIRE(pts.size() == 4);
  CHECK(pts.front().p_miss == 0.0);
  CHECK(pts.front().p_fa == 1.0);
  CHECK(std::isinf(pts.back().threshold));
  CHECK(pts.back().p_miss == 1.0);
  CHECK(pts.back().p_fa == 0.0);
  CHECK(pts[1].threshold == 2.0);
  CHECK(pts[1].p_miss == 0.5);
  CHECK(pts[1].p_fa == 1.0);
}

TEST_CASE("eer needs both classes") {
  CHECK_THROWS_AS(compute_eer(records({0.1, 0.2}, {})), UsageError);
  CHECK_THROWS_AS(compute_eer(records({}, {0.1})), UsageError);
}

TEST_CASE("min t-DCF") {
  const TdcfCosts costs{1.0, 10.0};
  CHECK(compute_min_tdcf(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}, costs).value == 0.0);
  CHECK(compute_min_tdcf(std::vector<double>{0.4, 0.4}, std::vector<double>{0.4, 0.4}, costs).value ==
        doctest::Approx(1.0));
  const std::vector<double> b{3, 2, 1}, s{2.5, 0.5, 0};
  CHECK(compute_min_tdcf(b, s, costs).value == doctest::Approx(brute_min_tdcf(b, s, 1.0, 10.0)).epsilon(1e-12));

  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> bona(15), spoof(25);
    for (auto& x : bona) x = std::round(4.0 * rng.normal() + 2.0) / 4.0;
    for (auto& x : spoof) x = std::round(4.0 * rng.normal()) / 4.0;
    const TdcfCosts c{rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)};
    const double v = compute_min_tdcf(bona, spoof, c).value;
    CHECK(v == doctest::Approx(brute_min_tdcf(bona, spoof, c.c1, c.c2)).epsilon(1e-12));
    CHECK(v <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(compute_min_tdcf(b, s, TdcfCosts{0.0, 1.0}), ConfigError);
}

TEST_CASE("t-DCF cost file") {
  const fs::path path = fs::temp_directory_path() / "tcas_test_tdcf.conf";
  {
    std::ofstream os(path);
    os << "c1 = 2\nc2 = 3\n";
  }
  const TdcfCosts direct = read_tdcf_costs(path);
  CHECK(direct.c1 == 2.0);
  CHECK(direct.c2 == 3.0);
  {
    std::ofstream os(path);
    os << "p_spoof = 0.05\nc_fa_cm = 10\n";
  }
  const TdcfCosts model = read_tdcf_costs(path);
  const TdcfCosts expect = TdcfCostModel{}.costs();
  CHECK(model.c1 == doctest::Approx(expect.c1));
  CHECK(model.c2 == doctest::Approx(expect.c2));
  CHECK(expect.c1 > 0.0);
  CHECK(expect.c2 > 0.0);
  {
    std::ofstream os(path);
    os << "colour = blue\n";
  }
  CHECK_THROWS_AS(read_tdcf_costs(path), ConfigError);
  fs::remove(path);
}

TEST_CASE("per-attack breakdown") {
  auto single = records({0.9, 0.4, 0.7}, {0.5, 0.1}, "A07");
  const Breakdown one = breakdown_by_attack(single);
  REQUIRE(one.per_attack.size() == 1);
  CHECK(one.per_attack[0].eer == one.pooled_eer);
  CHECK(one.per_attack[0].trials == 2);

  auto two = records({0.9, 0.8, 0.7}, {0.1, 0.2}, "A07");
  const auto hard = records({}, {0.85, 0.75}, "A17");
  two.insert(two.end(), hard.begin(), hard.end());
  const Breakdown both = breakdown_by_attack(two, {"A07", "A17", "A19"});
  REQUIRE(both.per_attack.size() == 2);
  CHECK(both.per_attack[0].attack_id == "A07");
  CHECK(both.per_attack[0].eer == 0.0);
  CHECK(both.per_attack[1].eer == doctest::Approx(compute_eer(std::vector<double>{0.9, 0.8, 0.7}, std::vector<double>{0.85, 0.75}).eer));
  CHECK(both.skipped == std::vector<std::string>{"A19"});

  Rng rng(8);
  std::vector<ScoreRecord> many;
  const char* attacks[] = {"A07", "A08", "A09", "A17", "A18", "A19"};
  for (int i = 0; i < 600; ++i) {
    const bool bona = i % 4 == 0;
    many.push_back({"u" + std::to_string(i), bona ? "-" : attacks[i % 6], bona ? Key::bonafide : Key::spoof,
                    rng.normal() + (bona ? 1.0 : 0.0)});
  }
  const Breakdown par = breakdown_by_attack(many), ser = serial::breakdown_by_attack(many);
  REQUIRE(par.per_attack.size() == ser.per_attack.size());
  for (std::size_t i = 0; i < par.per_attack.size(); ++i) CHECK(par.per_attack[i].eer == ser.per_attack[i].eer);
  CHECK(par.pooled_eer == ser.pooled_eer);
}

TEST_CASE("score files") {
  const auto recs = records({0.123456789, -3.5e-7}, {1e10}, "A19");
  const auto back = parse_scores(encode_scores(recs));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].utt_id == recs[i].utt_id);
    CHECK(back[i].attack_id == recs[i].attack_id);
    CHECK(back[i].key == recs[i].key);
    CHECK(back[i].score == doctest::Approx(recs[i].score).epsilon(1e-6));
  }
  CHECK(parse_scores("").empty());
  try {
    parse_scores("a - bonafide 0.5\nb A07 spoof\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_scores("a - genuine 0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_scores("a - bonafide x\n"), ParseError);

  const fs::path path = fs::temp_directory_path() / "tcas_test_scores.txt";
  write_scores(recs, path);
  CHECK(read_scores(path).size() == 3);
  fs::remove(path);
  CHECK_THROWS_AS(read_scores(path), IoError);
}
