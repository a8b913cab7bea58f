#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcas/error.hpp"
#include "tcas/explain.hpp"
#include "tcas/model.hpp"
#include "tcas/rng.hpp"

using namespace tcas;
using namespace tcas::model;

namespace {

Tensor random_tensor(nd::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

ModelConfig tiny(bool use_utterance = true) {
  ModelConfig c;
  c.c_in = 5;
  c.hidden = 6;
  c.channels = 4;
  c.classes = 3;
  c.t_target = 7;
  c.use_utterance = use_utterance;
  return c;
}

}  // namespace

TEST_CASE("attentive scores") {
  Tape tape;
  Rng rng(1);
  const Var frames = tape.constant(random_tensor({5, 3}, rng));
  const Tensor flat = attentive_scores(frames, tape.constant(Tensor({3, 1})), tape.constant(Tensor({1}, 0.7))).value();
  for (double a : flat.data()) CHECK(a == doctest::Approx(0.2).epsilon(1e-15));

  const Var same = tape.constant(Tensor({4, 3}, 0.3));
  const Tensor sym = attentive_scores(same, tape.constant(random_tensor({3, 1}, rng)), tape.constant(Tensor({1}))).value();
  for (double a : sym.data()) CHECK(a == doctest::Approx(0.25).epsilon(1e-15));

  // e = tanh(x) = [0, 1] needs x = [0, ∞); use e = [0, tanh(1)] instead.
  const Var two = tape.constant(Tensor::matrix({{0.0}, {1.0}}));
  const Tensor alpha = attentive_scores(two, tape.constant(Tensor::matrix({{1.0}})), tape.constant(Tensor({1}))).value();
  const double e1 = std::exp(std::tanh(1.0));
  CHECK(alpha[0] == doctest::Approx(1.0 / (1.0 + e1)).epsilon(1e-14));
  CHECK(alpha[1] == doctest::Approx(e1 / (1.0 + e1)).epsilon(1e-14));
}

TEST_CASE("attentive statistics") {
  Tape tape;
  const PooledStats hand = attentive_stats(tape.constant(Tensor::matrix({{0.0}, {2.0}})),
                                           tape.constant(Tensor::matrix({{0.25}, {0.75}})), 1e-12);
  CHECK(hand.mu.value()[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(hand.sigma.value()[0] == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));

  const Tensor v = Tensor::matrix({{0.5, -1.0, 3.0}});
  Tensor rows({6, 3});
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t c = 0; c < 3; ++c) rows.at(t, c) = v.at(0, c);
  Rng rng(2);
  const Var alpha = attentive_scores(tape.constant(rows), tape.constant(random_tensor({3, 1}, rng)), tape.constant(Tensor({1})));
  const PooledStats constant = attentive_stats(tape.constant(rows), alpha, 1e-12);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(constant.mu.value()[c] == doctest::Approx(v.at(0, c)).epsilon(1e-14));
    CHECK(constant.sigma.value()[c] >= 0.0);
    CHECK(constant.sigma.value()[c] <= 1e-5);
  }

  const Tensor x = Tensor::matrix({{1.0, 2.0}, {3.0, -2.0}, {5.0, 0.0}});
  const Tensor uniform({3, 1}, 1.0 / 3.0);
  const PooledStats plain = attentive_stats(tape.constant(x), tape.constant(uniform), 0.0);
  CHECK(plain.mu.value()[0] == doctest::Approx(3.0));
  CHECK(plain.sigma.value()[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(plain.mu.value()[1] == doctest::Approx(0.0));
  CHECK(plain.sigma.value()[1] == doctest::Approx(std::sqrt(8.0 / 3.0)));
}

TEST_CASE("pooling is invariant to frame order") {
  Rng rng(3);
  const Tensor x = random_tensor({9, 4}, rng);
  const Tensor w = random_tensor({4, 1}, rng);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[6]);
  Tensor px({9, 4});
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t c = 0; c < 4; ++c) px.at(t, c) = x.at(perm[t], c);

  Tape tape;
  const Var a = attentive_scores(tape.constant(x), tape.constant(w), tape.constant(Tensor({1}, 0.1)));
  const Var pa = attentive_scores(tape.constant(px), tape.constant(w), tape.constant(Tensor({1}, 0.1)));
  for (std::size_t t = 0; t < 9; ++t) CHECK(pa.value()[t] == doctest::Approx(a.value()[perm[t]]).epsilon(1e-14));
  const PooledStats s = attentive_stats(tape.constant(x), a, 1e-12);
  const PooledStats ps = attentive_stats(tape.constant(px), pa, 1e-12);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(std::abs(s.mu.value()[c] - ps.mu.value()[c]) < 1e-12);
    CHECK(std::abs(s.sigma.value()[c] - ps.sigma.value()[c]) < 1e-12);
  }
}

TEST_CASE("utterance embedding") {
  Tape tape;
  Rng rng(4);
  const Var frames = tape.constant(random_tensor({5, 2}, rng));
  const Var pw = tape.constant(random_tensor({2, 1}, rng));
  const Var pb = tape.constant(Tensor({1}));
  const Var proj = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {0, 0}, {0, 0}}));
  const Var proj_b = tape.constant(Tensor({2}));

  const Embedding on = build_embedding(frames, pw, pb, proj, proj_b, true, 1e-12);
  REQUIRE(on.embed.value().rows() == 6);
  for (std::size_t c = 0; c < 2; ++c) CHECK(on.embed.value().at(5, c) == doctest::Approx(on.stats.mu.value()[c]));
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 2; ++c) CHECK(on.embed.value().at(t, c) == frames.value().at(t, c));

  const Embedding off = build_embedding(frames, pw, pb, proj, proj_b, false, 1e-12);
  CHECK(off.embed.value() == frames.value());
}

TEST_CASE("channel attention vectors and logits") {
  Tape tape;
  const Tensor s = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(cav_forward(tape.constant(s), tape.constant(Tensor::matrix({{0}, {1}}))).value() == Tensor::matrix({{3, 4}}));
  CHECK(cav_forward(tape.constant(Tensor({2, 2})), tape.constant(Tensor::matrix({{0.3}, {-1}}))).value() ==
        Tensor::matrix({{0, 0}}));
  CHECK(cav_forward(tape.constant(s), tape.constant(Tensor::matrix({{2}, {-1}}))).value() == Tensor::matrix({{-1, 0}}));

  const Var a = tape.constant(Tensor::matrix({{1, 2, 3}, {-1, 0, 5}}));
  const Tensor b = Tensor::vector({0.5, -0.25});
  CHECK(cav_classify(a, tape.constant(Tensor({3, 1})), tape.constant(b)).value() == b);
  CHECK(cav_classify(a, tape.constant(Tensor::matrix({{0}, {0}, {1}})), tape.constant(b)).value() ==
        Tensor::vector({3.5, 4.75}));
  CHECK(cav_classify(a, tape.constant(Tensor::matrix({{1}, {-1}, {2}})), tape.constant(b)).value() ==
        Tensor::vector({5.5, 8.75}));
  CHECK(cav_classify(a, tape.constant(Tensor::matrix({{1, 0}, {0, 0}, {0, 1}})), tape.constant(b)).value() ==
        Tensor::vector({1.5, 4.75}));
}

TEST_CASE("channel gate") {
  Tape tape;
  Rng rng(5);
  const Var a = tape.constant(random_tensor({3, 4}, rng, 3.0));
  const Tensor zero = gate_channels(a, tape.constant(Tensor({1}))).value();
  for (double v : zero.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  const Tensor m = gate_channels(a, tape.constant(Tensor({1}, 1.7))).value();
  REQUIRE(m.shape() == nd::Shape{4, 3});
  for (std::size_t k = 0; k < 3; ++k) {
    double col = 0.0;
    for (std::size_t c = 0; c < 4; ++c) col += m.at(c, k);
    CHECK(std::abs(col - 1.0) <= 1e-9);
  }

  const Tensor hand =
      gate_channels(tape.constant(Tensor::matrix({{0, std::log(2.0), std::log(3.0)}})), tape.constant(Tensor({1}, 1.0)))
          .value();
  CHECK(hand.at(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(hand.at(1, 0) == doctest::Approx(2.0 / 6.0).epsilon(1e-14));
  CHECK(hand.at(2, 0) == doctest::Approx(3.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("temporal class activation feature") {
  Tape tape;
  Rng rng(6);
  const Tensor s = random_tensor({3, 4}, rng);
  const Tensor m = gate_channels(tape.constant(random_tensor({2, 4}, rng)), tape.constant(Tensor({1}, 1.0))).value();
  CHECK(tca_feature(tape.constant(s), tape.constant(m), tape.constant(Tensor({2}))).value() == Tensor({3, 4}));

  const Tensor uniform({4, 1}, 0.25);
  const Tensor one = tca_feature(tape.constant(s), tape.constant(uniform), tape.constant(Tensor::vector({1.0}))).value();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(one[i] == doctest::Approx(s[i] / 4.0).epsilon(1e-15));

  const Tensor s2 = Tensor::matrix({{1, 2}, {-3, 0.5}});
  const Tensor m2 = Tensor::matrix({{0.3, 0.9}, {0.7, 0.1}});
  const Tensor z2 = Tensor::vector({2.0, -1.0});
  const Tensor got = tca_feature(tape.constant(s2), tape.constant(m2), tape.constant(z2)).value();
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t c = 0; c < 2; ++c) {
      double expect = 0.0;
      for (std::size_t k = 0; k < 2; ++k) expect += z2[k] * s2.at(t, c) * m2.at(c, k);
      CHECK(got.at(t, c) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("split pooling classifier") {
  Tape tape;
  Rng rng(7);
  const Tensor v = random_tensor({4, 3}, rng);
  const Tensor b = Tensor::vector({0.1, -0.2, 0.3});
  CHECK(split_pool_classify(tape.constant(Tensor({4, 2})), tape.constant(v), tape.constant(b), 3, true).value() == b);

  const Tensor one = Tensor::matrix({{2, -1}});
  const Tensor solo = split_pool_classify(tape.constant(one), tape.constant(v), tape.constant(b), 1, false).value();
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(solo[k] == doctest::Approx(2 * v.at(0, k) - v.at(1, k) + b[k]).epsilon(1e-14));

  const Tensor x = Tensor::matrix({{1, 2}, {3, 4}, {5, 0}, {-1, 7}});
  const Tensor z = split_pool_classify(tape.constant(x), tape.constant(v), tape.constant(b), 3, true).value();
  const double f[4] = {3.0, 2.0, -1.0, 7.0};
  for (std::size_t k = 0; k < 3; ++k) {
    double expect = b[k];
    for (std::size_t i = 0; i < 4; ++i) expect += f[i] * v.at(i, k);
    CHECK(z[k] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("projector stack matches a hand composition") {
  Tape tape;
  Rng rng(8);
  const Tensor raw = random_tensor({5, 3}, rng);
  const Tensor w = random_tensor({3, 2}, rng);
  Tensor mean({2}), var({2}, 1.0);
  ModelConfig cfg;
  cfg.dropout = 0.0;
  Rng drop(0);
  const std::vector<StackParams> stacks{
      {tape.constant(w), tape.constant(Tensor({2}, 1.0)), tape.constant(Tensor({2})), &mean, &var}};
  const Tensor out = projector_forward(tape.constant(raw), stacks, cfg, Mode::train, drop).value();

  for (std::size_t c = 0; c < 2; ++c) {
    double h[5], m = 0.0, v = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      h[t] = 0.0;
      for (std::size_t i = 0; i < 3; ++i) h[t] += raw.at(t, i) * w.at(i, c);
      m += h[t] / 5.0;
    }
    for (double x : h) v += (x - m) * (x - m) / 5.0;
    for (std::size_t t = 0; t < 5; ++t) {
      const double expect = std::max(0.0, (h[t] - m) / std::sqrt(v + cfg.bn_eps));
      CHECK(out.at(t, c) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(out.at(t, c) >= 0.0);
    }
  }
}

TEST_CASE("full model: shapes, determinism and explanation identities") {
  for (bool use_utterance : {true, false}) {
    for (bool per_class : {false, true}) {
      ModelConfig cfg = tiny(use_utterance);
      cfg.cav_per_class = per_class;
      Rng init(11);
      ModelParams params(cfg, init);
      Rng data(12);
      const Tensor raw = random_tensor({cfg.t_target, cfg.c_in}, data);

      const ModelOutput a = model_forward(raw, params);
      const ModelOutput b = model_forward(raw, params);
      const std::size_t rows = cfg.embed_rows();
      CHECK(a.z.shape() == nd::Shape{3});
      CHECK(a.z_prime.shape() == nd::Shape{3});
      CHECK(a.tca.shape() == nd::Shape{rows, 4});
      CHECK(a.gate.shape() == nd::Shape{4, 3});
      CHECK(a.cav.shape() == nd::Shape{3, 4});
      CHECK(a.tca_map.shape() == nd::Shape{rows, 3});
      CHECK(a.alpha.size() == cfg.t_target);
      CHECK(a.z == b.z);
      CHECK(a.z_prime == b.z_prime);
      CHECK(a.tca_map == b.tca_map);

      const double alpha_sum = std::accumulate(a.alpha.data().begin(), a.alpha.data().end(), 0.0);
      CHECK(std::abs(alpha_sum - 1.0) <= 1e-9);
      for (std::size_t k = 0; k < 3; ++k) {
        double col = 0.0;
        for (std::size_t c = 0; c < 4; ++c) col += a.gate.at(c, k);
        CHECK(std::abs(col - 1.0) <= 1e-9);
      }
      for (std::size_t t = 0; t < rows; ++t) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t c = 0; c < 4; ++c) lhs += a.tca.at(t, c);
        for (std::size_t k = 0; k < 3; ++k) rhs += a.tca_map.at(t, k);
        CHECK(std::abs(lhs - rhs) <= 1e-9);
      }
      CHECK(a.tca_map == explain::tca_values(a.embed, a.gate, a.z));
    }
  }
}

TEST_CASE("utterance row ablation keeps T' = T") {
  Rng init(13);
  ModelParams params(tiny(false), init);
  CHECK(params.get("cav.weight").value.rows() == 7);
  Rng init2(13);
  ModelParams with(tiny(true), init2);
  CHECK(with.get("cav.weight").value.rows() == 8);
}

TEST_CASE("train mode dropout uses the supplied stream") {
  ModelConfig cfg = tiny();
  Rng init(14);
  ModelParams params(cfg, init);
  Rng data(15);
  const Tensor raw = random_tensor({cfg.t_target, cfg.c_in}, data);
  Rng d1 = Rng::stream(1, "dropout"), d2 = Rng::stream(1, "dropout");
  Tape t1, t2;
  CHECK(forward(t1, raw, params, Mode::train, d1).z_prime.value() ==
        forward(t2, raw, params, Mode::train, d2).z_prime.value());
}

TEST_CASE("model config validation") {
  ModelConfig cfg = tiny();
  cfg.classes = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny();
  cfg.t_target = 0;
  Rng rng(1);
  CHECK_THROWS_AS(ModelParams(cfg, rng), ConfigError);
  Rng rng2(1);
  ModelParams p(tiny(), rng2);
  CHECK_THROWS_AS(p.get("nope"), UsageError);
  CHECK(class_names(3) == std::vector<std::string>{"bonafide", "tts", "vc"});
}
