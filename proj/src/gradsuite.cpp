#include "tcas/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "tcas/config.hpp"
#include "tcas/loss.hpp"
#include "tcas/model.hpp"
#include "tcas/ops.hpp"
#include "tcas/trainer.hpp"

namespace tcas::train {

namespace {

using nd::Param;
using nd::Shape;
using nd::Tape;
using nd::Tensor;
using nd::Var;

Tensor random(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Uniform magnitudes in [0.2, 1) with random sign.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.2, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

class Suite {
 public:
  Suite(const GradSuiteOptions& options) : options_(options), rng_(Rng::stream(options.seed, "gradcheck")) {}

  Param& param(const std::string& name, Tensor value) {
    params_.push_back(std::make_unique<Param>(name, std::move(value)));
    return *params_.back();
  }

  // Loss = Σ op(inputs) ⊙ R for a fixed random R.
  template <typename Op>
  void check(const std::string& name, std::vector<Param*> inputs, Op op) {
    const Tensor probe = [&] {
      Tape tape;
      std::vector<Var> vars;
      for (auto* p : inputs) vars.push_back(tape.param(*p));
      return random(op(tape, vars).shape(), rng_);
    }();
    const nd::LossFn f = [&](Tape& tape) {
      std::vector<Var> vars;
      for (auto* p : inputs) vars.push_back(tape.param(*p));
      return nd::sum(nd::mul(op(tape, vars), tape.constant(probe)));
    };
    for (auto* p : inputs) p->zero_grad();
    results_.push_back({name, nd::grad_check(f, inputs, options_.step)});
  }

  void check_loss(const std::string& name, const std::vector<Param*>& inputs, const nd::LossFn& f) {
    for (auto* p : inputs) p->zero_grad();
    results_.push_back({name, nd::grad_check(f, inputs, options_.step)});
  }

  Rng& rng() { return rng_; }
  std::vector<GradSuiteEntry> take() { return std::move(results_); }

 private:
  GradSuiteOptions options_;
  Rng rng_;
  std::vector<std::unique_ptr<Param>> params_;
  std::vector<GradSuiteEntry> results_;
};

void op_checks(Suite& s, const GradSuiteOptions& o) {
  Rng& rng = s.rng();
  const std::size_t t = o.frames, c = o.channels, k = o.classes;
  auto& a = s.param("a", random({t, c}, rng));
  auto& b = s.param("b", random({c, k}, rng));
  auto& a2 = s.param("a2", random({t, c}, rng));
  auto& tk = s.param("tk", random({t, k}, rng));
  auto& row = s.param("row", random({c}, rng));
  auto& bias = s.param("bias", random({k}, rng));
  auto& one = s.param("one", random({1}, rng, 0.5, 1.5));
  auto& kinked = s.param("kinked", away_from_zero({t, c}, rng));
  auto& positive = s.param("positive", random({t, c}, rng, 0.1, 2.0));

  s.check("matmul", {&a, &b}, [](Tape&, auto& v) { return nd::matmul(v[0], v[1]); });
  s.check("matmul_tn", {&a, &tk}, [](Tape&, auto& v) { return nd::matmul_tn(v[0], v[1]); });
  s.check("transpose", {&a}, [](Tape&, auto& v) { return nd::transpose(v[0]); });
  s.check("reshape", {&a}, [=](Tape&, auto& v) { return nd::reshape(v[0], {c, t}); });
  s.check("add", {&a, &a2}, [](Tape&, auto& v) { return nd::add(v[0], v[1]); });
  s.check("sub", {&a, &a2}, [](Tape&, auto& v) { return nd::sub(v[0], v[1]); });
  s.check("mul", {&a, &a2}, [](Tape&, auto& v) { return nd::mul(v[0], v[1]); });
  s.check("add_row", {&a, &row}, [](Tape&, auto& v) { return nd::add_row(v[0], v[1]); });
  s.check("mul_row", {&a, &row}, [](Tape&, auto& v) { return nd::mul_row(v[0], v[1]); });
  s.check("add_scalar", {&a, &one}, [](Tape&, auto& v) { return nd::add_scalar(v[0], v[1]); });
  s.check("scale_by", {&a, &one}, [](Tape&, auto& v) { return nd::scale_by(v[0], v[1]); });
  s.check("scale", {&a}, [](Tape&, auto& v) { return nd::scale(v[0], -1.7); });
  s.check("tanh", {&a}, [](Tape&, auto& v) { return nd::tanh(v[0]); });
  s.check("relu", {&kinked}, [](Tape&, auto& v) { return nd::relu(v[0]); });
  s.check("clamped_sqrt", {&positive}, [](Tape&, auto& v) { return nd::clamped_sqrt(v[0], 1e-12); });
  s.check("softmax_axis0", {&a}, [](Tape&, auto& v) { return nd::softmax_axis(v[0], 0); });
  s.check("softmax_axis1", {&a}, [](Tape&, auto& v) { return nd::softmax_axis(v[0], 1); });
  s.check("sum", {&a}, [](Tape&, auto& v) { return nd::sum(v[0]); });
  s.check("mean_rows", {&a}, [=](Tape&, auto& v) { return nd::mean_rows(v[0], 1, t); });
  s.check("slice_rows", {&a}, [=](Tape&, auto& v) { return nd::slice_rows(v[0], 1, t - 1); });
  s.check("concat_rows", {&a, &a2}, [](Tape&, auto& v) { return nd::concat_rows(v[0], v[1]); });
  s.check("concat_cols", {&a, &tk}, [](Tape&, auto& v) { return nd::concat_cols(v[0], v[1]); });
  s.check("affine", {&a, &b, &bias}, [](Tape&, auto& v) { return nd::affine(v[0], v[1], v[2]); });

  auto& gamma = s.param("gamma", random({c}, rng, 0.5, 1.5));
  auto& beta = s.param("beta", random({c}, rng));
  s.check("batch_norm", {&a, &gamma, &beta}, [=](Tape&, auto& v) {
    Tensor mean({c}), var({c}, 1.0);
    return nd::batch_norm(v[0], v[1], v[2], mean, var, {}, nd::Mode::train);
  });
  s.check("batch_norm_eval", {&a, &gamma, &beta}, [=](Tape&, auto& v) {
    Tensor mean({c}, 0.1), var({c}, 0.8);
    return nd::batch_norm(v[0], v[1], v[2], mean, var, {}, nd::Mode::eval);
  });
  const std::uint64_t seed = o.seed;
  s.check("dropout", {&a}, [=](Tape&, auto& v) {
    Rng r = Rng::stream(seed, "dropout");
    return nd::dropout(v[0], 0.3, nd::Mode::train, r);
  });

  auto& z = s.param("z", random({k}, rng, -2.0, 2.0));
  const std::size_t cls = k - 1;
  s.check_loss("wce_loss", {&z}, [&z, cls, k](Tape& tape) {
    std::vector<double> w(k, 1.0);
    w[0] = 8.0;
    return wce_loss(tape.param(z), one_hot(cls, k), Tensor({k}, w));
  });
}

void component_checks(Suite& s, const GradSuiteOptions& o) {
  Rng& rng = s.rng();
  const std::size_t t = o.frames, c = o.channels, k = o.classes;
  auto& frames = s.param("frames", random({t, c}, rng, 0.0, 2.0));
  auto& pool_w = s.param("pool.w", random({c, 1}, rng));
  auto& pool_b = s.param("pool.b", random({1}, rng));
  auto& proj_w = s.param("pool.proj.weight", random({2 * c, c}, rng));
  auto& proj_b = s.param("pool.proj.bias", random({c}, rng));
  auto& embed = s.param("embed", random({t + 1, c}, rng, 0.0, 2.0));
  auto& w_cav = s.param("cav.weight", random({t + 1, k}, rng));
  auto& u = s.param("cav.u", random({c, 1}, rng));
  auto& u_k = s.param("cav.u_per_class", random({c, k}, rng));
  auto& b_z = s.param("cav.bias", random({k}, rng));
  auto& cav = s.param("cav", random({k, c}, rng));
  auto& w_gate = s.param("gate.w", random({1}, rng, 0.5, 1.5));
  auto& gate = s.param("gate", random({c, k}, rng, 0.0, 1.0));
  auto& z = s.param("z", random({k}, rng));
  auto& tca_w = s.param("tca.weight", random({2 * c, k}, rng));
  auto& tca_b = s.param("tca.bias", random({k}, rng));

  s.check("attentive_scores", {&frames, &pool_w, &pool_b},
          [](Tape&, auto& v) { return model::attentive_scores(v[0], v[1], v[2]); });
  s.check("attentive_stats", {&frames, &pool_w, &pool_b}, [](Tape&, auto& v) {
    const auto alpha = model::attentive_scores(v[0], v[1], v[2]);
    const auto st = model::attentive_stats(v[0], alpha, 1e-12);
    return nd::concat_cols(st.mu, st.sigma);
  });
  s.check("build_embedding", {&frames, &pool_w, &pool_b, &proj_w, &proj_b},
          [](Tape&, auto& v) { return model::build_embedding(v[0], v[1], v[2], v[3], v[4], true, 1e-12).embed; });
  s.check("cav_forward", {&embed, &w_cav}, [](Tape&, auto& v) { return model::cav_forward(v[0], v[1]); });
  s.check("cav_classify", {&cav, &u, &b_z}, [](Tape&, auto& v) { return model::cav_classify(v[0], v[1], v[2]); });
  s.check("cav_classify_per_class", {&cav, &u_k, &b_z},
          [](Tape&, auto& v) { return model::cav_classify(v[0], v[1], v[2]); });
  s.check("gate_channels", {&cav, &w_gate}, [](Tape&, auto& v) { return model::gate_channels(v[0], v[1]); });
  s.check("tca_feature", {&embed, &gate, &z}, [](Tape&, auto& v) { return model::tca_feature(v[0], v[1], v[2]); });
  s.check("split_pool_classify", {&embed, &tca_w, &tca_b},
          [=](Tape&, auto& v) { return model::split_pool_classify(v[0], v[1], v[2], t, true); });
  s.check("split_pool_classify_frames_only", {&frames, &tca_w, &tca_b},
          [=](Tape&, auto& v) { return model::split_pool_classify(v[0], v[1], v[2], t, false); });
}

void full_model_check(Suite& s, const GradSuiteOptions& o, const std::string& name, TrainConfig config) {
  config.model.t_target = o.frames;
  config.model.channels = o.channels;
  config.model.hidden = o.channels + 2;
  config.model.c_in = o.channels + 1;
  Rng init = Rng::stream(o.seed, "init");
  auto params = std::make_shared<model::ModelParams>(config.model_config(), init);
  Rng& rng = s.rng();
  std::vector<Tensor> inputs;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < o.batch; ++i) {
    inputs.push_back(random({o.frames, config.model.c_in}, rng));
    targets.push_back(i % config.num_classes());
  }
  const std::uint64_t seed = o.seed;
  const nd::LossFn f = [=](Tape& tape) {
    Rng dropout = Rng::stream(seed, "dropout");
    Var total;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto out = model::forward(tape, inputs[i], *params, nd::Mode::train, dropout);
      const Var l = utterance_loss(out, targets[i], config).total;
      total = i == 0 ? l : nd::add(total, l);
    }
    return nd::scale(total, 1.0 / static_cast<double>(inputs.size()));
  };
  s.check_loss(name, params->learnable(), f);
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(const GradSuiteOptions& options) {
  Suite suite(options);
  op_checks(suite, options);
  component_checks(suite, options);

  TrainConfig base;
  base.model.dropout = 0.2;
  full_model_check(suite, options, "full_model", base);
  TrainConfig binary = base;
  binary.mode = LabelMode::binary;
  full_model_check(suite, options, "full_model_binary", binary);
  TrainConfig frames_only = base;
  frames_only.model.use_utterance = false;
  frames_only.model.cav_per_class = true;
  full_model_check(suite, options, "full_model_frames_only_per_class_u", frames_only);
  return suite.take();
}

double max_error(const std::vector<GradSuiteEntry>& entries) {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.result.max_rel_error);
  return worst;
}

}  // namespace tcas::train
