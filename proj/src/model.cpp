#include "tcas/model.hpp"

#include <algorithm>
#include <cmath>

#include "tcas/error.hpp"
#include "tcas/explain.hpp"

namespace tcas::model {

void ModelConfig::validate() const {
  if (c_in == 0 || hidden == 0 || channels == 0 || t_target == 0)
    throw ConfigError("model: dims and t_target must be positive");
  if (classes < 2) throw ConfigError("model: need at least 2 classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
  if (!(bn_eps >= 0.0) || !(bn_momentum >= 0.0 && bn_momentum <= 1.0))
    throw ConfigError("model: bn_eps must be >= 0 and bn_momentum in [0, 1]");
  if (!(var_eps >= 0.0)) throw ConfigError("model: var_eps must be >= 0");
}

namespace {

using nd::Shape;

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t c = config.channels, k = config.classes;
  const std::size_t widths[2] = {config.hidden, config.channels};
  std::size_t in = config.c_in;
  for (std::size_t s = 0; s < 2; ++s) {
    const std::string prefix = "proj." + std::to_string(s);
    add(prefix + ".weight", uniform_init({in, widths[s]}, in, rng), true);
    add(prefix + ".bn.gamma", Tensor({widths[s]}, 1.0), true);
    add(prefix + ".bn.beta", Tensor({widths[s]}), true);
    add(prefix + ".bn.running_mean", Tensor({widths[s]}), false);
    add(prefix + ".bn.running_var", Tensor({widths[s]}, 1.0), false);
    in = widths[s];
  }
  add("pool.w", uniform_init({c, 1}, c, rng), true);
  add("pool.b", Tensor({1}), true);
  add("pool.proj.weight", uniform_init({2 * c, c}, 2 * c, rng), true);
  add("pool.proj.bias", Tensor({c}), true);
  add("cav.weight", uniform_init({config.embed_rows(), k}, config.embed_rows(), rng), true);
  add("cav.u", config.cav_per_class ? uniform_init({c, k}, c, rng) : uniform_init({c, 1}, c, rng), true);
  add("cav.bias", Tensor({k}), true);
  add("gate.w", Tensor({1}, 1.0), true);
  add("tca.weight", uniform_init({2 * c, k}, 2 * c, rng), true);
  add("tca.bias", Tensor({k}), true);
}

void ModelParams::add(std::string name, Tensor value, bool learnable) {
  params_.emplace_back(std::move(name), std::move(value));
  learnable_.push_back(learnable);
}

Param& ModelParams::get(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw UsageError("no parameter named " + name);
}

const Param& ModelParams::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw UsageError("no parameter named " + name);
}

bool ModelParams::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const Param& p) { return p.name == name; });
}

std::vector<Param*> ModelParams::learnable() {
  std::vector<Param*> out;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (learnable_[i]) out.push_back(&params_[i]);
  return out;
}

bool ModelParams::is_learnable(const Param& p) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (&params_[i] == &p) return learnable_[i];
  return false;
}

void ModelParams::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Var projector_forward(Var raw, const std::vector<StackParams>& stacks, const ModelConfig& config, Mode mode,
                      Rng& dropout_rng) {
  const nd::BatchNormOptions bn{config.bn_eps, config.bn_momentum};
  Var x = raw;
  for (const auto& s : stacks) {
    x = nd::matmul(x, s.weight);
    x = nd::batch_norm(x, s.gamma, s.beta, *s.running_mean, *s.running_var, bn, mode);
    x = nd::relu(x);
    x = nd::dropout(x, config.dropout, mode, dropout_rng);
  }
  return x;
}

Var attentive_scores(Var frames, Var w, Var b) {
  const Var e = nd::tanh(nd::add_scalar(nd::matmul(frames, w), b));
  return nd::softmax_axis(e, 0);
}

PooledStats attentive_stats(Var frames, Var alpha, double var_eps) {
  const Var mu = nd::matmul_tn(alpha, frames);
  const Var second = nd::matmul_tn(alpha, nd::mul(frames, frames));
  const Var sigma = nd::clamped_sqrt(nd::sub(second, nd::mul(mu, mu)), var_eps);
  return {mu, sigma};
}

Embedding build_embedding(Var frames, Var pool_w, Var pool_b, Var proj_w, Var proj_b, bool use_utterance,
                          double var_eps) {
  const Var alpha = attentive_scores(frames, pool_w, pool_b);
  const PooledStats stats = attentive_stats(frames, alpha, var_eps);
  if (!use_utterance) return {frames, alpha, stats};
  const Var utterance = nd::affine(nd::concat_cols(stats.mu, stats.sigma), proj_w, proj_b);
  return {nd::concat_rows(frames, utterance), alpha, stats};
}

Var cav_forward(Var embed, Var w_cav) {
  if (w_cav.value().rows() != embed.value().rows())
    throw DimensionError("cav_forward: W_cav has " + std::to_string(w_cav.value().rows()) + " rows, embedding has " +
                         std::to_string(embed.value().rows()));
  return nd::matmul_tn(w_cav, embed);
}

Var cav_classify(Var cav, Var u, Var b_z) {
  const std::size_t k = cav.value().rows(), c = cav.value().cols();
  const Tensor& uv = u.value();
  if (uv.rank() == 2 && uv.dim(0) == c && uv.dim(1) == k && k != 1) {
    const Var per_class = nd::mul(cav, nd::transpose(u));
    Tape& tape = *cav.tape();
    const Var ones = tape.constant(Tensor({c, 1}, 1.0));
    return nd::add(nd::reshape(nd::matmul(per_class, ones), {k}), b_z);
  }
  const Var shared = uv.rank() == 1 ? nd::reshape(u, {uv.size(), 1}) : u;
  return nd::add(nd::reshape(nd::matmul(cav, shared), {k}), b_z);
}

Var gate_channels(Var cav, Var w_gate) { return nd::transpose(nd::softmax_axis(nd::scale_by(cav, w_gate), 1)); }

Var tca_feature(Var embed, Var gate, Var z) {
  const std::size_t k = z.value().size(), c = gate.value().rows();
  const Var channel_weight = nd::reshape(nd::matmul(gate, nd::reshape(z, {k, 1})), {c});
  return nd::mul_row(embed, channel_weight);
}

Var split_pool_classify(Var tca, Var weight, Var bias, std::size_t num_frames, bool use_utterance) {
  const std::size_t rows = tca.value().rows(), cols = tca.value().cols();
  if (num_frames == 0 || num_frames + (use_utterance ? 1 : 0) != rows)
    throw DimensionError("split_pool_classify: row count does not match frame count");
  const Var pooled = nd::mean_rows(tca, 0, num_frames);
  const Var utterance = use_utterance ? nd::slice_rows(tca, num_frames, num_frames + 1)
                                      : tca.tape()->constant(Tensor({1, cols}));
  const Var joined = nd::concat_cols(pooled, utterance);
  return nd::reshape(nd::affine(joined, weight, bias), {bias.value().size()});
}

ForwardVars forward(Tape& tape, const Tensor& raw, ModelParams& params, Mode mode, Rng& dropout_rng) {
  const ModelConfig& cfg = params.config();
  if (raw.rank() != 2 || raw.cols() != cfg.c_in)
    throw DimensionError("model: expected frames × " + std::to_string(cfg.c_in) + " input, got " +
                         nd::shape_str(raw.shape()));
  if (raw.rows() != cfg.t_target)
    throw DimensionError("model: expected " + std::to_string(cfg.t_target) + " frames, got " +
                         std::to_string(raw.rows()) + " (apply fix_length first)");

  std::vector<StackParams> stacks;
  for (int s = 0; s < 2; ++s) {
    const std::string prefix = "proj." + std::to_string(s);
    stacks.push_back({tape.param(params.get(prefix + ".weight")), tape.param(params.get(prefix + ".bn.gamma")),
                      tape.param(params.get(prefix + ".bn.beta")), &params.get(prefix + ".bn.running_mean").value,
                      &params.get(prefix + ".bn.running_var").value});
  }
  ForwardVars out;
  out.frames = projector_forward(tape.constant(raw), stacks, cfg, mode, dropout_rng);
  out.embedding = build_embedding(out.frames, tape.param(params.get("pool.w")), tape.param(params.get("pool.b")),
                                  tape.param(params.get("pool.proj.weight")),
                                  tape.param(params.get("pool.proj.bias")), cfg.use_utterance, cfg.var_eps);
  const Var embed = out.embedding.embed;
  out.cav = cav_forward(embed, tape.param(params.get("cav.weight")));
  out.z = cav_classify(out.cav, tape.param(params.get("cav.u")), tape.param(params.get("cav.bias")));
  out.gate = gate_channels(out.cav, tape.param(params.get("gate.w")));
  out.tca = tca_feature(embed, out.gate, out.z);
  out.z_prime = split_pool_classify(out.tca, tape.param(params.get("tca.weight")),
                                    tape.param(params.get("tca.bias")), cfg.t_target, cfg.use_utterance);
  return out;
}

ModelOutput collect(const ForwardVars& vars) {
  ModelOutput out;
  out.z = vars.z.value();
  out.z_prime = vars.z_prime.value();
  out.embed = vars.embedding.embed.value();
  out.cav = vars.cav.value();
  out.gate = vars.gate.value();
  out.tca = vars.tca.value();
  out.tca_map = explain::tca_values(out.embed, out.gate, out.z);
  out.alpha = vars.embedding.alpha.value().reshaped({vars.embedding.alpha.value().size()});
  return out;
}

ModelOutput model_forward(const Tensor& raw, ModelParams& params) {
  Tape tape;
  Rng unused(0);
  return collect(forward(tape, raw, params, Mode::eval, unused));
}

std::vector<std::string> class_names(std::size_t classes) {
  if (classes == 3) return {"bonafide", "tts", "vc"};
  if (classes == 2) return {"bonafide", "spoof"};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < classes; ++k) names.push_back("class" + std::to_string(k));
  return names;
}

}  // namespace tcas::model
