#pragma once

// Detection head: projector stacks, attentive statistical pooling, channel
// attention vectors (CAV), channel gating and the temporal class activation
// (TCA) feature, with one classifier on the CAV and one on the pooled TCA.

#include <cstddef>
#include <string>
#include <vector>

#include "tcas/ops.hpp"
#include "tcas/rng.hpp"
#include "tcas/tensor.hpp"

namespace tcas::model {

using nd::Mode;
using nd::Param;
using nd::Tape;
using nd::Tensor;
using nd::Var;

struct ModelConfig {
  std::size_t c_in = 1024;
  std::size_t hidden = 512;
  std::size_t channels = 128;
  std::size_t classes = 3;
  std::size_t t_target = 200;
  bool use_utterance = true;
  /// One u ∈ R^{C×K} instead of a shared u ∈ R^C in the CAV classifier.
  bool cav_per_class = false;
  double dropout = 0.2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  double var_eps = 1e-12;

  /// Rows of the embedding: frames plus the utterance row when enabled.
  std::size_t embed_rows() const { return t_target + (use_utterance ? 1 : 0); }
  void validate() const;
};

/// All weights of the head. Running batch-norm statistics are stored as
/// non-learnable entries so checkpoints carry them.
class ModelParams {
 public:
  ModelParams() = default;
  /// Affine weights ~ U(-1/√fan_in, 1/√fan_in), biases 0, gamma 1, w_gate 1.
  ModelParams(const ModelConfig& config, Rng& init_rng);

  const ModelConfig& config() const noexcept { return config_; }

  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Param*> learnable();
  std::vector<Param>& entries() noexcept { return params_; }
  const std::vector<Param>& entries() const noexcept { return params_; }
  bool is_learnable(const Param& p) const;

  void zero_grad();

 private:
  void add(std::string name, Tensor value, bool learnable);

  ModelConfig config_;
  std::vector<Param> params_;
  std::vector<bool> learnable_;
};

// ---- components (each usable on its own) ----

struct StackParams {
  Var weight;
  Var gamma;
  Var beta;
  Tensor* running_mean;
  Tensor* running_var;
};

/// affine → batch norm over frames → ReLU → dropout, once per stack.
Var projector_forward(Var raw, const std::vector<StackParams>& stacks, const ModelConfig& config, Mode mode,
                      Rng& dropout_rng);

/// e_t = tanh(w·S_f[t] + b), alpha = softmax over frames. Returns T×1.
Var attentive_scores(Var frames, Var w, Var b);

struct PooledStats {
  Var mu;     // 1×C
  Var sigma;  // 1×C
};

/// Attention-weighted mean and standard deviation over frames.
PooledStats attentive_stats(Var frames, Var alpha, double var_eps);

struct Embedding {
  Var embed;  // T′×C
  Var alpha;  // T×1
  PooledStats stats;
};

/// Appends the projected utterance statistics as row T+1 when use_utterance is
/// set. The scores and statistics are computed either way.
Embedding build_embedding(Var frames, Var pool_w, Var pool_b, Var proj_w, Var proj_b, bool use_utterance,
                          double var_eps);

/// A = W_cavᵀ·S (K×C).
Var cav_forward(Var embed, Var w_cav);
/// z[k] = u·A[k] + b_z[k], or Σ_c u[c,k]·A[k,c] + b_z[k] with a per-class u.
Var cav_classify(Var cav, Var u, Var b_z);
/// M (C×K): per-class softmax over channels of w_gate·A.
Var gate_channels(Var cav, Var w_gate);
/// S_tca[t,c] = S[t,c]·Σ_k z[k]·M[c,k].
Var tca_feature(Var embed, Var gate, Var z);
/// Mean of the frame rows and the utterance row (zeros when off), concatenated, then affine.
Var split_pool_classify(Var tca, Var weight, Var bias, std::size_t num_frames, bool use_utterance);

struct ForwardVars {
  Var frames;  // projected S_f
  Embedding embedding;
  Var cav;
  Var z;
  Var gate;
  Var tca;
  Var z_prime;
};

/// Runs the head on one length-normalized utterance (t_target × c_in).
ForwardVars forward(Tape& tape, const Tensor& raw, ModelParams& params, Mode mode, Rng& dropout_rng);

struct ModelOutput {
  Tensor z;        // {K}
  Tensor z_prime;  // {K}
  Tensor embed;    // T′×C
  Tensor cav;      // K×C
  Tensor gate;     // C×K
  Tensor tca;      // T′×C
  Tensor tca_map;  // T′×K
  Tensor alpha;    // {T}
};

ModelOutput collect(const ForwardVars& vars);

/// Eval-mode convenience wrapper; deterministic.
ModelOutput model_forward(const Tensor& raw, ModelParams& params);

std::vector<std::string> class_names(std::size_t classes);

}  // namespace tcas::model
