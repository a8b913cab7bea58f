#pragma once

// Training configuration and the `key = value` text format it travels in.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tcas/adam.hpp"
#include "tcas/loss.hpp"
#include "tcas/model.hpp"

namespace tcas::train {

/// Ordered key/value pairs, as read from a config file.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// One `key = value` per line; '#' starts a comment. Duplicate keys and
/// lines without '=' are ParseErrors.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

enum class LabelMode { multilabel, binary };

struct TrainConfig {
  double lr = 1e-5;
  double weight_decay = 1e-4;
  bool decoupled_weight_decay = false;
  std::size_t epochs = 50;
  std::size_t batch_size = 10;
  double lambda1 = 0.3;
  double lambda2 = 0.7;
  /// Empty → [8, 1, 1] in multilabel mode, [8, 1] in binary mode.
  std::vector<double> wce_weights;
  LabelMode mode = LabelMode::multilabel;
  bool cav_loss_enabled = true;
  model::ModelConfig model;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::size_t num_classes() const { return mode == LabelMode::binary ? 2 : 3; }
  std::vector<double> class_weights() const;
  /// λ1 := 0, λ2 := 1 when the CAV loss is disabled.
  LossWeights loss_weights() const;
  AdamOptions adam() const;
  /// Model config with classes matched to the label mode.
  model::ModelConfig model_config() const;
  void validate() const;
};

/// Every config key, in canonical order.
const std::vector<std::string>& train_config_keys();
KeyValues to_key_values(const TrainConfig& config);
/// Applies recognized keys; throws ConfigError on unknown keys or bad values.
void apply_key_values(TrainConfig& config, const KeyValues& kv);

std::string format_double(double v);
double parse_double(const std::string& key, const std::string& text);
std::uint64_t parse_unsigned(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);

}  // namespace tcas::train
