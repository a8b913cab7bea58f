#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "tcas/checkpoint.hpp"
#include "tcas/config.hpp"
#include "tcas/manifest.hpp"
#include "tcas/model.hpp"

namespace tcas::train {

/// Length-normalized utterances with integer targets for one label mode.
struct Dataset {
  std::vector<feat::ManifestEntry> entries;
  std::vector<nd::Tensor> frames;
  std::vector<std::size_t> targets;
  std::size_t classes = 3;

  std::size_t size() const { return frames.size(); }
  std::size_t channels() const { return frames.empty() ? 0 : frames.front().cols(); }
};

/// bonafide → 0; tts → 1, vc → 2 (multilabel) or both → 1 (binary).
std::size_t class_index(feat::Label label, LabelMode mode);

/// Reads every feature file of a manifest and applies fix_length.
Dataset load_dataset(const std::filesystem::path& manifest, std::size_t t_target, LabelMode mode);

struct LossParts {
  Var cav;
  Var tca;
  Var total;
};

LossParts utterance_loss(const model::ForwardVars& out, std::size_t target, const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;  // 0 = initialization
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct DevEval {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean total loss and argmax(z′) accuracy in eval mode.
DevEval evaluate(model::ModelParams& params, const Dataset& data, const TrainConfig& config);

struct FitResult {
  Checkpoint best;
  std::vector<EpochStats> history;
  /// Shuffled utterance indices of every first-epoch batch, in order.
  std::vector<std::vector<std::size_t>> first_epoch_batches;
  std::vector<double> first_epoch_batch_losses;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam training with a seeded shuffle per epoch. After every epoch the dev
/// set is scored in eval mode; the parameters with the lowest dev loss
/// (earliest on ties, initialization counted as epoch 0) are returned.
FitResult fit(const Dataset& train, const Dataset& dev, const TrainConfig& config, const EpochCallback& on_epoch = {});
/// Loads both manifests; c_in is taken from the training features.
FitResult fit(const std::filesystem::path& train_manifest, const std::filesystem::path& dev_manifest,
              TrainConfig config, const EpochCallback& on_epoch = {});

}  // namespace tcas::train
