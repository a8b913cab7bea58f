#include "tcas/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "tcas/error.hpp"
#include "tcas/features.hpp"

namespace tcas::train {

std::size_t class_index(feat::Label label, LabelMode mode) {
  switch (label) {
    case feat::Label::bonafide: return 0;
    case feat::Label::tts: return 1;
    case feat::Label::vc: return mode == LabelMode::binary ? 1 : 2;
  }
  return 0;
}

Dataset load_dataset(const std::filesystem::path& manifest, std::size_t t_target, LabelMode mode) {
  Dataset data;
  data.classes = mode == LabelMode::binary ? 2 : 3;
  data.entries = feat::load_manifest(manifest);
  for (const auto& e : data.entries) {
    auto seq = feat::fix_length(feat::read_features(feat::resolve_entry(manifest, e)), t_target);
    if (!data.frames.empty() && seq.num_channels() != data.channels())
      throw DimensionError("utterance " + e.utt_id + " has " + std::to_string(seq.num_channels()) +
                           " channels, expected " + std::to_string(data.channels()));
    data.frames.push_back(std::move(seq.frames));
    data.targets.push_back(class_index(e.label, mode));
  }
  return data;
}

LossParts utterance_loss(const model::ForwardVars& out, std::size_t target, const TrainConfig& config) {
  const std::size_t k = out.z.value().size();
  if (target >= k) throw UsageError("target class " + std::to_string(target) + " does not exist for K = " + std::to_string(k));
  const auto w = config.class_weights();
  const Tensor weights({w.size()}, w);
  const Tensor y = one_hot(target, k);
  LossParts parts;
  parts.cav = wce_loss(out.z, y, weights);
  parts.tca = wce_loss(out.z_prime, y, weights);
  parts.total = total_loss(parts.cav, parts.tca, config.loss_weights());
  return parts;
}

namespace {

void check_dataset(const Dataset& data, const TrainConfig& config, const char* which) {
  if (data.size() == 0) throw UsageError(std::string(which) + " set is empty");
  if (data.classes != config.num_classes())
    throw ConfigError(std::string(which) + " set was labeled for " + std::to_string(data.classes) +
                      " classes but the label mode needs " + std::to_string(config.num_classes()));
  for (auto t : data.targets)
    if (t >= config.num_classes()) throw ConfigError(std::string(which) + " set holds a label outside the mode");
  for (const auto& f : data.frames)
    if (f.rows() != config.model.t_target || f.cols() != config.model.c_in)
      throw DimensionError(std::string(which) + " utterance of shape " + nd::shape_str(f.shape()) +
                           " does not match t_target × c_in");
}

}  // namespace

DevEval evaluate(model::ModelParams& params, const Dataset& data, const TrainConfig& config) {
  const auto n = static_cast<std::ptrdiff_t>(data.size());
  std::vector<double> losses(data.size());
  std::vector<int> correct(data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    nd::Tape tape;
    Rng unused(0);
    const auto out = model::forward(tape, data.frames[idx], params, nd::Mode::eval, unused);
    losses[idx] = utterance_loss(out, data.targets[idx], config).total.value().item();
    const auto zp = out.z_prime.value().data();
    correct[idx] = static_cast<std::size_t>(std::max_element(zp.begin(), zp.end()) - zp.begin()) == data.targets[idx];
  }
  DevEval r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    r.loss += losses[i];
    r.accuracy += correct[i];
  }
  r.loss /= static_cast<double>(data.size());
  r.accuracy /= static_cast<double>(data.size());
  return r;
}

FitResult fit(const Dataset& train, const Dataset& dev, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(train, config, "training");
  check_dataset(dev, config, "dev");

  Rng init_rng = Rng::stream(config.seed, "init");
  Rng shuffle_rng = Rng::stream(config.seed, "shuffle");
  Rng dropout_rng = Rng::stream(config.seed, "dropout");
  model::ModelParams params(config.model_config(), init_rng);
  const auto learnable = params.learnable();
  AdamState adam;
  const AdamOptions adam_options = config.adam();

  FitResult result;
  auto record = [&](EpochStats stats) {
    const DevEval dev_eval = evaluate(params, dev, config);
    stats.dev_loss = dev_eval.loss;
    stats.dev_accuracy = dev_eval.accuracy;
    result.history.push_back(stats);
    if (result.history.size() == 1 || stats.dev_loss < result.best.best_dev_loss) {
      result.best = Checkpoint{config, params, stats.dev_loss, stats.epoch, shuffle_rng.state()};
    }
    if (on_epoch) on_epoch(stats);
  };
  record(EpochStats{0, 0.0, 0.0, 0.0});

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        nd::Tape tape;
        const auto out = model::forward(tape, train.frames[order[b]], params, nd::Mode::train, dropout_rng);
        const LossParts loss = utterance_loss(out, train.targets[order[b]], config);
        batch_loss += loss.total.value().item();
        tape.backward(nd::scale(loss.total, inv));
      }
      adam_step(learnable, adam, adam_options);
      epoch_loss += batch_loss;
      if (epoch == 1) {
        result.first_epoch_batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                order.begin() + static_cast<std::ptrdiff_t>(end));
        result.first_epoch_batch_losses.push_back(batch_loss * inv);
      }
    }
    record(EpochStats{epoch, epoch_loss / static_cast<double>(order.size()), 0.0, 0.0});
  }
  return result;
}

FitResult fit(const std::filesystem::path& train_manifest, const std::filesystem::path& dev_manifest,
              TrainConfig config, const EpochCallback& on_epoch) {
  const Dataset train = load_dataset(train_manifest, config.model.t_target, config.mode);
  const Dataset dev = load_dataset(dev_manifest, config.model.t_target, config.mode);
  if (train.size() == 0) throw UsageError("training manifest is empty");
  config.model.c_in = train.channels();
  return fit(train, dev, config, on_epoch);
}

}  // namespace tcas::train
