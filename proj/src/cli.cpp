#include "tcas/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "tcas/checkpoint.hpp"
#include "tcas/config.hpp"
#include "tcas/error.hpp"
#include "tcas/explain.hpp"
#include "tcas/features.hpp"
#include "tcas/gradsuite.hpp"
#include "tcas/metrics.hpp"
#include "tcas/scoring.hpp"
#include "tcas/synth.hpp"
#include "tcas/trainer.hpp"

namespace tcas::cli {

namespace fs = std::filesystem;
using train::KeyValues;

namespace {

/// Config-file keys and `--key value` flags of one subcommand.
class KeyedCommand {
 public:
  KeyedCommand(CLI::App& app, std::vector<std::string> keys, std::map<std::string, std::string> defaults)
      : keys_(std::move(keys)), defaults_(std::move(defaults)) {
    app.add_option("--config", config_path_, "key = value file; flags override its entries");
    for (const auto& key : keys_) app.add_option("--" + key, flags_[key], description(key));
  }

  /// Defaults, then the config file, then flags.
  KeyValues resolve() const {
    std::map<std::string, std::string> merged = defaults_;
    if (!config_path_.empty()) {
      for (const auto& [key, value] : train::read_key_values(config_path_)) {
        if (std::find(keys_.begin(), keys_.end(), key) == keys_.end())
          throw ConfigError("unknown config key '" + key + "' in " + config_path_);
        merged[key] = value;
      }
    }
    for (const auto& [key, value] : flags_)
      if (!value.empty()) merged[key] = value;
    KeyValues out;
    for (const auto& key : keys_)
      if (auto it = merged.find(key); it != merged.end()) out.emplace_back(key, it->second);
    return out;
  }

 private:
  std::string description(const std::string& key) const {
    auto it = defaults_.find(key);
    return it == defaults_.end() ? key : key + " (default " + it->second + ")";
  }

  std::vector<std::string> keys_;
  std::map<std::string, std::string> defaults_;
  std::string config_path_;
  std::map<std::string, std::string> flags_;
};

std::optional<std::string> lookup(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return std::nullopt;
}

std::string require(const KeyValues& kv, const std::string& key) {
  auto v = lookup(kv, key);
  if (!v || v->empty()) throw UsageError("missing required option --" + key);
  return *v;
}

KeyValues split(const KeyValues& kv, const std::vector<std::string>& keys, bool inside) {
  KeyValues out;
  for (const auto& e : kv)
    if ((std::find(keys.begin(), keys.end(), e.first) != keys.end()) == inside) out.push_back(e);
  return out;
}

void echo(std::ostream& err, const std::string& command, const KeyValues& kv) {
  err << "# effective config (" << command << ")\n" << train::format_key_values(kv);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ---- synth ----

const std::vector<std::string> kSynthKeys = {"out_dir", "seed", "frames", "channels", "window_len",
                                             "noise_scale", "n_train", "n_dev", "n_eval"};

int run_synth(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  echo(err, "synth", kv);
  const fs::path dir = require(kv, "out_dir");
  feat::SynthSpec spec;
  spec.seed = train::parse_unsigned("seed", require(kv, "seed"));
  spec.frames = train::parse_unsigned("frames", require(kv, "frames"));
  spec.channels = train::parse_unsigned("channels", require(kv, "channels"));
  spec.window_len = train::parse_unsigned("window_len", require(kv, "window_len"));
  spec.noise_scale = train::parse_double("noise_scale", require(kv, "noise_scale"));
  fs::create_directories(dir);
  for (const char* split : {"train", "dev", "eval"}) {
    spec.n_total = train::parse_unsigned(std::string("n_") + split, require(kv, std::string("n_") + split));
    const auto made = feat::synthesize_corpus(spec, dir, split);
    out << split << ": " << made.entries.size() << " utterances -> " << made.manifest.string() << "\n";
  }
  return kExitOk;
}

// ---- train ----

const std::vector<std::string> kTrainPathKeys = {"train_manifest", "dev_manifest", "checkpoint", "log"};

int run_train(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  train::TrainConfig config;
  train::apply_key_values(config, split(kv, kTrainPathKeys, false));
  const fs::path train_manifest = require(kv, "train_manifest");
  const fs::path dev_manifest = require(kv, "dev_manifest");
  const fs::path checkpoint = require(kv, "checkpoint");
  const fs::path log_path = lookup(kv, "log").value_or(checkpoint.string() + ".log");

  const auto train_set = train::load_dataset(train_manifest, config.model.t_target, config.mode);
  const auto dev_set = train::load_dataset(dev_manifest, config.model.t_target, config.mode);
  if (train_set.size() == 0) throw UsageError("training manifest is empty");
  config.model.c_in = train_set.channels();
  config.validate();

  KeyValues effective = train::to_key_values(config);
  for (const auto& key : kTrainPathKeys)
    effective.emplace_back(key, key == "log" ? log_path.string() : require(kv, key));
  echo(err, "train", effective);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot open log " + log_path.string());
  log << "# effective config (train)\n" << train::format_key_values(effective) << "# epoch train_loss dev_loss dev_accuracy\n";

  const auto on_epoch = [&](const train::EpochStats& s) {
    const std::string line = std::to_string(s.epoch) + " " + train::format_double(s.train_loss) + " " +
                             train::format_double(s.dev_loss) + " " + train::format_double(s.dev_accuracy);
    log << line << "\n" << std::flush;
    err << "epoch " << s.epoch << ": train " << fmt("%.5f", s.train_loss) << "  dev " << fmt("%.5f", s.dev_loss)
        << "  acc " << fmt("%.4f", s.dev_accuracy) << "\n";
  };
  const auto result = train::fit(train_set, dev_set, config, on_epoch);
  train::save_checkpoint(result.best, checkpoint);
  out << "best epoch " << result.best.epoch << ", dev loss " << fmt("%.6f", result.best.best_dev_loss) << " -> "
      << checkpoint.string() << "\n";
  return kExitOk;
}

// ---- eval ----

const std::vector<std::string> kEvalKeys = {"checkpoint", "manifest", "scores", "tdcf_config"};

int run_eval(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  echo(err, "eval", kv);
  auto ckpt = train::load_checkpoint(require(kv, "checkpoint"));
  const fs::path manifest = require(kv, "manifest");
  const auto data = train::load_dataset(manifest, ckpt.config.model.t_target, ckpt.config.mode);
  if (data.size() > 0 && data.channels() != ckpt.params.config().c_in)
    throw DimensionError("features have " + std::to_string(data.channels()) + " channels, checkpoint expects " +
                         std::to_string(ckpt.params.config().c_in));
  const auto records = train::score_dataset(ckpt.params, data);
  metrics::write_scores(records, require(kv, "scores"));

  const auto tdcf_path = lookup(kv, "tdcf_config");
  const metrics::TdcfCosts costs =
      tdcf_path && !tdcf_path->empty() ? metrics::read_tdcf_costs(*tdcf_path) : metrics::TdcfCostModel{}.costs();
  std::vector<std::string> attacks;
  for (const auto& e : data.entries)
    if (e.label != feat::Label::bonafide && std::find(attacks.begin(), attacks.end(), e.attack_id) == attacks.end())
      attacks.push_back(e.attack_id);
  const auto breakdown = metrics::breakdown_by_attack(records, attacks);
  const auto tdcf = metrics::compute_min_tdcf(records, costs);

  out << "trials " << records.size() << "\n";
  out << "pooled EER " << fmt("%.4f%%", 100.0 * breakdown.pooled_eer) << "\n";
  out << "min t-DCF " << fmt("%.5f", tdcf.value) << "\n";
  out << "attack  trials  EER\n";
  for (const auto& a : breakdown.per_attack)
    out << a.attack_id << std::string(a.attack_id.size() < 8 ? 8 - a.attack_id.size() : 1, ' ')
        << fmt("%6.0f", static_cast<double>(a.trials)) << "  " << fmt("%.4f%%", 100.0 * a.eer) << "\n";
  for (const auto& s : breakdown.skipped) err << "notice: attack " << s << " has no trials, skipped\n";
  return kExitOk;
}

// ---- explain ----

const std::vector<std::string> kExplainKeys = {"checkpoint", "manifest", "utt", "out_dir",
                                               "masks", "cell_width", "cell_height"};

int run_explain(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  echo(err, "explain", kv);
  auto ckpt = train::load_checkpoint(require(kv, "checkpoint"));
  const fs::path manifest = require(kv, "manifest");
  const std::string utt = require(kv, "utt");
  const fs::path dir = require(kv, "out_dir");
  const auto entries = feat::load_manifest(manifest);
  const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.utt_id == utt; });
  if (it == entries.end()) throw UsageError("utterance " + utt + " is not in " + manifest.string());

  const auto& mcfg = ckpt.params.config();
  const auto seq = feat::fix_length(feat::read_features(feat::resolve_entry(manifest, *it)), mcfg.t_target);
  const auto output = model::model_forward(seq.frames, ckpt.params);
  const auto map = explain::extract_tca_map(output.embed, output.gate, output.z, model::class_names(mcfg.classes), utt,
                                            mcfg.use_utterance);

  explain::RenderSpec spec;
  spec.cell_width = train::parse_unsigned("cell_width", require(kv, "cell_width"));
  spec.cell_height = train::parse_unsigned("cell_height", require(kv, "cell_height"));
  fs::create_directories(dir);
  explain::export_csv(map, dir / (utt + ".csv"));
  explain::export_ppm(map, spec, dir / (utt + ".ppm"));
  out << explain::render_ascii(map, spec);
  out << "wrote " << (dir / (utt + ".csv")).string() << " and " << (dir / (utt + ".ppm")).string() << "\n";

  if (auto masks = lookup(kv, "masks"); masks && !masks->empty()) {
    if (it->label == feat::Label::bonafide) {
      out << "localization: n/a for bonafide utterances\n";
    } else {
      const auto windows = feat::load_plant_windows(*masks);
      const auto mask = feat::make_plant_mask(windows, utt, map.num_frames());
      const std::size_t cls = train::class_index(it->label, ckpt.config.mode);
      out << "localization AUC " << fmt("%.4f", explain::localization_score(map, mask, cls)) << "\n";
    }
  }
  return kExitOk;
}

// ---- gradcheck ----

constexpr double kGradTolerance = 1e-4;

int run_gradcheck(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  echo(err, "gradcheck", kv);
  train::GradSuiteOptions options;
  options.seed = train::parse_unsigned("seed", require(kv, "seed"));
  options.step = train::parse_double("step", require(kv, "step"));
  if (!(options.step > 0.0)) throw ConfigError("step must be positive");
  const auto results = train::run_gradient_suite(options);
  for (const auto& r : results)
    out << r.name << std::string(r.name.size() < 36 ? 36 - r.name.size() : 1, ' ') << fmt("%.3e", r.result.max_rel_error)
        << "\n";
  const double worst = train::max_error(results);
  out << "max relative error " << fmt("%.3e", worst) << " (tolerance " << fmt("%.0e", kGradTolerance) << ")\n";
  return worst <= kGradTolerance ? kExitOk : kExitFailure;
}

std::map<std::string, std::string> train_defaults() {
  std::map<std::string, std::string> d;
  for (const auto& [k, v] : train::to_key_values(train::TrainConfig{})) d[k] = v;
  return d;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Temporal class activation spoof detector", "tcas");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all subcommand help");

  auto* synth = app.add_subcommand("synth", "Write a synthetic train/dev/eval corpus with manifests and masks");
  KeyedCommand synth_keys(*synth, kSynthKeys,
                          {{"seed", "42"}, {"frames", "50"}, {"channels", "24"}, {"window_len", "10"},
                           {"noise_scale", "0.25"}, {"n_train", "600"}, {"n_dev", "200"}, {"n_eval", "200"}});

  auto* trainc = app.add_subcommand("train", "Fit the model and save the best checkpoint");
  KeyedCommand train_keys(*trainc, concat(train::train_config_keys(), kTrainPathKeys), train_defaults());

  auto* evalc = app.add_subcommand("eval", "Score a manifest; print pooled EER, min t-DCF and per-attack EER");
  KeyedCommand eval_keys(*evalc, kEvalKeys, {});

  auto* explainc = app.add_subcommand("explain", "Write the TCA map of one utterance as CSV, PPM and text");
  KeyedCommand explain_keys(*explainc, kExplainKeys, {{"cell_width", "4"}, {"cell_height", "16"}});

  auto* gradc = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the full model");
  KeyedCommand grad_keys(*gradc, {"seed", "step"}, {{"seed", "42"}, {"step", "1e-6"}});

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty()) err << "error: " << e.what() << "\n";
    err << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_keys.resolve(), out, err);
    if (trainc->parsed()) return run_train(train_keys.resolve(), out, err);
    if (evalc->parsed()) return run_eval(eval_keys.resolve(), out, err);
    if (explainc->parsed()) return run_explain(explain_keys.resolve(), out, err);
    if (gradc->parsed()) return run_gradcheck(grad_keys.resolve(), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tcas::cli
