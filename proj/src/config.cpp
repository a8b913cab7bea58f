#include "tcas/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "tcas/error.hpp"

namespace tcas::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line_no);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("config key '" + key + "': '" + text + "' is not a non-negative integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "': '" + text + "' is not a boolean (on/off)");
}

std::vector<double> TrainConfig::class_weights() const {
  if (!wce_weights.empty()) return wce_weights;
  return mode == LabelMode::binary ? std::vector<double>{8.0, 1.0} : std::vector<double>{8.0, 1.0, 1.0};
}

LossWeights TrainConfig::loss_weights() const {
  return cav_loss_enabled ? LossWeights{lambda1, lambda2} : LossWeights{0.0, 1.0};
}

AdamOptions TrainConfig::adam() const {
  return {lr, adam_beta1, adam_beta2, adam_eps, weight_decay, decoupled_weight_decay};
}

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m = model;
  m.classes = num_classes();
  return m;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
  const auto w = class_weights();
  if (w.size() != num_classes())
    throw ConfigError("wce_weights has " + std::to_string(w.size()) + " entries, mode needs " +
                      std::to_string(num_classes()));
  for (double x : w)
    if (!(x > 0.0)) throw ConfigError("wce_weights must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
    throw ConfigError("adam betas must be in [0, 1) and eps > 0");
  model_config().validate();
}

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "lr",       "weight_decay",  "decoupled_weight_decay", "epochs",     "batch_size", "lambda1",
      "lambda2",  "wce_weights",   "mode",                   "cav_loss_enabled", "use_utterance", "cav_per_class",
      "t_target", "c_in",          "hidden",                 "channels",   "dropout",    "bn_eps",
      "bn_momentum", "seed",       "adam_beta1",             "adam_beta2", "adam_eps"};
  return keys;
}

KeyValues to_key_values(const TrainConfig& c) {
  auto b = [](bool v) { return std::string(v ? "on" : "off"); };
  return {
      {"lr", format_double(c.lr)},
      {"weight_decay", format_double(c.weight_decay)},
      {"decoupled_weight_decay", b(c.decoupled_weight_decay)},
      {"epochs", std::to_string(c.epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"lambda1", format_double(c.lambda1)},
      {"lambda2", format_double(c.lambda2)},
      {"wce_weights", join_doubles(c.class_weights())},
      {"mode", c.mode == LabelMode::binary ? "binary" : "multilabel"},
      {"cav_loss_enabled", b(c.cav_loss_enabled)},
      {"use_utterance", b(c.model.use_utterance)},
      {"cav_per_class", b(c.model.cav_per_class)},
      {"t_target", std::to_string(c.model.t_target)},
      {"c_in", std::to_string(c.model.c_in)},
      {"hidden", std::to_string(c.model.hidden)},
      {"channels", std::to_string(c.model.channels)},
      {"dropout", format_double(c.model.dropout)},
      {"bn_eps", format_double(c.model.bn_eps)},
      {"bn_momentum", format_double(c.model.bn_momentum)},
      {"seed", std::to_string(c.seed)},
      {"adam_beta1", format_double(c.adam_beta1)},
      {"adam_beta2", format_double(c.adam_beta2)},
      {"adam_eps", format_double(c.adam_eps)},
  };
}

void apply_key_values(TrainConfig& c, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "lr") c.lr = parse_double(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
    else if (key == "decoupled_weight_decay") c.decoupled_weight_decay = parse_bool(key, value);
    else if (key == "epochs") c.epochs = parse_unsigned(key, value);
    else if (key == "batch_size") c.batch_size = parse_unsigned(key, value);
    else if (key == "lambda1") c.lambda1 = parse_double(key, value);
    else if (key == "lambda2") c.lambda2 = parse_double(key, value);
    else if (key == "wce_weights") c.wce_weights = value.empty() ? std::vector<double>{} : parse_doubles(key, value);
    else if (key == "mode") {
      if (value == "multilabel") c.mode = LabelMode::multilabel;
      else if (value == "binary") c.mode = LabelMode::binary;
      else throw ConfigError("config key 'mode': expected multilabel or binary, got '" + value + "'");
    } else if (key == "cav_loss_enabled") c.cav_loss_enabled = parse_bool(key, value);
    else if (key == "use_utterance") c.model.use_utterance = parse_bool(key, value);
    else if (key == "cav_per_class") c.model.cav_per_class = parse_bool(key, value);
    else if (key == "t_target") c.model.t_target = parse_unsigned(key, value);
    else if (key == "c_in") c.model.c_in = parse_unsigned(key, value);
    else if (key == "hidden") c.model.hidden = parse_unsigned(key, value);
    else if (key == "channels") c.model.channels = parse_unsigned(key, value);
    else if (key == "dropout") c.model.dropout = parse_double(key, value);
    else if (key == "bn_eps") c.model.bn_eps = parse_double(key, value);
    else if (key == "bn_momentum") c.model.bn_momentum = parse_double(key, value);
    else if (key == "seed") c.seed = parse_unsigned(key, value);
    else if (key == "adam_beta1") c.adam_beta1 = parse_double(key, value);
    else if (key == "adam_beta2") c.adam_beta2 = parse_double(key, value);
    else if (key == "adam_eps") c.adam_eps = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace tcas::train
