#include "tcas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "tcas/error.hpp"

namespace tcas::train {

namespace {

constexpr char kMagic[5] = {'T', 'C', 'A', 'S', '1'};

std::string shape_field(const nd::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out;
}

nd::Shape parse_shape(const std::string& text, std::uint64_t offset) {
  nd::Shape s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      s.push_back(parse_unsigned("shape", item));
    } catch (const ConfigError&) {
      throw FormatError("bad shape '" + text + "'", offset);
    }
  }
  if (s.empty()) throw FormatError("empty shape", offset);
  return s;
}

struct ParamLine {
  std::string name;
  nd::Shape shape;
  std::uint64_t bytes;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::string header;
  header += "version=" + std::to_string(kCheckpointVersion) + "\n";
  for (const auto& [k, v] : to_key_values(ckpt.config)) header += "config." + k + "=" + v + "\n";
  header += "best_dev_loss=" + format_double(ckpt.best_dev_loss) + "\n";
  header += "epoch=" + std::to_string(ckpt.epoch) + "\n";
  header += "rng_state=" + ckpt.rng_state + "\n";
  for (const auto& p : ckpt.params.entries())
    header += "param=" + p.name + " " + shape_field(p.value.shape()) + " " + std::to_string(8 * p.value.size()) + "\n";

  std::vector<std::uint8_t> out(kMagic, kMagic + 5);
  const auto len = static_cast<std::uint32_t>(header.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), header.begin(), header.end());
  for (const auto& p : ckpt.params.entries())
    for (double v : p.value.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 9) throw FormatError("checkpoint truncated before header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 5) != 0) throw FormatError("bad checkpoint magic", 0);
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[5 + i]) << (8 * i);
  if (bytes.size() - 9 < len) throw FormatError("checkpoint header truncated", bytes.size());
  const std::string header(bytes.begin() + 9, bytes.begin() + 9 + len);

  Checkpoint ckpt;
  KeyValues config_kv;
  std::vector<ParamLine> lines;
  bool have_version = false;
  std::istringstream is(header);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed header line '" + line + "'", 9);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "version") {
      if (value != std::to_string(kCheckpointVersion))
        throw FormatError("unsupported checkpoint version " + value, 9);
      have_version = true;
    } else if (key.rfind("config.", 0) == 0) {
      config_kv.emplace_back(key.substr(7), value);
    } else if (key == "best_dev_loss") {
      ckpt.best_dev_loss = parse_double(key, value);
    } else if (key == "epoch") {
      ckpt.epoch = parse_unsigned(key, value);
    } else if (key == "rng_state") {
      ckpt.rng_state = value;
    } else if (key == "param") {
      std::istringstream ps(value);
      std::string name, shape, nbytes;
      if (!(ps >> name >> shape >> nbytes)) throw FormatError("malformed param line '" + line + "'", 9);
      lines.push_back({name, parse_shape(shape, 9), parse_unsigned("bytes", nbytes)});
    } else {
      throw FormatError("unknown header key '" + key + "'", 9);
    }
  }
  if (!have_version) throw FormatError("checkpoint header lacks a version", 9);
  try {
    apply_key_values(ckpt.config, config_kv);
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what(), 9);
  }

  Rng unused(0);
  model::ModelParams params(ckpt.config.model_config(), unused);
  std::map<std::string, bool> filled;
  std::uint64_t offset = 9 + static_cast<std::uint64_t>(len);
  for (const auto& pl : lines) {
    if (!params.contains(pl.name)) throw FormatError("unknown parameter '" + pl.name + "'", offset);
    nd::Param& p = params.get(pl.name);
    if (pl.shape != p.value.shape() || pl.bytes != 8 * p.value.size())
      throw FormatError("parameter '" + pl.name + "' has shape " + nd::shape_str(pl.shape) + ", expected " +
                        nd::shape_str(p.value.shape()), offset);
    if (filled[pl.name]) throw FormatError("parameter '" + pl.name + "' appears twice", offset);
    if (bytes.size() - offset < pl.bytes) throw FormatError("blob for '" + pl.name + "' truncated", bytes.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[offset + 8 * i + b]) << (8 * b);
      p.value[i] = std::bit_cast<double>(bits);
    }
    offset += pl.bytes;
    filled[pl.name] = true;
  }
  for (const auto& p : params.entries())
    if (!filled[p.name]) throw FormatError("parameter '" + p.name + "' missing", offset);
  if (offset != bytes.size()) throw FormatError("trailing bytes after last blob", offset);
  for (auto& p : params.entries())
    if (!p.value.all_finite()) throw FormatError("parameter '" + p.name + "' holds non-finite values", offset);
  ckpt.params = std::move(params);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace tcas::train
