#pragma once

// Checkpoint file: "TCAS1", u32 LE header length, UTF-8 header of
// `key=value` lines (version, config.*, best_dev_loss, epoch, rng_state and
// one `param=<name> <shape> <bytes>` per tensor), then the raw binary64 LE
// blobs in header order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tcas/config.hpp"
#include "tcas/model.hpp"

namespace tcas::train {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  model::ModelParams params;
  double best_dev_loss = 0.0;
  std::size_t epoch = 0;
  std::string rng_state;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, version mismatch or blob length mismatch.
/// Parameters are matched by name, so header order is free.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tcas::train
