#pragma once

// FEAT1 feature files: "FEAT1", u32 LE frames, u32 LE channels, then
// frames·channels IEEE-754 binary64 LE values in frame-major order.

#include <cstddef>
#include <filesystem>
#include <string>

#include "tcas/tensor.hpp"

namespace tcas::feat {

inline constexpr double kDefaultFrameStride = 0.02;

/// One utterance's frame-level embedding, frames × channels.
struct FeatureSeq {
  std::string utt_id;
  nd::Tensor frames;
  double frame_stride = kDefaultFrameStride;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t num_channels() const { return frames.cols(); }
};

void write_features(const FeatureSeq& seq, const std::filesystem::path& path);
/// Throws FormatError (with byte offset) on bad magic, truncation or
/// impossible extents. The utt_id is taken from the file stem.
FeatureSeq read_features(const std::filesystem::path& path);

/// Truncates to the first t_target frames or repeats frames cyclically from
/// the first one until t_target frames exist.
FeatureSeq fix_length(const FeatureSeq& seq, std::size_t t_target);

}  // namespace tcas::feat
