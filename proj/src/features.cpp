#include "tcas/features.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "tcas/error.hpp"

namespace tcas::feat {

namespace {

constexpr std::array<char, 5> kMagic = {'F', 'E', 'A', 'T', '1'};
constexpr std::size_t kHeaderBytes = kMagic.size() + 8;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_features(const FeatureSeq& seq, const std::filesystem::path& path) {
  const auto& m = seq.frames;
  if (m.rank() != 2) throw DimensionError("write_features: frames must be a matrix");
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw DimensionError("write_features: extent exceeds 32 bits");
  std::vector<unsigned char> bytes;
  bytes.reserve(kHeaderBytes + 8 * m.size());
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  put_u32(bytes, static_cast<std::uint32_t>(m.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) put_f64(bytes, v);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

FeatureSeq read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (bytes.size() < kMagic.size()) throw FormatError("truncated magic in " + path.string(), bytes.size());
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("bad magic in " + path.string(), 0);
  if (bytes.size() < kHeaderBytes) throw FormatError("truncated header in " + path.string(), bytes.size());
  const std::uint64_t frames = get_u32(bytes.data() + 5);
  const std::uint64_t channels = get_u32(bytes.data() + 9);
  if (frames == 0 || channels == 0) throw FormatError("zero extent in " + path.string(), 5);
  // u32·u32·8 fits in 67 bits only if checked; compare against what is present instead.
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (frames > payload / 8 / channels) throw FormatError("truncated payload in " + path.string(), bytes.size());
  const std::uint64_t count = frames * channels;
  if (payload != count * 8) throw FormatError("trailing bytes in " + path.string(), kHeaderBytes + count * 8);

  std::vector<double> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = get_f64(bytes.data() + kHeaderBytes + 8 * i);
    if (!std::isfinite(data[i])) throw FormatError("non-finite value in " + path.string(), kHeaderBytes + 8 * i);
  }
  return FeatureSeq{path.stem().string(), nd::Tensor({frames, channels}, std::move(data)), kDefaultFrameStride};
}

FeatureSeq fix_length(const FeatureSeq& seq, std::size_t t_target) {
  if (t_target == 0) throw UsageError("fix_length: t_target must be >= 1");
  const std::size_t t = seq.num_frames(), c = seq.num_channels();
  if (t == t_target) return seq;
  std::vector<double> data(t_target * c);
  const auto src = seq.frames.data();
  for (std::size_t i = 0; i < t_target; ++i) {
    const std::size_t from = i % t;
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(from * c), c,
                data.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return FeatureSeq{seq.utt_id, nd::Tensor({t_target, c}, std::move(data)), seq.frame_stride};
}

}  // namespace tcas::feat
