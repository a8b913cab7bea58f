#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace tcas {

/// Seeded generator with platform-independent real-valued draws.
///
/// std::mt19937_64's bit stream is fixed by the standard, but the std::
/// distributions are not, so uniform and normal variates are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  /// Independent stream for a named purpose ("data", "init", "dropout", "shuffle").
  static Rng stream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace tcas
