#include "tcas/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace tcas::train {

double detection_score(const nd::Tensor& z_prime) {
  const auto z = z_prime.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  return std::exp(z[0] - mx) / total;
}

namespace {

metrics::ScoreRecord score_one(model::ModelParams& params, const Dataset& data, std::size_t i) {
  nd::Tape tape;
  Rng unused(0);
  const auto out = model::forward(tape, data.frames[i], params, nd::Mode::eval, unused);
  const auto& e = data.entries[i];
  return {e.utt_id, e.attack_id, e.label == feat::Label::bonafide ? metrics::Key::bonafide : metrics::Key::spoof,
          detection_score(out.z_prime.value())};
}

}  // namespace

std::vector<metrics::ScoreRecord> score_dataset(model::ModelParams& params, const Dataset& data) {
  std::vector<metrics::ScoreRecord> out(data.size());
  const auto n = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = score_one(params, data, static_cast<std::size_t>(i));
  return out;
}

namespace serial {
std::vector<metrics::ScoreRecord> score_dataset(model::ModelParams& params, const Dataset& data) {
  std::vector<metrics::ScoreRecord> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(score_one(params, data, i));
  return out;
}
}  // namespace serial

}  // namespace tcas::train
