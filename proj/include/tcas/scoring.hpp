#pragma once

#include <vector>

#include "tcas/metrics.hpp"
#include "tcas/model.hpp"
#include "tcas/trainer.hpp"

namespace tcas::train {

/// softmax(z′)[bonafide]; the spoof probability is the remaining mass.
double detection_score(const nd::Tensor& z_prime);

/// Eval-mode scores for every utterance, computed in parallel; one record
/// per utterance in dataset order.
std::vector<metrics::ScoreRecord> score_dataset(model::ModelParams& params, const Dataset& data);

namespace serial {
std::vector<metrics::ScoreRecord> score_dataset(model::ModelParams& params, const Dataset& data);
}

}  // namespace tcas::train
