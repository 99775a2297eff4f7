#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "laa/dataset.hpp"
#include "laa/nn.hpp"

namespace laa::model_io {

// A trained detector plus everything needed to score a raw scenario: the
// normalizer fitted on its training split and the decision threshold.
struct SavedModel {
  std::string kind;  // "lstm" or "mlp"
  nn::LstmParams lstm;
  nn::MlpParams mlp;
  double threshold = 0.5;
  dataset::NormalizationStats normalizer;
};

// Versioned JSON; weights are flat row-major arrays whose shapes follow the
// recorded input/hidden sizes. Doubles round-trip exactly.
void save_model(const SavedModel& model, std::ostream& out);
SavedModel load_model(std::istream& in);

// `epoch,train_loss,val_accuracy`, one row per epoch.
void write_history_csv(const std::vector<nn::EpochStats>& history,
                       std::ostream& out);

}  // namespace laa::model_io
