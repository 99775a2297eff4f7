#pragma once

#include <string>
#include <vector>

namespace laa::eval {

// Attacked is the positive class.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& labels);

double accuracy(const ConfusionMatrix& m);

struct NamedMatrix {
  std::string name;
  ConfusionMatrix matrix;
};

// Per-model counts, accuracy, and false-positive/negative shares of all
// cases. Text for people, CSV for machines; both start with a header row.
std::string report_text(const std::vector<NamedMatrix>& entries);
std::string report_csv(const std::vector<NamedMatrix>& entries);

}  // namespace laa::eval
