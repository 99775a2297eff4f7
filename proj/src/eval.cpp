#include "laa/eval.hpp"

#include <cstdio>
#include <stdexcept>

namespace laa::eval {

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& labels) {
  if (preds.empty() || preds.size() != labels.size())
    throw std::invalid_argument(
        "confusion needs equal-length non-empty prediction and label lists");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1))
      throw std::invalid_argument("predictions and labels must be 0 or 1");
    if (preds[i] == 1)
      labels[i] == 1 ? ++m.tp : ++m.fp;
    else
      labels[i] == 1 ? ++m.fn : ++m.tn;
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  if (m.tp < 0 || m.fp < 0 || m.fn < 0 || m.tn < 0)
    throw std::invalid_argument("confusion counts must be non-negative");
  if (m.total() == 0)
    throw std::invalid_argument("accuracy of an empty confusion matrix");
  return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
}

namespace {

struct RowValues {
  double acc = 0.0;
  double fp_share = 0.0;
  double fn_share = 0.0;
};

RowValues row_values(const ConfusionMatrix& m) {
  RowValues v;
  v.acc = accuracy(m);
  v.fp_share = static_cast<double>(m.fp) / static_cast<double>(m.total());
  v.fn_share = static_cast<double>(m.fn) / static_cast<double>(m.total());
  return v;
}

}  // namespace

std::string report_text(const std::vector<NamedMatrix>& entries) {
  std::string out =
      "model            tp     fp     fn     tn  accuracy   fp_rate   "
      "fn_rate\n";
  char line[160];
  for (const NamedMatrix& e : entries) {
    RowValues v = row_values(e.matrix);
    std::snprintf(line, sizeof(line),
                  "%-12s %6ld %6ld %6ld %6ld  %8.6f  %8.6f  %8.6f\n",
                  e.name.c_str(), e.matrix.tp, e.matrix.fp, e.matrix.fn,
                  e.matrix.tn, v.acc, v.fp_share, v.fn_share);
    out += line;
  }
  return out;
}

std::string report_csv(const std::vector<NamedMatrix>& entries) {
  std::string out =
      "model,tp,fp,fn,tn,accuracy,false_positive_rate,false_negative_rate\n";
  char line[160];
  for (const NamedMatrix& e : entries) {
    RowValues v = row_values(e.matrix);
    std::snprintf(line, sizeof(line), "%s,%ld,%ld,%ld,%ld,%.6f,%.6f,%.6f\n",
                  e.name.c_str(), e.matrix.tp, e.matrix.fp, e.matrix.fn,
                  e.matrix.tn, v.acc, v.fp_share, v.fn_share);
    out += line;
  }
  return out;
}

}  // namespace laa::eval
