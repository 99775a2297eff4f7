#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "laa/eval.hpp"
#include "laa/rng.hpp"

using namespace laa::eval;

namespace {

// Builds prediction/label vectors realizing the requested counts.
void fill_cases(long tp, long fp, long fn, long tn, std::vector<int>& preds,
                std::vector<int>& labels) {
  preds.clear();
  labels.clear();
  auto add = [&](int p, int l, long n) {
    for (long i = 0; i < n; ++i) {
      preds.push_back(p);
      labels.push_back(l);
    }
  };
  add(1, 1, tp);
  add(1, 0, fp);
  add(0, 1, fn);
  add(0, 0, tn);
}

}  // namespace

TEST_CASE("confusion counts the four quadrants") {
  auto m = confusion({1, 0}, {1, 0});
  CHECK(m.tp == 1);
  CHECK(m.tn == 1);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);

  auto fp = confusion({1}, {0});
  CHECK(fp.fp == 1);
  CHECK(fp.tp + fp.fn + fp.tn == 0);
}

TEST_CASE("published detector outcomes reproduce the stated accuracies") {
  std::vector<int> preds, labels;
  fill_cases(141, 10, 2, 197, preds, labels);
  auto lstm = confusion(preds, labels);
  CHECK(lstm.total() == 350);
  CHECK(accuracy(lstm) == 338.0 / 350.0);
  CHECK(accuracy(lstm) == doctest::Approx(0.9657).epsilon(1e-4));

  fill_cases(137, 33, 6, 174, preds, labels);
  auto ann = confusion(preds, labels);
  CHECK(ann.total() == 350);
  CHECK(accuracy(ann) == 311.0 / 350.0);
  CHECK(accuracy(ann) == doctest::Approx(0.8886).epsilon(1e-4));
  CHECK(accuracy(lstm) > accuracy(ann));
}

TEST_CASE("accuracy is order-invariant and symmetric in preds vs labels") {
  std::vector<int> preds, labels;
  fill_cases(4, 3, 2, 6, preds, labels);
  auto base = confusion(preds, labels);

  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  laa::Rng rng(9);
  rng.shuffle(order);
  std::vector<int> p2, l2;
  for (std::size_t i : order) {
    p2.push_back(preds[i]);
    l2.push_back(labels[i]);
  }
  auto shuffled = confusion(p2, l2);
  CHECK(shuffled.tp == base.tp);
  CHECK(shuffled.fp == base.fp);
  CHECK(shuffled.fn == base.fn);
  CHECK(shuffled.tn == base.tn);

  auto swapped = confusion(labels, preds);
  CHECK(accuracy(swapped) == accuracy(base));
  CHECK(swapped.fp == base.fn);
  CHECK(swapped.fn == base.fp);

  auto perfect = confusion({1, 1, 0}, {1, 1, 0});
  CHECK(accuracy(perfect) == 1.0);
  CHECK(accuracy(base) >= 0.0);
  CHECK(accuracy(base) <= 1.0);
}

TEST_CASE("confusion and accuracy reject malformed input") {
  CHECK_THROWS_AS(confusion({1, 0}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(confusion({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(confusion({2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(confusion({1}, {-1}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{-1, 1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("reports carry one row per model after the header") {
  std::vector<NamedMatrix> table = {{"lstm", {141, 10, 2, 197}},
                                    {"ann", {137, 33, 6, 174}}};
  std::string text = report_text(table);
  CHECK(text.find("lstm") != std::string::npos);
  CHECK(text.find("ann") != std::string::npos);
  CHECK(text.find("0.965714") != std::string::npos);
  CHECK(text.find("0.888571") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);

  std::string csv = report_csv(table);
  CHECK(csv ==
        "model,tp,fp,fn,tn,accuracy,false_positive_rate,false_negative_rate\n"
        "lstm,141,10,2,197,0.965714,0.028571,0.005714\n"
        "ann,137,33,6,174,0.888571,0.094286,0.017143\n");

  std::string empty_text = report_text({});
  CHECK(std::count(empty_text.begin(), empty_text.end(), '\n') == 1);
  CHECK(report_csv({}) ==
        "model,tp,fp,fn,tn,accuracy,false_positive_rate,false_negative_"
        "rate\n");

  std::string one = report_text({{"lstm", {1, 0, 0, 1}}});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
}
