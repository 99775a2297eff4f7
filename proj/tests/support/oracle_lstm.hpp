#pragma once

#include <vector>

// Reference forward pass written with plain index loops over std::vector,
// independent of the production implementation and of Eigen.

struct OracleLstmWeights {
  int input_size = 0;
  int hidden_size = 0;
  // Row-major, hidden_size rows of (input_size + hidden_size) columns.
  std::vector<std::vector<double>> w_f, w_i, w_c, w_o;
  std::vector<double> b_f, b_i, b_c, b_o;
  std::vector<double> w_out;
  double b_out = 0.0;
};

struct OracleLstmOutput {
  std::vector<double> final_h;
  std::vector<double> final_c;
  double probability = 0.0;  // raw sigmoid of the head logit
};

// seq[t] is the input vector at step t; initial state is all zeros.
OracleLstmOutput oracle_lstm_forward(
    const OracleLstmWeights& w,
    const std::vector<std::vector<double>>& seq);
