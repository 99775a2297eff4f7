#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace laa::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Gate weights act on the concatenation [x(t), h(t-1)], so each matrix is
// H x (F+H). w_out/b_out form the sigmoid classifier head on h(T).
struct LstmParams {
  int input_size = 0;
  int hidden_size = 0;
  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;
  Vector w_out;
  double b_out = 0.0;

  // All entries uniform in [-scale, scale] from the seeded stream, then the
  // forget-gate bias is pinned to +1.
  static LstmParams init(int input_size, int hidden_size, double scale,
                         std::uint64_t seed);

  void add_scaled(const struct LstmGradients& g, double alpha);
  void visit(const std::function<void(const char*, double&)>& fn);
};

struct LstmGradients {
  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;
  Vector w_out;
  double b_out = 0.0;

  static LstmGradients zeros(int input_size, int hidden_size);
  void accumulate(const LstmGradients& other);
  void scale(double factor);
  void clip(double limit);
  void check_finite() const;  // throws NumericError naming the tensor
};

struct CellState {
  Vector h;
  Vector c;
  static CellState zeros(int hidden_size);
};

// One memory-unit step:
//   f = sigmoid(W_f [x,h] + b_f)     i = sigmoid(W_i [x,h] + b_i)
//   g = tanh(W_c [x,h] + b_c)        c' = f.*c + i.*g
//   o = sigmoid(W_o [x,h] + b_o)     h' = o.*tanh(c')
CellState lstm_cell_forward(const Vector& x, const CellState& prev,
                            const LstmParams& p);

// Many-to-one: zero initial state, one step per sequence row, classifier
// head on the final hidden vector. Probability clamped to
// [1e-12, 1 - 1e-12].
double sequence_forward(const Matrix& seq, const LstmParams& p);

struct BpttResult {
  double loss = 0.0;
  LstmGradients grads;
};

// Binary cross-entropy loss and full unrolled gradients.
BpttResult bptt(const Matrix& seq, int label, const LstmParams& p);

// 1 iff probability >= threshold.
int predict(const Matrix& seq, const LstmParams& p, double threshold);

// ---------------------------------------------------------------------------
// Feedforward baseline on the flattened sequence (rows concatenated in time
// order). One sigmoid hidden layer, sigmoid output, same loss.

struct MlpParams {
  int input_size = 0;
  int hidden_size = 0;
  Matrix w1;  // hidden x input
  Vector b1;
  Vector w2;  // hidden
  double b2 = 0.0;

  static MlpParams init(int input_size, int hidden_size, double scale,
                        std::uint64_t seed);
  void add_scaled(const struct MlpGradients& g, double alpha);
  void visit(const std::function<void(const char*, double&)>& fn);
};

struct MlpGradients {
  Matrix w1;
  Vector b1;
  Vector w2;
  double b2 = 0.0;

  static MlpGradients zeros(int input_size, int hidden_size);
  void accumulate(const MlpGradients& other);
  void scale(double factor);
  void clip(double limit);
  void check_finite() const;
};

double mlp_forward(const Matrix& seq, const MlpParams& p);

struct MlpBackwardResult {
  double loss = 0.0;
  MlpGradients grads;
};

MlpBackwardResult mlp_backward(const Matrix& seq, int label,
                               const MlpParams& p);

int mlp_predict(const Matrix& seq, const MlpParams& p, double threshold);

// ---------------------------------------------------------------------------
// Training. Deterministic given the config seed; the OpenMP path stores
// per-sample gradients in slots and reduces them in sample order, so thread
// count never changes the result. threads == 1 takes the serial reference
// path.

struct TrainConfig {
  int hidden_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;  // 0 gives plain gradient descent
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  double decision_threshold = 0.5;
  double grad_clip = 0.0;  // elementwise, 0 disables
  int threads = 1;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

// Summed batch gradients; *loss_sum gets the summed per-sample loss.
LstmGradients lstm_batch_gradient_serial(const LstmParams& p,
                                         const std::vector<const Matrix*>& xs,
                                         const std::vector<int>& ys,
                                         double* loss_sum);
LstmGradients lstm_batch_gradient(const LstmParams& p,
                                  const std::vector<const Matrix*>& xs,
                                  const std::vector<int>& ys, double* loss_sum,
                                  int threads);
MlpGradients mlp_batch_gradient_serial(const MlpParams& p,
                                       const std::vector<const Matrix*>& xs,
                                       const std::vector<int>& ys,
                                       double* loss_sum);
MlpGradients mlp_batch_gradient(const MlpParams& p,
                                const std::vector<const Matrix*>& xs,
                                const std::vector<int>& ys, double* loss_sum,
                                int threads);

struct LstmTrainResult {
  LstmParams params;  // snapshot at the best validation accuracy
  std::vector<EpochStats> history;
};

struct MlpTrainResult {
  MlpParams params;
  std::vector<EpochStats> history;
};

LstmTrainResult train_lstm(const std::vector<Matrix>& train_x,
                           const std::vector<int>& train_y,
                           const std::vector<Matrix>& val_x,
                           const std::vector<int>& val_y,
                           const TrainConfig& cfg);

MlpTrainResult train_mlp(const std::vector<Matrix>& train_x,
                         const std::vector<int>& train_y,
                         const std::vector<Matrix>& val_x,
                         const std::vector<int>& val_y,
                         const TrainConfig& cfg);

}  // namespace laa::nn
