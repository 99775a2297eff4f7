#include "laa/nn.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "laa/errors.hpp"
#include "laa/rng.hpp"

namespace laa::nn {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_prob(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

double bce_loss(double p, int label) {
  const double pc = clamp_prob(p);
  return label == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

void fill_uniform(Matrix& m, double scale, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-scale, scale);
    }
  }
}

void fill_uniform(Vector& v, double scale, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = rng.uniform(-scale, scale);
  }
}

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + name);
  }
}

void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + name);
  }
}

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw NumericError(std::string("non-finite values in ") + name);
  }
}

void check_sequence(const Matrix& seq, const LstmParams& p) {
  if (seq.rows() < 1 || seq.cols() != p.input_size) {
    std::ostringstream msg;
    msg << "sequence shape " << seq.rows() << "x" << seq.cols()
        << " does not match input size " << p.input_size;
    throw std::invalid_argument(msg.str());
  }
}

struct StepCache {
  Vector z;  // [x; h_prev]
  Vector f, i, g, o;
  Vector c, tanh_c;
};

// Runs the cell over the whole sequence keeping gate activations for the
// backward pass. Returns the unclamped output probability.
double forward_cached(const Matrix& seq, const LstmParams& p,
                      std::vector<StepCache>* cache) {
  const int hidden = p.hidden_size;
  const int input = p.input_size;
  Vector h = Vector::Zero(hidden);
  Vector c = Vector::Zero(hidden);
  const auto steps = seq.rows();
  if (cache != nullptr) {
    cache->resize(static_cast<std::size_t>(steps));
  }
  for (Eigen::Index t = 0; t < steps; ++t) {
    Vector z(input + hidden);
    z.head(input) = seq.row(t).transpose();
    z.tail(hidden) = h;
    Vector f = (p.w_f * z + p.b_f).unaryExpr(&sigmoid);
    Vector i = (p.w_i * z + p.b_i).unaryExpr(&sigmoid);
    Vector g = (p.w_c * z + p.b_c).array().tanh().matrix();
    Vector o = (p.w_o * z + p.b_o).unaryExpr(&sigmoid);
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    Vector tanh_c = c.array().tanh().matrix();
    h = o.cwiseProduct(tanh_c);
    if (cache != nullptr) {
      auto& step = (*cache)[static_cast<std::size_t>(t)];
      step.z = std::move(z);
      step.f = std::move(f);
      step.i = std::move(i);
      step.g = std::move(g);
      step.o = std::move(o);
      step.c = c;
      step.tanh_c = std::move(tanh_c);
    }
  }
  require_finite(h, "hidden state");
  require_finite(c, "cell state");
  const double logit = p.w_out.dot(h) + p.b_out;
  return sigmoid(logit);
}

}  // namespace

LstmParams LstmParams::init(int input_size, int hidden_size, double scale,
                            std::uint64_t seed) {
  if (input_size < 1 || hidden_size < 1) {
    throw std::invalid_argument("network sizes must be positive");
  }
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  const int z = input_size + hidden_size;
  p.w_f.resize(hidden_size, z);
  p.w_i.resize(hidden_size, z);
  p.w_c.resize(hidden_size, z);
  p.w_o.resize(hidden_size, z);
  p.b_f.resize(hidden_size);
  p.b_i.resize(hidden_size);
  p.b_c.resize(hidden_size);
  p.b_o.resize(hidden_size);
  p.w_out.resize(hidden_size);
  Rng rng(seed);
  fill_uniform(p.w_f, scale, rng);
  fill_uniform(p.w_i, scale, rng);
  fill_uniform(p.w_c, scale, rng);
  fill_uniform(p.w_o, scale, rng);
  fill_uniform(p.b_f, scale, rng);
  fill_uniform(p.b_i, scale, rng);
  fill_uniform(p.b_c, scale, rng);
  fill_uniform(p.b_o, scale, rng);
  fill_uniform(p.w_out, scale, rng);
  p.b_out = rng.uniform(-scale, scale);
  p.b_f.setConstant(1.0);
  return p;
}

void LstmParams::add_scaled(const LstmGradients& g, double alpha) {
  w_f += alpha * g.w_f;
  w_i += alpha * g.w_i;
  w_c += alpha * g.w_c;
  w_o += alpha * g.w_o;
  b_f += alpha * g.b_f;
  b_i += alpha * g.b_i;
  b_c += alpha * g.b_c;
  b_o += alpha * g.b_o;
  w_out += alpha * g.w_out;
  b_out += alpha * g.b_out;
}

void LstmParams::visit(const std::function<void(const char*, double&)>& fn) {
  auto walk_m = [&fn](const char* name, Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        fn(name, m(r, c));
      }
    }
  };
  auto walk_v = [&fn](const char* name, Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      fn(name, v(i));
    }
  };
  walk_m("w_f", w_f);
  walk_m("w_i", w_i);
  walk_m("w_c", w_c);
  walk_m("w_o", w_o);
  walk_v("b_f", b_f);
  walk_v("b_i", b_i);
  walk_v("b_c", b_c);
  walk_v("b_o", b_o);
  walk_v("w_out", w_out);
  fn("b_out", b_out);
}

LstmGradients LstmGradients::zeros(int input_size, int hidden_size) {
  LstmGradients g;
  const int z = input_size + hidden_size;
  g.w_f = Matrix::Zero(hidden_size, z);
  g.w_i = Matrix::Zero(hidden_size, z);
  g.w_c = Matrix::Zero(hidden_size, z);
  g.w_o = Matrix::Zero(hidden_size, z);
  g.b_f = Vector::Zero(hidden_size);
  g.b_i = Vector::Zero(hidden_size);
  g.b_c = Vector::Zero(hidden_size);
  g.b_o = Vector::Zero(hidden_size);
  g.w_out = Vector::Zero(hidden_size);
  g.b_out = 0.0;
  return g;
}

void LstmGradients::accumulate(const LstmGradients& other) {
  w_f += other.w_f;
  w_i += other.w_i;
  w_c += other.w_c;
  w_o += other.w_o;
  b_f += other.b_f;
  b_i += other.b_i;
  b_c += other.b_c;
  b_o += other.b_o;
  w_out += other.w_out;
  b_out += other.b_out;
}

void LstmGradients::scale(double factor) {
  w_f *= factor;
  w_i *= factor;
  w_c *= factor;
  w_o *= factor;
  b_f *= factor;
  b_i *= factor;
  b_c *= factor;
  b_o *= factor;
  w_out *= factor;
  b_out *= factor;
}

void LstmGradients::clip(double limit) {
  auto clamp_m = [limit](Matrix& m) {
    m = m.cwiseMax(-limit).cwiseMin(limit);
  };
  auto clamp_v = [limit](Vector& v) {
    v = v.cwiseMax(-limit).cwiseMin(limit);
  };
  clamp_m(w_f);
  clamp_m(w_i);
  clamp_m(w_c);
  clamp_m(w_o);
  clamp_v(b_f);
  clamp_v(b_i);
  clamp_v(b_c);
  clamp_v(b_o);
  clamp_v(w_out);
  b_out = std::clamp(b_out, -limit, limit);
}

void LstmGradients::check_finite() const {
  require_finite(w_f, "w_f gradient");
  require_finite(w_i, "w_i gradient");
  require_finite(w_c, "w_c gradient");
  require_finite(w_o, "w_o gradient");
  require_finite(b_f, "b_f gradient");
  require_finite(b_i, "b_i gradient");
  require_finite(b_c, "b_c gradient");
  require_finite(b_o, "b_o gradient");
  require_finite(w_out, "w_out gradient");
  require_finite(b_out, "b_out gradient");
}

CellState CellState::zeros(int hidden_size) {
  CellState s;
  s.h = Vector::Zero(hidden_size);
  s.c = Vector::Zero(hidden_size);
  return s;
}

CellState lstm_cell_forward(const Vector& x, const CellState& prev,
                            const LstmParams& p) {
  if (x.size() != p.input_size || prev.h.size() != p.hidden_size ||
      prev.c.size() != p.hidden_size) {
    throw std::invalid_argument("cell input sizes do not match parameters");
  }
  Vector z(p.input_size + p.hidden_size);
  z.head(p.input_size) = x;
  z.tail(p.hidden_size) = prev.h;
  const Vector f = (p.w_f * z + p.b_f).unaryExpr(&sigmoid);
  const Vector i = (p.w_i * z + p.b_i).unaryExpr(&sigmoid);
  const Vector g = (p.w_c * z + p.b_c).array().tanh().matrix();
  const Vector o = (p.w_o * z + p.b_o).unaryExpr(&sigmoid);
  CellState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

double sequence_forward(const Matrix& seq, const LstmParams& p) {
  check_sequence(seq, p);
  return clamp_prob(forward_cached(seq, p, nullptr));
}

BpttResult bptt(const Matrix& seq, int label, const LstmParams& p) {
  check_sequence(seq, p);
  if (label != 0 && label != 1) {
    throw std::invalid_argument("label must be 0 or 1");
  }
  const int hidden = p.hidden_size;
  const int input = p.input_size;
  const auto steps = seq.rows();

  std::vector<StepCache> cache;
  const double prob = forward_cached(seq, p, &cache);
  require_finite(prob, "output probability");

  BpttResult out;
  out.loss = bce_loss(prob, label);
  require_finite(out.loss, "loss");
  out.grads = LstmGradients::zeros(input, hidden);
  auto& g = out.grads;

  const auto& last = cache.back();
  const Vector h_last = last.o.cwiseProduct(last.tanh_c);
  const double dlogit = clamp_prob(prob) - static_cast<double>(label);
  g.w_out = dlogit * h_last;
  g.b_out = dlogit;

  Vector dh = dlogit * p.w_out;
  Vector dc = Vector::Zero(hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto& s = cache[static_cast<std::size_t>(t)];
    const Vector c_prev =
        t > 0 ? cache[static_cast<std::size_t>(t - 1)].c : Vector::Zero(hidden);
    const Vector da_o = dh.cwiseProduct(s.tanh_c)
                            .cwiseProduct(s.o)
                            .cwiseProduct(Vector::Ones(hidden) - s.o);
    dc += dh.cwiseProduct(s.o).cwiseProduct(
        (Vector::Ones(hidden) - s.tanh_c.cwiseProduct(s.tanh_c)));
    const Vector da_f = dc.cwiseProduct(c_prev).cwiseProduct(s.f).cwiseProduct(
        Vector::Ones(hidden) - s.f);
    const Vector da_i = dc.cwiseProduct(s.g).cwiseProduct(s.i).cwiseProduct(
        Vector::Ones(hidden) - s.i);
    const Vector da_g = dc.cwiseProduct(s.i).cwiseProduct(
        Vector::Ones(hidden) - s.g.cwiseProduct(s.g));

    g.w_f.noalias() += da_f * s.z.transpose();
    g.w_i.noalias() += da_i * s.z.transpose();
    g.w_c.noalias() += da_g * s.z.transpose();
    g.w_o.noalias() += da_o * s.z.transpose();
    g.b_f += da_f;
    g.b_i += da_i;
    g.b_c += da_g;
    g.b_o += da_o;

    const Vector dz = p.w_f.transpose() * da_f + p.w_i.transpose() * da_i +
                      p.w_c.transpose() * da_g + p.w_o.transpose() * da_o;
    dh = dz.tail(hidden);
    dc = dc.cwiseProduct(s.f);
  }
  g.check_finite();
  return out;
}

int predict(const Matrix& seq, const LstmParams& p, double threshold) {
  return sequence_forward(seq, p) >= threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------

namespace {

Vector flatten(const Matrix& seq) {
  Vector x(seq.rows() * seq.cols());
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    x.segment(t * seq.cols(), seq.cols()) = seq.row(t).transpose();
  }
  return x;
}

void check_flat_input(const Matrix& seq, const MlpParams& p) {
  if (seq.size() != p.input_size) {
    std::ostringstream msg;
    msg << "flattened sequence has " << seq.size()
        << " values, expected " << p.input_size;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

MlpParams MlpParams::init(int input_size, int hidden_size, double scale,
                          std::uint64_t seed) {
  if (input_size < 1 || hidden_size < 1) {
    throw std::invalid_argument("network sizes must be positive");
  }
  MlpParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w1.resize(hidden_size, input_size);
  p.b1.resize(hidden_size);
  p.w2.resize(hidden_size);
  Rng rng(seed);
  fill_uniform(p.w1, scale, rng);
  fill_uniform(p.b1, scale, rng);
  fill_uniform(p.w2, scale, rng);
  p.b2 = rng.uniform(-scale, scale);
  return p;
}

void MlpParams::add_scaled(const MlpGradients& g, double alpha) {
  w1 += alpha * g.w1;
  b1 += alpha * g.b1;
  w2 += alpha * g.w2;
  b2 += alpha * g.b2;
}

void MlpParams::visit(const std::function<void(const char*, double&)>& fn) {
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1.cols(); ++c) {
      fn("w1", w1(r, c));
    }
  }
  for (Eigen::Index i = 0; i < b1.size(); ++i) {
    fn("b1", b1(i));
  }
  for (Eigen::Index i = 0; i < w2.size(); ++i) {
    fn("w2", w2(i));
  }
  fn("b2", b2);
}

MlpGradients MlpGradients::zeros(int input_size, int hidden_size) {
  MlpGradients g;
  g.w1 = Matrix::Zero(hidden_size, input_size);
  g.b1 = Vector::Zero(hidden_size);
  g.w2 = Vector::Zero(hidden_size);
  g.b2 = 0.0;
  return g;
}

void MlpGradients::accumulate(const MlpGradients& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
}

void MlpGradients::scale(double factor) {
  w1 *= factor;
  b1 *= factor;
  w2 *= factor;
  b2 *= factor;
}

void MlpGradients::clip(double limit) {
  w1 = w1.cwiseMax(-limit).cwiseMin(limit);
  b1 = b1.cwiseMax(-limit).cwiseMin(limit);
  w2 = w2.cwiseMax(-limit).cwiseMin(limit);
  b2 = std::clamp(b2, -limit, limit);
}

void MlpGradients::check_finite() const {
  require_finite(w1, "w1 gradient");
  require_finite(b1, "b1 gradient");
  require_finite(w2, "w2 gradient");
  require_finite(b2, "b2 gradient");
}

double mlp_forward(const Matrix& seq, const MlpParams& p) {
  check_flat_input(seq, p);
  const Vector x = flatten(seq);
  const Vector hidden = (p.w1 * x + p.b1).unaryExpr(&sigmoid);
  require_finite(hidden, "hidden layer");
  return clamp_prob(sigmoid(p.w2.dot(hidden) + p.b2));
}

MlpBackwardResult mlp_backward(const Matrix& seq, int label,
                               const MlpParams& p) {
  check_flat_input(seq, p);
  if (label != 0 && label != 1) {
    throw std::invalid_argument("label must be 0 or 1");
  }
  const Vector x = flatten(seq);
  const Vector hidden = (p.w1 * x + p.b1).unaryExpr(&sigmoid);
  require_finite(hidden, "hidden layer");
  const double prob = clamp_prob(sigmoid(p.w2.dot(hidden) + p.b2));

  MlpBackwardResult out;
  out.loss = bce_loss(prob, label);
  require_finite(out.loss, "loss");
  out.grads = MlpGradients::zeros(p.input_size, p.hidden_size);

  const double dlogit = prob - static_cast<double>(label);
  out.grads.w2 = dlogit * hidden;
  out.grads.b2 = dlogit;
  const Vector da1 =
      (dlogit * p.w2)
          .cwiseProduct(hidden)
          .cwiseProduct(Vector::Ones(p.hidden_size) - hidden);
  out.grads.w1.noalias() = da1 * x.transpose();
  out.grads.b1 = da1;
  out.grads.check_finite();
  return out;
}

int mlp_predict(const Matrix& seq, const MlpParams& p, double threshold) {
  return mlp_forward(seq, p) >= threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------

namespace {

// Per-sample gradients land in slots and are reduced in sample order, so the
// serial and parallel paths produce bitwise identical sums.
template <typename Grad, typename BackwardFn>
Grad batch_gradient_impl(int input_size, int hidden_size,
                         const std::vector<const Matrix*>& xs,
                         const std::vector<int>& ys, double* loss_sum,
                         int threads, const BackwardFn& backward) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("sample and label counts differ");
  }
  const auto n = xs.size();
  Grad total = Grad::zeros(input_size, hidden_size);
  double loss = 0.0;
  if (threads > 1 && n > 1) {
    std::vector<Grad> slots(n);
    std::vector<double> losses(n, 0.0);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(n); ++k) {
      try {
        auto res = backward(*xs[static_cast<std::size_t>(k)],
                            ys[static_cast<std::size_t>(k)]);
        losses[static_cast<std::size_t>(k)] = res.loss;
        slots[static_cast<std::size_t>(k)] = std::move(res.grads);
      } catch (...) {
#pragma omp critical
        {
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
    for (std::size_t k = 0; k < n; ++k) {
      total.accumulate(slots[k]);
      loss += losses[k];
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      auto res = backward(*xs[k], ys[k]);
      total.accumulate(res.grads);
      loss += res.loss;
    }
  }
  if (loss_sum != nullptr) {
    *loss_sum = loss;
  }
  return total;
}

}  // namespace

LstmGradients lstm_batch_gradient_serial(const LstmParams& p,
                                         const std::vector<const Matrix*>& xs,
                                         const std::vector<int>& ys,
                                         double* loss_sum) {
  return batch_gradient_impl<LstmGradients>(
      p.input_size, p.hidden_size, xs, ys, loss_sum, 1,
      [&p](const Matrix& x, int y) { return bptt(x, y, p); });
}

LstmGradients lstm_batch_gradient(const LstmParams& p,
                                  const std::vector<const Matrix*>& xs,
                                  const std::vector<int>& ys, double* loss_sum,
                                  int threads) {
  return batch_gradient_impl<LstmGradients>(
      p.input_size, p.hidden_size, xs, ys, loss_sum, threads,
      [&p](const Matrix& x, int y) { return bptt(x, y, p); });
}

MlpGradients mlp_batch_gradient_serial(const MlpParams& p,
                                       const std::vector<const Matrix*>& xs,
                                       const std::vector<int>& ys,
                                       double* loss_sum) {
  return batch_gradient_impl<MlpGradients>(
      p.input_size, p.hidden_size, xs, ys, loss_sum, 1,
      [&p](const Matrix& x, int y) { return mlp_backward(x, y, p); });
}

MlpGradients mlp_batch_gradient(const MlpParams& p,
                                const std::vector<const Matrix*>& xs,
                                const std::vector<int>& ys, double* loss_sum,
                                int threads) {
  return batch_gradient_impl<MlpGradients>(
      p.input_size, p.hidden_size, xs, ys, loss_sum, threads,
      [&p](const Matrix& x, int y) { return mlp_backward(x, y, p); });
}

// ---------------------------------------------------------------------------

namespace {

void check_training_inputs(const std::vector<Matrix>& train_x,
                           const std::vector<int>& train_y,
                           const std::vector<Matrix>& val_x,
                           const std::vector<int>& val_y,
                           const TrainConfig& cfg) {
  if (train_x.empty() || val_x.empty()) {
    throw std::invalid_argument("training and validation sets must be non-empty");
  }
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw std::invalid_argument("sample and label counts differ");
  }
  if (cfg.hidden_size < 1 || cfg.epochs < 1 || cfg.batch_size < 1) {
    throw ConfigError("hidden size, epochs and batch size must be positive");
  }
  if (cfg.learning_rate < 0.0 || cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw ConfigError("learning rate must be >= 0 and momentum in [0, 1)");
  }
  if (cfg.decision_threshold <= 0.0 || cfg.decision_threshold >= 1.0) {
    throw ConfigError("decision threshold must lie strictly inside (0, 1)");
  }
  const auto rows = train_x.front().rows();
  const auto cols = train_x.front().cols();
  auto check_set = [rows, cols](const std::vector<Matrix>& xs,
                                const std::vector<int>& ys) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (xs[k].rows() != rows || xs[k].cols() != cols) {
        throw std::invalid_argument("all sequences must share one shape");
      }
      if (ys[k] != 0 && ys[k] != 1) {
        throw std::invalid_argument("label must be 0 or 1");
      }
    }
  };
  check_set(train_x, train_y);
  check_set(val_x, val_y);
}

// Shared minibatch loop: seeded init, per-epoch Fisher-Yates shuffle, mean
// batch gradient, momentum update, snapshot at the best validation accuracy
// (earliest epoch wins ties).
template <typename Params, typename Grads, typename Policy>
std::pair<Params, std::vector<EpochStats>> run_training(
    const std::vector<Matrix>& train_x, const std::vector<int>& train_y,
    const std::vector<Matrix>& val_x, const std::vector<int>& val_y,
    const TrainConfig& cfg, const Policy& policy) {
  check_training_inputs(train_x, train_y, val_x, val_y, cfg);

  Params params = policy.init(cfg);
  Grads velocity = Grads::zeros(params.input_size, params.hidden_size);
  const std::size_t n = train_x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Params best = params;
  double best_acc = -1.0;
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(
        derive_seed(cfg.seed, SeedPurpose::EpochShuffle,
                    static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Matrix*> xs;
      std::vector<int> ys;
      xs.reserve(stop - start);
      ys.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        xs.push_back(&train_x[order[k]]);
        ys.push_back(train_y[order[k]]);
      }
      double batch_loss = 0.0;
      Grads grads = policy.batch_gradient(params, xs, ys, &batch_loss);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      grads.scale(1.0 / static_cast<double>(xs.size()));
      if (cfg.grad_clip > 0.0) {
        grads.clip(cfg.grad_clip);
      }
      velocity.scale(cfg.momentum);
      Grads step = std::move(grads);
      step.scale(-cfg.learning_rate);
      velocity.accumulate(step);
      params.add_scaled(velocity, 1.0);
    }

    int correct = 0;
    for (std::size_t k = 0; k < val_x.size(); ++k) {
      if (policy.predict(params, val_x[k]) == val_y[k]) {
        ++correct;
      }
    }
    const double val_acc =
        static_cast<double>(correct) / static_cast<double>(val_x.size());
    history.push_back(EpochStats{epoch, epoch_loss / static_cast<double>(n),
                                 val_acc});
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best = params;
    }
  }
  return {std::move(best), std::move(history)};
}

}  // namespace

LstmTrainResult train_lstm(const std::vector<Matrix>& train_x,
                           const std::vector<int>& train_y,
                           const std::vector<Matrix>& val_x,
                           const std::vector<int>& val_y,
                           const TrainConfig& cfg) {
  struct Policy {
    const TrainConfig& cfg;
    int input_size;
    LstmParams init(const TrainConfig& c) const {
      return LstmParams::init(
          input_size, c.hidden_size, c.init_scale,
          derive_seed(c.seed, SeedPurpose::WeightInit, 0));
    }
    LstmGradients batch_gradient(const LstmParams& p,
                                 const std::vector<const Matrix*>& xs,
                                 const std::vector<int>& ys,
                                 double* loss) const {
      return lstm_batch_gradient(p, xs, ys, loss, cfg.threads);
    }
    int predict(const LstmParams& p, const Matrix& x) const {
      return nn::predict(x, p, cfg.decision_threshold);
    }
  };
  Policy policy{cfg, static_cast<int>(train_x.empty()
                                          ? 0
                                          : train_x.front().cols())};
  auto [params, history] = run_training<LstmParams, LstmGradients>(
      train_x, train_y, val_x, val_y, cfg, policy);
  return LstmTrainResult{std::move(params), std::move(history)};
}

MlpTrainResult train_mlp(const std::vector<Matrix>& train_x,
                         const std::vector<int>& train_y,
                         const std::vector<Matrix>& val_x,
                         const std::vector<int>& val_y,
                         const TrainConfig& cfg) {
  struct Policy {
    const TrainConfig& cfg;
    int input_size;
    MlpParams init(const TrainConfig& c) const {
      return MlpParams::init(
          input_size, c.hidden_size, c.init_scale,
          derive_seed(c.seed, SeedPurpose::WeightInit, 1));
    }
    MlpGradients batch_gradient(const MlpParams& p,
                                const std::vector<const Matrix*>& xs,
                                const std::vector<int>& ys,
                                double* loss) const {
      return mlp_batch_gradient(p, xs, ys, loss, cfg.threads);
    }
    int predict(const MlpParams& p, const Matrix& x) const {
      return mlp_predict(x, p, cfg.decision_threshold);
    }
  };
  Policy policy{cfg,
                static_cast<int>(train_x.empty()
                                     ? 0
                                     : train_x.front().size())};
  auto [params, history] = run_training<MlpParams, MlpGradients>(
      train_x, train_y, val_x, val_y, cfg, policy);
  return MlpTrainResult{std::move(params), std::move(history)};
}

}  // namespace laa::nn
