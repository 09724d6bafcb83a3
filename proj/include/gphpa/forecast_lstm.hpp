#pragma once

// Next-minute workload forecaster: a stacked LSTM over a sliding window of
// past request rates, followed by a tanh dense head. Inputs and targets are
// min-max scaled to [-0.8, 0.8] with statistics from the training targets,
// which keeps every representable target inside the head's open range.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gphpa/rng.hpp"
#include "gphpa/scaler.hpp"
#include "gphpa/tensor.hpp"

namespace gphpa {

class EmptyDatasetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

struct WorkloadSeries {
  std::string service;
  std::int64_t start_minute = 0;
  std::vector<double> values;
};

struct WindowSample {
  std::vector<double> window;
  double target = 0.0;
};

/// All T-k (window, next value) pairs; pair j covers values[j, j+k) -> values[j+k].
inline std::vector<WindowSample> make_windows(std::span<const double> values, std::size_t k) {
  if (k < 1) throw std::invalid_argument("make_windows: window must be >= 1");
  if (values.size() < k + 1) {
    throw EmptyDatasetError("make_windows: series of length " + std::to_string(values.size()) +
                            " yields no windows of size " + std::to_string(k));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw std::invalid_argument("make_windows: value " + std::to_string(i) +
                                  " is negative or non-finite");
    }
  }
  std::vector<WindowSample> out;
  out.reserve(values.size() - k);
  for (std::size_t j = 0; j + k < values.size(); ++j) {
    out.push_back({std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(j),
                                       values.begin() + static_cast<std::ptrdiff_t>(j + k)),
                   values[j + k]});
  }
  return out;
}

inline std::vector<WindowSample> make_windows(const WorkloadSeries& series, std::size_t k) {
  return make_windows(std::span<const double>(series.values), k);
}

struct LstmConfig {
  std::size_t window = 10;
  std::size_t layers = 1;
  std::size_t hidden_units = 50;
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;

  void validate() const {
    if (window < 1 || layers < 1 || hidden_units < 1 || epochs < 1 || batch_size < 1) {
      throw std::invalid_argument(
          "LstmConfig: window, layers, hidden_units, epochs and batch_size must all be >= 1");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("LstmConfig: learning_rate <= 0");
  }

  friend bool operator==(const LstmConfig&, const LstmConfig&) = default;
};

/// Gate blocks are packed column-wise in the order input, forget, candidate,
/// output, each hidden_units wide.
struct LstmLayer {
  Matrix input_weights;      // in x 4H
  Matrix recurrent_weights;  // H x 4H
  Matrix bias;               // 1 x 4H
};

struct LstmModel {
  LstmConfig config;
  std::vector<LstmLayer> layers;
  Matrix head_weights;  // H x 1
  Matrix head_bias;     // 1 x 1
  MinMaxScaler scaler{0.0, 1.0, -0.8, 0.8};

  std::size_t hidden() const noexcept { return config.hidden_units; }

  /// Glorot weights, zero biases except the forget block at 1.
  static LstmModel initialize(const LstmConfig& config, Rng& rng) {
    config.validate();
    LstmModel m;
    m.config = config;
    const std::size_t h = config.hidden_units;
    for (std::size_t l = 0; l < config.layers; ++l) {
      const std::size_t in = l == 0 ? 1 : h;
      LstmLayer layer{glorot_init(in, 4 * h, rng), glorot_init(h, 4 * h, rng), Matrix(1, 4 * h)};
      for (std::size_t j = h; j < 2 * h; ++j) layer.bias[j] = 1.0;
      m.layers.push_back(std::move(layer));
    }
    m.head_weights = glorot_init(h, 1, rng);
    m.head_bias = Matrix(1, 1);
    return m;
  }

  void validate() const {
    const std::size_t h = config.hidden_units;
    if (layers.size() != config.layers) throw ShapeError("LstmModel: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::size_t in = l == 0 ? 1 : h;
      const auto& L = layers[l];
      if (L.input_weights.rows() != in || L.input_weights.cols() != 4 * h ||
          L.recurrent_weights.rows() != h || L.recurrent_weights.cols() != 4 * h ||
          L.bias.rows() != 1 || L.bias.cols() != 4 * h) {
        throw ShapeError("LstmModel: layer " + std::to_string(l) +
                         " gate matrices do not match (input, hidden_units)");
      }
    }
    if (head_weights.rows() != h || head_weights.cols() != 1 || head_bias.rows() != 1 ||
        head_bias.cols() != 1) {
      throw ShapeError("LstmModel: dense head shape mismatch");
    }
  }
};

/// Same layout as the model's trainable parameters.
struct LstmGradients {
  std::vector<LstmLayer> layers;
  Matrix head_weights;
  Matrix head_bias;

  static LstmGradients zeros_like(const LstmModel& m) {
    LstmGradients g;
    for (const auto& L : m.layers) {
      g.layers.push_back({Matrix(L.input_weights.rows(), L.input_weights.cols()),
                          Matrix(L.recurrent_weights.rows(), L.recurrent_weights.cols()),
                          Matrix(1, L.bias.cols())});
    }
    g.head_weights = Matrix(m.head_weights.rows(), 1);
    g.head_bias = Matrix(1, 1);
    return g;
  }
};

/// Trainable matrices in a fixed order shared by models and gradients.
template <typename Params>
std::vector<Matrix*> parameter_list(Params& p) {
  std::vector<Matrix*> out;
  for (auto& L : p.layers) {
    out.push_back(&L.input_weights);
    out.push_back(&L.recurrent_weights);
    out.push_back(&L.bias);
  }
  out.push_back(&p.head_weights);
  out.push_back(&p.head_bias);
  return out;
}

namespace lstm_detail {

struct StepCache {
  Matrix input;   // B x in
  Matrix gates;   // B x 4H, post-activation
  Matrix cell;    // B x H
  Matrix cell_tanh;
  Matrix hidden;  // B x H
};

struct ForwardCache {
  std::vector<std::vector<StepCache>> layers;  // [layer][timestep]
  Matrix output;                               // B x 1, tanh head output
};

inline void run_layer(const LstmLayer& layer, std::size_t h, const std::vector<Matrix>& inputs,
                      std::vector<StepCache>& steps) {
  const std::size_t batch = inputs.front().rows();
  const std::size_t in = layer.input_weights.rows();
  const std::size_t g4 = 4 * h;
  steps.clear();
  steps.reserve(inputs.size());
  const double* bias = layer.bias.values().data();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    StepCache s{inputs[t], Matrix(batch, g4), Matrix(batch, h), Matrix(batch, h), Matrix(batch, h)};
    double* z = s.gates.values().data();
    for (std::size_t b = 0; b < batch; ++b) std::copy(bias, bias + g4, z + b * g4);
    detail::gemm_acc(s.input.values().data(), layer.input_weights.values().data(), z, batch, in, g4);
    if (t > 0) {
      detail::gemm_acc(steps.back().hidden.values().data(),
                       layer.recurrent_weights.values().data(), z, batch, h, g4);
    }
    const double* c_prev = t > 0 ? steps.back().cell.values().data() : nullptr;
    double* cell = s.cell.values().data();
    double* cell_tanh = s.cell_tanh.values().data();
    double* hidden = s.hidden.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
      double* g = z + b * g4;
      for (std::size_t j = 0; j < h; ++j) {
        const double ig = sigmoid(g[j]);
        const double fg = sigmoid(g[h + j]);
        const double cg = std::tanh(g[2 * h + j]);
        const double og = sigmoid(g[3 * h + j]);
        g[j] = ig;
        g[h + j] = fg;
        g[2 * h + j] = cg;
        g[3 * h + j] = og;
        const double c = (c_prev ? fg * c_prev[b * h + j] : 0.0) + ig * cg;
        const double tc = std::tanh(c);
        cell[b * h + j] = c;
        cell_tanh[b * h + j] = tc;
        hidden[b * h + j] = og * tc;
      }
    }
    steps.push_back(std::move(s));
  }
}

/// inputs: B x k, already scaled. Returns the B x 1 head output.
inline Matrix forward_scaled(const LstmModel& model, const Matrix& inputs, ForwardCache* cache) {
  if (inputs.cols() != model.config.window) {
    throw ShapeError("lstm_forward: window of length " + std::to_string(inputs.cols()) +
                     " given to a model with k=" + std::to_string(model.config.window));
  }
  const std::size_t batch = inputs.rows();
  const std::size_t h = model.hidden();
  std::vector<Matrix> seq;
  seq.reserve(inputs.cols());
  for (std::size_t t = 0; t < inputs.cols(); ++t) {
    Matrix x(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) x[b] = inputs(b, t);
    seq.push_back(std::move(x));
  }
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.layers.assign(model.layers.size(), {});
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    run_layer(model.layers[l], h, seq, fc.layers[l]);
    if (l + 1 < model.layers.size()) {
      for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = fc.layers[l][t].hidden;
    }
  }
  const Matrix& top = fc.layers.back().back().hidden;
  Matrix out(batch, 1);
  for (std::size_t b = 0; b < batch; ++b) {
    double acc = model.head_bias[0];
    for (std::size_t j = 0; j < h; ++j) acc += top(b, j) * model.head_weights[j];
    out[b] = std::tanh(acc);
  }
  if (!out.all_finite()) throw NonFiniteError("lstm_forward: non-finite output");
  fc.output = out;
  return out;
}

}  // namespace lstm_detail

/// Mean squared error over the batch in scaled units. When grads is non-null
/// it receives d(loss)/d(parameter) by backpropagation through time.
inline double lstm_loss(const LstmModel& model, const Matrix& inputs, const Matrix& targets,
                        LstmGradients* grads = nullptr) {
  using namespace lstm_detail;
  if (targets.rows() != inputs.rows() || targets.cols() != 1) {
    throw ShapeError("lstm_loss: targets " + targets.shape_string() + " do not match inputs " +
                     inputs.shape_string());
  }
  ForwardCache cache;
  const Matrix y = forward_scaled(model, inputs, grads ? &cache : nullptr);
  const std::size_t batch = inputs.rows();
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double d = y[b] - targets[b];
    loss += d * d;
  }
  loss *= inv_b;
  if (!grads) return loss;

  *grads = LstmGradients::zeros_like(model);
  const std::size_t h = model.hidden();
  const std::size_t steps = inputs.cols();

  Matrix d_pre(batch, 1);
  for (std::size_t b = 0; b < batch; ++b) {
    d_pre[b] = 2.0 * (y[b] - targets[b]) * inv_b * (1.0 - y[b] * y[b]);
  }
  const Matrix& top_last = cache.layers.back().back().hidden;
  grads->head_weights = matmul_tn(top_last, d_pre);
  grads->head_bias[0] = column_sums(d_pre)[0];

  // dh arriving from above at every timestep; only the last step feeds the head.
  std::vector<Matrix> dh_above(steps, Matrix(batch, h));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < h; ++j) dh_above.back()(b, j) = d_pre[b] * model.head_weights[j];
  }

  const std::size_t g4 = 4 * h;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const LstmLayer& layer = model.layers[li];
    LstmLayer& g = grads->layers[li];
    const auto& sc = cache.layers[li];
    const std::size_t in = layer.input_weights.rows();
    const Matrix wx_t = transpose(layer.input_weights);
    const Matrix wh_t = transpose(layer.recurrent_weights);
    const bool need_dx = li > 0;
    std::vector<Matrix> dx(need_dx ? steps : 0, Matrix(batch, in));
    Matrix dh_next(batch, h);
    Matrix dc_next(batch, h);
    Matrix dz(batch, g4);
    double* dzp = dz.values().data();
    double* dcn = dc_next.values().data();
    double* bias_grad = g.bias.values().data();
    for (std::size_t t = steps; t-- > 0;) {
      const StepCache& s = sc[t];
      const double* gates = s.gates.values().data();
      const double* tcp = s.cell_tanh.values().data();
      const double* cprev = t > 0 ? sc[t - 1].cell.values().data() : nullptr;
      const double* dha = dh_above[t].values().data();
      const double* dhn = dh_next.values().data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* gate = gates + b * g4;
        double* dzr = dzp + b * g4;
        for (std::size_t j = 0; j < h; ++j) {
          const std::size_t bj = b * h + j;
          const double ig = gate[j], fg = gate[h + j], cg = gate[2 * h + j], og = gate[3 * h + j];
          const double tc = tcp[bj];
          const double c_prev = cprev ? cprev[bj] : 0.0;
          const double dh = dha[bj] + dhn[bj];
          const double dc = dcn[bj] + dh * og * (1.0 - tc * tc);
          dzr[j] = dc * cg * ig * (1.0 - ig);
          dzr[h + j] = dc * c_prev * fg * (1.0 - fg);
          dzr[2 * h + j] = dc * ig * (1.0 - cg * cg);
          dzr[3 * h + j] = dh * tc * og * (1.0 - og);
          dcn[bj] = dc * fg;
        }
        for (std::size_t j = 0; j < g4; ++j) bias_grad[j] += dzr[j];
      }
      detail::gemm_tn_acc(s.input.values().data(), dzp, g.input_weights.values().data(), batch,
                          in, g4);
      if (t > 0) {
        detail::gemm_tn_acc(sc[t - 1].hidden.values().data(), dzp,
                            g.recurrent_weights.values().data(), batch, h, g4);
      }
      if (need_dx) detail::gemm_acc(dzp, wx_t.values().data(), dx[t].values().data(), batch, g4, in);
      dh_next.fill(0.0);
      if (t > 0) detail::gemm_acc(dzp, wh_t.values().data(), dh_next.values().data(), batch, g4, h);
    }
    if (need_dx) dh_above = std::move(dx);
  }
  return loss;
}

/// Scales a raw window, runs the network and maps the head output back to
/// request-rate units.
inline double lstm_forward(const LstmModel& model, std::span<const double> window) {
  if (window.size() != model.config.window) {
    throw ShapeError("lstm_forward: window of length " + std::to_string(window.size()) +
                     " given to a model with k=" + std::to_string(model.config.window));
  }
  Matrix x(1, window.size());
  for (std::size_t t = 0; t < window.size(); ++t) x[t] = model.scaler.transform(window[t]);
  const Matrix y = lstm_detail::forward_scaled(model, x, nullptr);
  return model.scaler.inverse(y[0]);
}

/// Batched lstm_forward over many windows.
inline std::vector<double> lstm_predict(const LstmModel& model,
                                        const std::vector<WindowSample>& samples) {
  if (samples.empty()) return {};
  const std::size_t k = model.config.window;
  Matrix x(samples.size(), k);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].window.size() != k) {
      throw ShapeError("lstm_predict: window of length " +
                       std::to_string(samples[i].window.size()) + " given to a model with k=" +
                       std::to_string(k));
    }
    for (std::size_t t = 0; t < k; ++t) x(i, t) = model.scaler.transform(samples[i].window[t]);
  }
  const Matrix y = lstm_detail::forward_scaled(model, x, nullptr);
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = model.scaler.inverse(y[i]);
  return out;
}

struct ErrorMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

inline ErrorMetrics evaluate(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(truth.size()) + " truths");
  }
  if (predictions.empty()) throw EmptyDatasetError("evaluate: no values");
  ErrorMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    m.mse += d * d;
    m.mae += std::abs(d);
  }
  m.mse /= static_cast<double>(truth.size());
  m.mae /= static_cast<double>(truth.size());
  return m;
}

/// Predict-the-last-value baseline: a^(t+1) = a^(t).
inline std::vector<double> persistence_forecast(const std::vector<WindowSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.window.back());
  return out;
}

inline std::vector<double> targets_of(const std::vector<WindowSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.target);
  return out;
}

/// Per-epoch MSE in scaled units, evaluated on the full split after the epoch.
struct EpochLoss {
  std::size_t epoch = 0;
  double train = 0.0;
  double valid = std::numeric_limits<double>::quiet_NaN();
  friend bool operator==(const EpochLoss& a, const EpochLoss& b) {
    const auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.epoch == b.epoch && same(a.train, b.train) && same(a.valid, b.valid);
  }
};

struct LstmTrainingResult {
  LstmModel model;
  std::vector<EpochLoss> history;
};

namespace lstm_detail {

inline void scaled_matrices(const MinMaxScaler& sc, const std::vector<WindowSample>& samples,
                            std::size_t k, Matrix& x, Matrix& y) {
  x = Matrix(samples.size(), k);
  y = Matrix(samples.size(), 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].window.size() != k) {
      throw ShapeError("train_lstm: window " + std::to_string(i) + " has length " +
                       std::to_string(samples[i].window.size()) + ", expected " +
                       std::to_string(k));
    }
    for (std::size_t t = 0; t < k; ++t) x(i, t) = sc.transform(samples[i].window[t]);
    y[i] = sc.transform(samples[i].target);
  }
}

}  // namespace lstm_detail

/// Mini-batch Adam on scaled MSE. Shuffle order and initialization both come
/// from config.seed, so identical inputs give bit-identical histories.
inline LstmTrainingResult train_lstm(const std::vector<WindowSample>& train,
                                     const std::vector<WindowSample>& valid,
                                     const LstmConfig& config) {
  config.validate();
  if (train.empty()) throw EmptyDatasetError("train_lstm: empty training set");
  const std::size_t k = config.window;

  const std::vector<double> train_targets = targets_of(train);
  Rng rng(config.seed);
  LstmTrainingResult result{LstmModel::initialize(config, rng), {}};
  LstmModel& model = result.model;
  model.scaler = MinMaxScaler::fit(train_targets, -0.8, 0.8);

  Matrix x_train, y_train, x_valid, y_valid;
  lstm_detail::scaled_matrices(model.scaler, train, k, x_train, y_train);
  if (!valid.empty()) lstm_detail::scaled_matrices(model.scaler, valid, k, x_valid, y_valid);

  const auto params = parameter_list(model);
  std::vector<AdamState> adam;
  adam.reserve(params.size());
  const AdamConfig adam_cfg{config.learning_rate};
  for (const Matrix* p : params) adam.push_back(AdamState::fresh_like(*p, adam_cfg));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LstmGradients grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      Matrix xb(end - start, k);
      Matrix yb(end - start, 1);
      for (std::size_t r = start; r < end; ++r) {
        const auto src = x_train.row(order[r]);
        std::copy(src.begin(), src.end(), xb.row(r - start).begin());
        yb[r - start] = y_train[order[r]];
      }
      double batch_loss = 0.0;
      try {
        batch_loss = lstm_loss(model, xb, yb, &grads);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("train_lstm: ") + e.what(), epoch);
      }
      if (!std::isfinite(batch_loss)) throw DivergenceError("train_lstm: non-finite loss", epoch);
      const auto gparams = parameter_list(grads);
      try {
        for (std::size_t i = 0; i < params.size(); ++i) adam_update(*params[i], *gparams[i], adam[i]);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("train_lstm: ") + e.what(), epoch);
      }
    }
    EpochLoss entry{epoch, lstm_loss(model, x_train, y_train)};
    if (!valid.empty()) entry.valid = lstm_loss(model, x_valid, y_valid);
    if (!std::isfinite(entry.train) || (!valid.empty() && !std::isfinite(entry.valid))) {
      throw DivergenceError("train_lstm: non-finite loss", epoch);
    }
    result.history.push_back(entry);
  }
  return result;
}

}  // namespace gphpa
