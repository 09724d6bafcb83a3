#pragma once

// Resource predictor: a graph convolutional network over the service graph.
// Each node's feature row is its last k-1 observed workloads followed by the
// forecast for the next minute; the output is the node's predicted peak vCPU
// over the k-minute window ending at that next minute.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gphpa/forecast_lstm.hpp"
#include "gphpa/graph.hpp"
#include "gphpa/rng.hpp"
#include "gphpa/scaler.hpp"
#include "gphpa/tensor.hpp"

namespace gphpa {

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How features and targets are min-max scaled before training.
enum class GcnScaling {
  kPerNode,  // one scaler per node, fit on that node's training rows
  kGlobal,   // one scaler shared by all nodes
};

inline std::string to_string(GcnScaling s) { return s == GcnScaling::kPerNode ? "per_node" : "global"; }

inline GcnScaling gcn_scaling_from_string(const std::string& s) {
  if (s == "per_node") return GcnScaling::kPerNode;
  if (s == "global") return GcnScaling::kGlobal;
  throw std::invalid_argument("unknown GCN scaling '" + s + "' (per_node|global)");
}

struct GcnConfig {
  std::size_t layers = 2;
  std::size_t input_features = 10;
  /// One width per hidden layer, so layers - 1 entries.
  std::vector<std::size_t> hidden_widths{32};
  std::size_t output_features = 1;
  double learning_rate = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t seed = 42;
  GcnScaling scaling = GcnScaling::kPerNode;

  void validate() const {
    if (layers < 1) throw std::invalid_argument("GcnConfig: layers must be >= 1");
    if (input_features < 1) throw std::invalid_argument("GcnConfig: input_features must be >= 1");
    if (output_features != 1) throw std::invalid_argument("GcnConfig: output_features must be 1");
    if (hidden_widths.size() != layers - 1) {
      throw std::invalid_argument("GcnConfig: expected " + std::to_string(layers - 1) +
                                  " hidden widths, got " + std::to_string(hidden_widths.size()));
    }
    for (auto w : hidden_widths)
      if (w < 1) throw std::invalid_argument("GcnConfig: hidden widths must be >= 1");
    if (epochs < 1 || batch_size < 1) {
      throw std::invalid_argument("GcnConfig: epochs and batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("GcnConfig: learning_rate <= 0");
  }

  /// Hidden layers at 32 units for a given depth.
  static GcnConfig with_layers(std::size_t layers, std::size_t input_features) {
    GcnConfig c;
    c.layers = layers;
    c.input_features = input_features;
    c.hidden_widths.assign(layers > 0 ? layers - 1 : 0, 32);
    return c;
  }

  friend bool operator==(const GcnConfig&, const GcnConfig&) = default;
};

struct GcnLayer {
  Matrix weights;  // in x out
  Matrix bias;     // 1 x out
  Activation activation = Activation::kRelu;
};

struct GcnModel {
  GcnConfig config;
  std::vector<GcnLayer> layers;
  // One per graph node, fitted on that node's training rows.
  std::vector<MinMaxScaler> feature_scalers;
  std::vector<MinMaxScaler> target_scalers;

  /// Glorot weights, zero biases, ReLU hidden layers and a linear output.
  static GcnModel initialize(const GcnConfig& config, Rng& rng) {
    config.validate();
    GcnModel m;
    m.config = config;
    std::size_t in = config.input_features;
    for (std::size_t l = 0; l < config.layers; ++l) {
      const bool last = l + 1 == config.layers;
      const std::size_t out = last ? config.output_features : config.hidden_widths[l];
      m.layers.push_back({glorot_init(in, out, rng), Matrix(1, out),
                          last ? Activation::kLinear : Activation::kRelu});
      in = out;
    }
    return m;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("GcnModel: no layers");
    if (layers.front().weights.rows() != config.input_features) {
      throw ShapeError("GcnModel: first weight matrix has " +
                       std::to_string(layers.front().weights.rows()) + " rows, expected " +
                       std::to_string(config.input_features));
    }
    if (layers.back().weights.cols() != 1) throw ShapeError("GcnModel: output layer must have 1 column");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (l > 0 && layers[l].weights.rows() != layers[l - 1].weights.cols()) {
        throw ShapeError("GcnModel: layer " + std::to_string(l) + " does not chain");
      }
      if (layers[l].bias.rows() != 1 || layers[l].bias.cols() != layers[l].weights.cols()) {
        throw ShapeError("GcnModel: layer " + std::to_string(l) + " bias shape mismatch");
      }
    }
  }
};

struct GcnGradients {
  std::vector<GcnLayer> layers;

  static GcnGradients zeros_like(const GcnModel& m) {
    GcnGradients g;
    for (const auto& L : m.layers) {
      g.layers.push_back({Matrix(L.weights.rows(), L.weights.cols()), Matrix(1, L.bias.cols()),
                          L.activation});
    }
    return g;
  }
};

template <typename Params>
std::vector<Matrix*> gcn_parameter_list(Params& p) {
  std::vector<Matrix*> out;
  for (auto& L : p.layers) {
    out.push_back(&L.weights);
    out.push_back(&L.bias);
  }
  return out;
}

namespace gcn_detail {

struct LayerCache {
  Matrix propagated;  // A_hat * H^(l)
  Matrix pre;         // propagated * W + b
  Matrix post;        // activation(pre)
};

inline Matrix forward(const GcnModel& model, const Matrix& a_hat, const Matrix& x,
                      std::vector<LayerCache>* cache) {
  if (x.rows() != a_hat.rows()) {
    throw ShapeError("gcn_forward: feature matrix " + x.shape_string() + " does not match a " +
                     std::to_string(a_hat.rows()) + "-node graph");
  }
  if (x.cols() != model.config.input_features) {
    throw ShapeError("gcn_forward: feature matrix " + x.shape_string() + " expected " +
                     std::to_string(model.config.input_features) + " columns");
  }
  if (cache) cache->clear();
  Matrix h = x;
  for (const auto& layer : model.layers) {
    Matrix propagated = matmul(a_hat, h);
    Matrix pre = add_row_bias(matmul(propagated, layer.weights), layer.bias);
    Matrix post = activation(pre, layer.activation);
    h = post;
    if (cache) cache->push_back({std::move(propagated), std::move(pre), std::move(post)});
  }
  return h;
}

}  // namespace gcn_detail

/// Z = H^(L) for H^(l+1) = act(A_hat H^(l) W^(l) + b^(l)), H^(0) = X.
/// X is in the model's scaled units and Z is returned unscaled and unclamped.
inline Matrix gcn_forward(const GcnModel& model, const ServiceGraph& graph, const Matrix& x) {
  return gcn_detail::forward(model, graph.normalized(), x, nullptr);
}

/// Mean squared error over every node of every sample, scaled units.
inline double gcn_loss(const GcnModel& model, const Matrix& a_hat, std::span<const Matrix> xs,
                       std::span<const Matrix> ys, GcnGradients* grads = nullptr) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw std::invalid_argument("gcn_loss: need matching, nonempty feature and target lists");
  }
  const double denom = static_cast<double>(xs.size() * a_hat.rows());
  if (grads) *grads = GcnGradients::zeros_like(model);
  double loss = 0.0;
  std::vector<gcn_detail::LayerCache> cache;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const Matrix z = gcn_detail::forward(model, a_hat, xs[s], grads ? &cache : nullptr);
    if (!z.same_shape(ys[s])) throw ShapeError("gcn_loss: target shape mismatch");
    Matrix d(z.rows(), 1);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      const double e = z[i] - ys[s][i];
      loss += e * e;
      d[i] = 2.0 * e / denom;
    }
    if (!grads) continue;
    for (std::size_t l = model.layers.size(); l-- > 0;) {
      const auto& L = model.layers[l];
      const auto& c = cache[l];
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= derivative(L.activation, c.pre[i], c.post[i]);
      accumulate(grads->layers[l].weights, matmul_tn(c.propagated, d));
      accumulate(grads->layers[l].bias, column_sums(d));
      if (l > 0) d = matmul_tn(a_hat, matmul_nt(d, L.weights));
    }
  }
  return loss / denom;
}

struct ResourceSample {
  /// Minute whose window-peak is being predicted (the forecast slot).
  std::int64_t minute = 0;
  Matrix features;              // N x k, raw request rates
  std::vector<double> targets;  // N, peak vCPU over the window ending at `minute`
};

/// One sample per make_windows pair: for window j (minutes j..j+k-1), node i's
/// row is [a_i(j+1), ..., a_i(j+k-1), forecast_i(j)] and its target is
/// max(resource_i(j+1..j+k)).
inline std::vector<ResourceSample> build_resource_dataset(
    const std::vector<std::vector<double>>& workloads,
    const std::vector<std::vector<double>>& resources,
    const std::vector<std::vector<double>>& forecasts, std::size_t k, std::int64_t start_minute = 0) {
  const std::size_t n = workloads.size();
  if (n == 0) throw AlignmentError("build_resource_dataset: no nodes");
  if (resources.size() != n || forecasts.size() != n) {
    throw AlignmentError("build_resource_dataset: workloads, resources and forecasts disagree on node count");
  }
  if (k < 1) throw std::invalid_argument("build_resource_dataset: window must be >= 1");
  const std::size_t t_len = workloads[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (workloads[i].size() != t_len || resources[i].size() != t_len) {
      throw AlignmentError("build_resource_dataset: node " + std::to_string(i) +
                           " series are not aligned on the same minute grid");
    }
  }
  if (t_len < k + 1) {
    throw EmptyDatasetError("build_resource_dataset: series of length " + std::to_string(t_len) +
                            " yields no samples for k=" + std::to_string(k));
  }
  const std::size_t count = t_len - k;
  for (std::size_t i = 0; i < n; ++i) {
    if (forecasts[i].size() != count) {
      throw AlignmentError("build_resource_dataset: node " + std::to_string(i) + " has " +
                           std::to_string(forecasts[i].size()) + " forecasts, expected " +
                           std::to_string(count));
    }
  }
  std::vector<ResourceSample> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    ResourceSample s{start_minute + static_cast<std::int64_t>(j + k), Matrix(n, k),
                     std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c + 1 < k; ++c) s.features(i, c) = workloads[i][j + 1 + c];
      s.features(i, k - 1) = forecasts[i][j];
      double peak = resources[i][j + 1];
      for (std::size_t m = j + 2; m <= j + k; ++m) peak = std::max(peak, resources[i][m]);
      s.targets[i] = peak;
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace gcn_detail {

inline Matrix scale_features(const GcnModel& m, const Matrix& features) {
  Matrix x = features;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (double& v : x.row(i)) v = m.feature_scalers[i].transform(v);
  }
  return x;
}

}  // namespace gcn_detail

/// Per-node peak vCPU for the next minute, in vCPU units and never negative.
inline std::vector<double> predict_resource(const GcnModel& model, const ServiceGraph& graph,
                                            const Matrix& features) {
  if (features.rows() != graph.size() || features.cols() != model.config.input_features) {
    throw ShapeError("predict_resource: features " + features.shape_string() + " expected " +
                     std::to_string(graph.size()) + "x" +
                     std::to_string(model.config.input_features));
  }
  if (model.feature_scalers.size() != graph.size() || model.target_scalers.size() != graph.size()) {
    throw ShapeError("predict_resource: model has scalers for " +
                     std::to_string(model.feature_scalers.size()) + " nodes, graph has " +
                     std::to_string(graph.size()));
  }
  const Matrix z = gcn_forward(model, graph, gcn_detail::scale_features(model, features));
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    out[i] = std::max(0.0, model.target_scalers[i].inverse(z[i]));
  }
  return out;
}

struct GcnTrainingResult {
  GcnModel model;
  std::vector<EpochLoss> history;
};

namespace gcn_detail {

inline void scale_samples(const GcnModel& m, const std::vector<ResourceSample>& samples,
                          std::vector<Matrix>& xs, std::vector<Matrix>& ys) {
  xs.clear();
  ys.clear();
  for (const auto& s : samples) {
    Matrix y(s.targets.size(), 1);
    for (std::size_t i = 0; i < s.targets.size(); ++i) y[i] = m.target_scalers[i].transform(s.targets[i]);
    xs.push_back(scale_features(m, s.features));
    ys.push_back(std::move(y));
  }
}

}  // namespace gcn_detail

/// Adam on the all-node MSE. Features and targets are min-max scaled to
/// [0, 1] on the training split, per node or globally per config.scaling.
inline GcnTrainingResult train_gcn(const std::vector<ResourceSample>& train,
                                   const std::vector<ResourceSample>& valid,
                                   const ServiceGraph& graph, const GcnConfig& config) {
  config.validate();
  if (train.empty()) throw EmptyDatasetError("train_gcn: empty training set");
  for (const auto& s : train) {
    if (s.features.rows() != graph.size() || s.features.cols() != config.input_features ||
        s.targets.size() != graph.size()) {
      throw ShapeError("train_gcn: sample at minute " + std::to_string(s.minute) +
                       " does not match the graph and config shapes");
    }
  }
  Rng rng(config.seed);
  GcnTrainingResult result{GcnModel::initialize(config, rng), {}};
  GcnModel& model = result.model;

  const auto fit_rows = [&](std::size_t first, std::size_t last) {
    std::vector<double> feats;
    std::vector<double> targets;
    for (const auto& s : train) {
      for (std::size_t i = first; i < last; ++i) {
        const auto row = s.features.row(i);
        feats.insert(feats.end(), row.begin(), row.end());
        targets.push_back(s.targets[i]);
      }
    }
    return std::pair{MinMaxScaler::fit(feats, 0.0, 1.0), MinMaxScaler::fit(targets, 0.0, 1.0)};
  };
  if (config.scaling == GcnScaling::kGlobal) {
    const auto [f, t] = fit_rows(0, graph.size());
    model.feature_scalers.assign(graph.size(), f);
    model.target_scalers.assign(graph.size(), t);
  } else {
    for (std::size_t i = 0; i < graph.size(); ++i) {
      const auto [f, t] = fit_rows(i, i + 1);
      model.feature_scalers.push_back(f);
      model.target_scalers.push_back(t);
    }
  }

  std::vector<Matrix> xs, ys, vxs, vys;
  gcn_detail::scale_samples(model, train, xs, ys);
  if (!valid.empty()) gcn_detail::scale_samples(model, valid, vxs, vys);
  const Matrix& a_hat = graph.normalized();

  const auto params = gcn_parameter_list(model);
  std::vector<AdamState> adam;
  for (const Matrix* p : params) adam.push_back(AdamState::fresh_like(*p, {config.learning_rate}));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  GcnGradients grads;
  std::vector<Matrix> bx, by;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      bx.clear();
      by.clear();
      for (std::size_t r = start; r < end; ++r) {
        bx.push_back(xs[order[r]]);
        by.push_back(ys[order[r]]);
      }
      try {
        const double l = gcn_loss(model, a_hat, bx, by, &grads);
        if (!std::isfinite(l)) throw DivergenceError("train_gcn: non-finite loss", epoch);
        const auto gp = gcn_parameter_list(grads);
        for (std::size_t i = 0; i < params.size(); ++i) adam_update(*params[i], *gp[i], adam[i]);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("train_gcn: ") + e.what(), epoch);
      }
    }
    EpochLoss entry{epoch, gcn_loss(model, a_hat, xs, ys)};
    if (!valid.empty()) entry.valid = gcn_loss(model, a_hat, vxs, vys);
    if (!std::isfinite(entry.train) || (!valid.empty() && !std::isfinite(entry.valid))) {
      throw DivergenceError("train_gcn: non-finite loss", epoch);
    }
    result.history.push_back(entry);
  }
  return result;
}

/// Per-node MSE in vCPU^2 of predict_resource against the samples' targets.
inline std::vector<double> per_node_mse(const GcnModel& model, const ServiceGraph& graph,
                                        const std::vector<ResourceSample>& samples) {
  std::vector<double> out(graph.size(), 0.0);
  if (samples.empty()) return out;
  for (const auto& s : samples) {
    const auto p = predict_resource(model, graph, s.features);
    for (std::size_t i = 0; i < p.size(); ++i) out[i] += (p[i] - s.targets[i]) * (p[i] - s.targets[i]);
  }
  for (double& v : out) v /= static_cast<double>(samples.size());
  return out;
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace gphpa
