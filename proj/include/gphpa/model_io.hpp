#pragma once

// JSON persistence for trained models. Matrices are stored as
// {"rows": r, "cols": c, "values": [row-major...]}; doubles round-trip
// exactly through nlohmann::json's shortest representation.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gphpa/forecast_lstm.hpp"
#include "gphpa/predict_gcn.hpp"

namespace gphpa {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.storage()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

inline nlohmann::json scaler_to_json(const MinMaxScaler& s) {
  return {{"min", s.min}, {"max", s.max}, {"lo", s.lo}, {"hi", s.hi}};
}

inline MinMaxScaler scaler_from_json(const nlohmann::json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>(), j.at("lo").get<double>(),
          j.at("hi").get<double>()};
}

inline nlohmann::json scalers_to_json(const std::vector<MinMaxScaler>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : v) out.push_back(scaler_to_json(s));
  return out;
}

inline std::vector<MinMaxScaler> scalers_from_json(const nlohmann::json& j) {
  std::vector<MinMaxScaler> out;
  for (const auto& s : j) out.push_back(scaler_from_json(s));
  return out;
}

inline nlohmann::json lstm_config_to_json(const LstmConfig& c) {
  return {{"window", c.window},         {"layers", c.layers},
          {"hidden_units", c.hidden_units}, {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},         {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

inline LstmConfig lstm_config_from_json(const nlohmann::json& j) {
  LstmConfig c;
  c.window = j.at("window").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

inline nlohmann::json gcn_config_to_json(const GcnConfig& c) {
  return {{"layers", c.layers},
          {"input_features", c.input_features},
          {"hidden_widths", c.hidden_widths},
          {"output_features", c.output_features},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"scaling", to_string(c.scaling)}};
}

inline GcnConfig gcn_config_from_json(const nlohmann::json& j) {
  GcnConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.input_features = j.at("input_features").get<std::size_t>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.output_features = j.at("output_features").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.scaling = gcn_scaling_from_string(j.at("scaling").get<std::string>());
  c.validate();
  return c;
}

inline nlohmann::json lstm_to_json(const LstmModel& m, const std::string& service = "") {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : m.layers) {
    layers.push_back({{"input_weights", matrix_to_json(L.input_weights)},
                      {"recurrent_weights", matrix_to_json(L.recurrent_weights)},
                      {"bias", matrix_to_json(L.bias)}});
  }
  return {{"format", "gphpa-lstm/1"},
          {"service", service},
          {"config", lstm_config_to_json(m.config)},
          {"gate_order", {"input", "forget", "candidate", "output"}},
          {"scaler", scaler_to_json(m.scaler)},
          {"layers", layers},
          {"head", {{"weights", matrix_to_json(m.head_weights)}, {"bias", matrix_to_json(m.head_bias)}, {"activation", "tanh"}}}};
}

inline LstmModel lstm_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "gphpa-lstm/1") {
      throw ModelFormatError("not an LSTM model document");
    }
    LstmModel m;
    m.config = lstm_config_from_json(j.at("config"));
    m.scaler = scaler_from_json(j.at("scaler"));
    for (const auto& L : j.at("layers")) {
      m.layers.push_back({matrix_from_json(L.at("input_weights")),
                          matrix_from_json(L.at("recurrent_weights")), matrix_from_json(L.at("bias"))});
    }
    m.head_weights = matrix_from_json(j.at("head").at("weights"));
    m.head_bias = matrix_from_json(j.at("head").at("bias"));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("LSTM model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("LSTM model: ") + e.what());
  }
}

inline nlohmann::json gcn_to_json(const GcnModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : m.layers) {
    layers.push_back({{"weights", matrix_to_json(L.weights)},
                      {"bias", matrix_to_json(L.bias)},
                      {"activation", to_string(L.activation)}});
  }
  return {{"format", "gphpa-gcn/1"},
          {"config", gcn_config_to_json(m.config)},
          {"feature_scalers", scalers_to_json(m.feature_scalers)},
          {"target_scalers", scalers_to_json(m.target_scalers)},
          {"layers", layers}};
}

inline GcnModel gcn_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "gphpa-gcn/1") {
      throw ModelFormatError("not a GCN model document");
    }
    GcnModel m;
    m.config = gcn_config_from_json(j.at("config"));
    m.feature_scalers = scalers_from_json(j.at("feature_scalers"));
    m.target_scalers = scalers_from_json(j.at("target_scalers"));
    if (m.feature_scalers.size() != m.target_scalers.size()) {
      throw ModelFormatError("GCN model: feature and target scaler counts differ");
    }
    for (const auto& L : j.at("layers")) {
      m.layers.push_back({matrix_from_json(L.at("weights")), matrix_from_json(L.at("bias")),
                          activation_from_string(L.at("activation").get<std::string>())});
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("GCN model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("GCN model: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
}

/// Pretty-printed with a trailing newline.
inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace gphpa
