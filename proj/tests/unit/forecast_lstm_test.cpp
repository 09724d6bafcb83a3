#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "convert.hpp"
#include "gphpa/forecast_lstm.hpp"
#include "gphpa/traces.hpp"
#include "oracles.hpp"

using namespace gphpa;

namespace {

LstmModel random_model(std::size_t layers, std::size_t hidden, std::size_t k, std::uint64_t seed) {
  LstmConfig c;
  c.window = k;
  c.layers = layers;
  c.hidden_units = hidden;
  Rng rng(seed);
  LstmModel m = LstmModel::initialize(c, rng);
  for (auto& L : m.layers)
    for (double& v : L.bias.values()) v = rng.uniform(-0.5, 0.5);
  m.head_bias[0] = rng.uniform(-0.3, 0.3);
  m.scaler = {10.0, 200.0, -0.8, 0.8};
  return m;
}

std::vector<double> sine_series(std::size_t n, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double clean = 200.0 + 100.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 60.0);
    v[t] = std::max(0.0, clean + noise * 100.0 * rng.normal());
  }
  return v;
}

}  // namespace

TEST(MakeWindows, EnumeratesPairs) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto w = make_windows(v, 2);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].window, (std::vector<double>{1, 2}));
  EXPECT_EQ(w[0].target, 3);
  EXPECT_EQ(w[1].window, (std::vector<double>{2, 3}));
  EXPECT_EQ(w[1].target, 4);
  EXPECT_EQ(w[2].window, (std::vector<double>{3, 4}));
  EXPECT_EQ(w[2].target, 5);
}

TEST(MakeWindows, TooShortIsEmptyDataset) {
  EXPECT_THROW(make_windows(std::vector<double>{1, 2, 3, 4, 5}, 5), EmptyDatasetError);
}

TEST(MakeWindows, CountForDefaultWindow) {
  WorkloadSeries s{"svc", 0, std::vector<double>(800, 1.0)};
  EXPECT_EQ(make_windows(s, 10).size(), 790u);
}

TEST(MakeWindows, RejectsNegativeOrNonFinite) {
  EXPECT_THROW(make_windows(std::vector<double>{1, -2, 3}, 1), std::invalid_argument);
  EXPECT_THROW(make_windows(std::vector<double>{1, std::nan(""), 3}, 1), std::invalid_argument);
}

TEST(MakeWindowsProperty, CountIsLengthMinusWindow) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t t = 2 + rng.below(300);
    const std::size_t k = 1 + rng.below(t - 1);
    const auto w = make_windows(std::vector<double>(t, 0.5), k);
    EXPECT_EQ(w.size(), t - k);
  }
}

TEST(Scaler, RoundTripWithinTrainingRange) {
  Rng rng(4);
  std::vector<double> xs(100);
  for (double& x : xs) x = rng.uniform(3.0, 900.0);
  const auto s = MinMaxScaler::fit(xs, -0.8, 0.8);
  for (double x : xs) {
    EXPECT_NEAR(s.inverse(s.transform(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
    EXPECT_GE(s.transform(x), -0.8 - 1e-15);
    EXPECT_LE(s.transform(x), 0.8 + 1e-15);
  }
}

TEST(Scaler, DegenerateInvertsToConstant) {
  const std::vector<double> xs(10, 42.0);
  const auto s = MinMaxScaler::fit(xs, -0.8, 0.8);
  EXPECT_TRUE(s.degenerate());
  EXPECT_EQ(s.transform(42.0), 0.0);
  EXPECT_EQ(s.inverse(0.37), 42.0);
}

TEST(LstmForward, ZeroWeightsGiveInverseOfTanhBias) {
  LstmModel m = random_model(1, 5, 4, 1);
  for (auto& L : m.layers) {
    L.input_weights.fill(0.0);
    L.recurrent_weights.fill(0.0);
    L.bias.fill(0.0);
  }
  m.head_weights.fill(0.0);
  m.head_bias[0] = 0.3;
  const std::vector<double> window{50, 60, 70, 80};
  EXPECT_DOUBLE_EQ(lstm_forward(m, window), m.scaler.inverse(std::tanh(0.3)));
}

TEST(LstmForward, PaperDefaultShape) {
  Rng rng(2);
  const LstmModel m = LstmModel::initialize(LstmConfig{}, rng);
  EXPECT_EQ(m.hidden(), 50u);
  EXPECT_EQ(m.config.window, 10u);
  EXPECT_EQ(m.layers.size(), 1u);
  EXPECT_EQ(m.layers[0].recurrent_weights.rows(), 50u);
  EXPECT_EQ(m.head_weights.rows(), 50u);
  const double y = lstm_forward(m, std::vector<double>(10, 0.5));
  EXPECT_TRUE(std::isfinite(y));
}

TEST(LstmForward, WindowLengthMismatchThrows) {
  const LstmModel m = random_model(1, 3, 4, 1);
  EXPECT_THROW(lstm_forward(m, std::vector<double>(3, 1.0)), ShapeError);
}

TEST(LstmForward, MatchesReferenceRecurrence) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t layers = 1 + trial % 2;
    const std::size_t hidden = 1 + rng.below(6);
    const std::size_t k = 1 + rng.below(8);
    const LstmModel m = random_model(layers, hidden, k, 100 + trial);
    std::vector<double> window(k);
    for (double& v : window) v = rng.uniform(10.0, 200.0);

    std::vector<double> scaled;
    for (double v : window) scaled.push_back(m.scaler.transform(v));
    const auto h = oracle::lstm_last_hidden(testkit::to_oracle(m), scaled);
    double pre = m.head_bias[0];
    for (std::size_t j = 0; j < hidden; ++j) pre += h[j] * m.head_weights[j];
    const double expect = m.scaler.inverse(std::tanh(pre));
    EXPECT_NEAR(lstm_forward(m, window), expect, 1e-9 * std::max(1.0, std::abs(expect)));
  }
}

TEST(LstmPredict, AgreesWithSingleForward) {
  const LstmModel m = random_model(2, 4, 5, 9);
  const auto w = make_windows(sine_series(40, 0.05, 1), 5);
  const auto batch = lstm_predict(m, w);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(batch[i], lstm_forward(m, w[i].window), 1e-12);
}

TEST(LstmGradient, MatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    LstmModel m = random_model(1, 3, 4, 500 + trial);
    const Matrix x = testkit::random_matrix(5, 4, rng, -0.8, 0.8);
    const Matrix y = testkit::random_matrix(5, 1, rng, -0.8, 0.8);
    EXPECT_LT(testkit::lstm_gradient_error(m, x, y), 1e-4);
  }
}

TEST(LstmGradient, StackedLayersMatchFiniteDifferences) {
  Rng rng(13);
  LstmModel m = random_model(2, 3, 4, 77);
  const Matrix x = testkit::random_matrix(3, 4, rng, -0.8, 0.8);
  const Matrix y = testkit::random_matrix(3, 1, rng, -0.8, 0.8);
  EXPECT_LT(testkit::lstm_gradient_error(m, x, y), 1e-4);
}

TEST(Evaluate, Examples) {
  const auto same = evaluate(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
  EXPECT_EQ(same.mse, 0.0);
  EXPECT_EQ(same.mae, 0.0);
  const auto e = evaluate(std::vector<double>{1, 2}, std::vector<double>{2, 4});
  EXPECT_DOUBLE_EQ(e.mse, 2.5);
  EXPECT_DOUBLE_EQ(e.mae, 1.5);
  const auto one = evaluate(std::vector<double>{0}, std::vector<double>{3});
  EXPECT_EQ(one.mse, 9.0);
  EXPECT_EQ(one.mae, 3.0);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(evaluate(std::vector<double>{}, std::vector<double>{}), EmptyDatasetError);
}

TEST(TrainLstm, EmptyTrainingSetThrows) {
  EXPECT_THROW(train_lstm({}, {}, LstmConfig{}), EmptyDatasetError);
}

TEST(TrainLstm, ConstantSeriesConverges) {
  const auto w = make_windows(std::vector<double>(200, 37.0), 10);
  const auto sp = split_dataset(w);
  LstmConfig c;
  c.hidden_units = 8;
  const auto r = train_lstm(sp.train, sp.valid, c);
  ASSERT_EQ(r.history.size(), c.epochs);
  EXPECT_LT(r.history.back().train, 1e-6);
  for (double p : lstm_predict(r.model, sp.test)) EXPECT_DOUBLE_EQ(p, 37.0);
  for (std::size_t e = 1; e < r.history.size(); ++e) {
    EXPECT_LE(r.history[e].train, r.history[e - 1].train) << "epoch " << e + 1;
  }
}

TEST(TrainLstm, HistoryHasTrainAndValidPerEpoch) {
  const auto sp = split_dataset(make_windows(sine_series(120, 0.05, 3), 5));
  LstmConfig c;
  c.window = 5;
  c.hidden_units = 4;
  c.epochs = 3;
  const auto r = train_lstm(sp.train, sp.valid, c);
  ASSERT_EQ(r.history.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(r.history[e].epoch, e + 1);
    EXPECT_TRUE(std::isfinite(r.history[e].train));
    EXPECT_TRUE(std::isfinite(r.history[e].valid));
  }
  const auto no_valid = train_lstm(sp.train, {}, c);
  EXPECT_TRUE(std::isnan(no_valid.history.back().valid));
}

TEST(TrainLstm, SameSeedSameHistory) {
  const auto sp = split_dataset(make_windows(sine_series(300, 0.05, 4), 6));
  LstmConfig c;
  c.window = 6;
  c.hidden_units = 6;
  c.epochs = 4;
  c.batch_size = 16;
  const auto a = train_lstm(sp.train, sp.valid, c);
  const auto b = train_lstm(sp.train, sp.valid, c);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model.layers[0].input_weights, b.model.layers[0].input_weights);
  c.seed += 1;
  const auto d = train_lstm(sp.train, sp.valid, c);
  EXPECT_NE(a.history.back().train, d.history.back().train);
}

TEST(TrainLstm, NoisySineBeatsPersistence) {
  const auto sp = split_dataset(make_windows(sine_series(1500, 0.05, 5), 10));
  const auto r = train_lstm(sp.train, sp.valid, LstmConfig{});
  const auto truth = targets_of(sp.test);
  const auto model = evaluate(lstm_predict(r.model, sp.test), truth);
  const auto naive = evaluate(persistence_forecast(sp.test), truth);
  EXPECT_LT(model.mse, naive.mse);
}

TEST(TrainLstm, DivergenceReportsEpoch) {
  const auto sp = split_dataset(make_windows(sine_series(200, 0.05, 6), 5));
  LstmConfig c;
  c.window = 5;
  c.hidden_units = 4;
  c.learning_rate = 1e308;
  c.epochs = 5;
  try {
    train_lstm(sp.train, sp.valid, c);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), 5u);
  }
}
