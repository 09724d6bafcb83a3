#include <gtest/gtest.h>

#include "convert.hpp"
#include "gphpa/model_io.hpp"

using namespace gphpa;

TEST(ModelIo, LstmRoundTripIsExact) {
  LstmConfig c;
  c.window = 5;
  c.layers = 2;
  c.hidden_units = 4;
  Rng rng(61);
  LstmModel m = LstmModel::initialize(c, rng);
  m.scaler = {0.125, 987.654321, -0.8, 0.8};
  m.head_bias[0] = 1.0 / 3.0;
  const auto text = lstm_to_json(m, "reviews").dump();
  const LstmModel back = lstm_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.config, m.config);
  ASSERT_EQ(back.layers.size(), 2u);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(back.layers[l].input_weights, m.layers[l].input_weights);
    EXPECT_EQ(back.layers[l].recurrent_weights, m.layers[l].recurrent_weights);
    EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
  }
  EXPECT_EQ(back.head_weights, m.head_weights);
  EXPECT_EQ(back.head_bias, m.head_bias);
  EXPECT_EQ(lstm_to_json(back, "reviews").dump(), text);
  const std::vector<double> w{10, 20, 30, 40, 50};
  EXPECT_EQ(lstm_forward(back, w), lstm_forward(m, w));
}

TEST(ModelIo, GcnRoundTripIsExact) {
  GcnConfig c = GcnConfig::with_layers(3, 4);
  c.scaling = GcnScaling::kGlobal;
  Rng rng(62);
  GcnModel m = GcnModel::initialize(c, rng);
  m.feature_scalers.assign(4, MinMaxScaler{0.5, 700.25, 0.0, 1.0});
  m.target_scalers.assign(4, MinMaxScaler{0.01, 3.3, 0.0, 1.0});
  const auto text = gcn_to_json(m).dump();
  const GcnModel back = gcn_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(gcn_to_json(back).dump(), text);
  EXPECT_EQ(back.config.scaling, GcnScaling::kGlobal);
  const ServiceGraph g = bookinfo_graph();
  const Matrix x = testkit::random_matrix(4, 4, rng, 0.0, 500.0);
  EXPECT_EQ(predict_resource(back, g, x), predict_resource(m, g, x));
}

TEST(ModelIo, RejectsWrongDocuments) {
  EXPECT_THROW(lstm_from_json(nlohmann::json{{"format", "gphpa-gcn/1"}}), ModelFormatError);
  EXPECT_THROW(gcn_from_json(nlohmann::json{{"format", "gphpa-gcn/1"}}), ModelFormatError);
  EXPECT_THROW(lstm_from_json(nlohmann::json::object()), ModelFormatError);
  LstmConfig c;
  c.hidden_units = 2;
  c.window = 2;
  Rng rng(1);
  auto j = lstm_to_json(LstmModel::initialize(c, rng));
  j["config"]["hidden_units"] = 3;
  EXPECT_THROW(lstm_from_json(j), ModelFormatError);
}
