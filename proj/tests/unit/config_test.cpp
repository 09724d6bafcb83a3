#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gphpa/config.hpp"

using namespace gphpa;

namespace {

nlohmann::json minimal() {
  return {{"graph", "graphs/bookinfo.json"}, {"trace", {{"file", "traces/diurnal.csv"}}}};
}

std::string config_error(const nlohmann::json& j) {
  try {
    config_from_json(j, "/base");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const auto c = config_from_json(minimal(), "/base");
  EXPECT_EQ(c.graph_path, "/base/graphs/bookinfo.json");
  EXPECT_EQ(*c.trace.file, "/base/traces/diurnal.csv");
  EXPECT_EQ(c.lstm, LstmConfig{});
  EXPECT_EQ(c.gcn.layers, 2u);
  EXPECT_EQ(c.gcn.learning_rate, 0.001);
  EXPECT_EQ(c.gcn.epochs, 100u);
  EXPECT_EQ(c.gcn.batch_size, 256u);
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.9, 0.7}));
  EXPECT_EQ(c.horizon, 800u);
  EXPECT_EQ(c.capacity, 79);
  EXPECT_EQ(c.models_path(), "/base/out/models");
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
  auto j = minimal();
  j["colour"] = 1;
  EXPECT_NE(config_error(j).find("unknown key 'colour' in config"), std::string::npos);
  j = minimal();
  j["lstm"] = {{"hidden", 3}};
  EXPECT_NE(config_error(j).find("unknown key 'hidden' in lstm"), std::string::npos);
  j = minimal();
  j["bounds"] = {{"reviews", {{"max_pod", 3}}}};
  EXPECT_NE(config_error(j).find("bounds.reviews"), std::string::npos);
  j = minimal();
  j["trace"]["synthetic"] = {{"pattern", "sine"}, {"wobble", 2}};
  EXPECT_NE(config_error(j).find("wobble"), std::string::npos);
}

TEST(Config, ValidationErrors) {
  auto j = minimal();
  j["hpa"] = {{"thresholds", {0.9, 1.2}}};
  EXPECT_NE(config_error(j).find("threshold"), std::string::npos);
  j = minimal();
  j["simulation"] = {{"horizon", 0}};
  EXPECT_NE(config_error(j).find("horizon"), std::string::npos);
  j = minimal();
  j["trace"]["synthetic"] = {{"pattern", "sine"}};
  EXPECT_NE(config_error(j).find("exactly one"), std::string::npos);
  j = minimal();
  j["lstm"] = {{"window", "ten"}};
  EXPECT_NE(config_error(j).find("wrong type"), std::string::npos);
  j = minimal();
  j.erase("graph");
  EXPECT_NE(config_error(j).find("'graph' is required"), std::string::npos);
}

TEST(Config, PerServiceBoundsInheritDefault) {
  auto j = minimal();
  j["bounds"] = {{"default", {{"max_pods", 12}}}, {"ratings", {{"pod_vcpu", 0.5}}}};
  const auto c = config_from_json(j, "/base");
  const auto b = c.bounds_for(bookinfo_graph());
  EXPECT_EQ(b[0].max_pods, 12);
  EXPECT_EQ(b[3].max_pods, 12);
  EXPECT_EQ(b[3].pod_vcpu, 0.5);
  EXPECT_EQ(b[0].pod_vcpu, 1.0);
}

TEST(Config, DerivedSeedsAreStable) {
  const auto c = config_from_json(minimal(), "/base");
  EXPECT_NE(c.lstm_for(0).seed, c.lstm_for(1).seed);
  EXPECT_EQ(c.lstm_for(2).seed, derive_seed(42, 3));
  EXPECT_EQ(c.gcn_config().input_features, c.lstm.window);
  EXPECT_EQ(c.demand_model().seed, derive_seed(42, 2000));
}

TEST(Config, LoadChecksReferencedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "gphpa_cfg";
  std::filesystem::create_directories(dir);
  const auto path = dir / "c.json";
  std::ofstream(path) << minimal().dump();
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path.string()), ConfigError);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, BundledConfigsLoad) {
  for (const char* name : {"experiment.json", "toy.json"}) {
    const auto c = load_config(std::string(GPHPA_DATA_DIR) + "/configs/" + name);
    EXPECT_TRUE(std::filesystem::exists(c.graph_path)) << name;
    const auto trace = load_experiment_trace(c);
    EXPECT_GE(trace.size(), c.horizon) << name;
  }
}
