#include <string>

#include <gtest/gtest.h>

#include "wiplab/config.hpp"

using namespace wiplab;

namespace {

std::string message_of(const ExperimentConfig& c, bool rate = false) {
  try {
    c.validate(rate);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  c.model = {{"kind", "ar"}, {"alpha", 0.5}, {"x0", 0.0}};
  c.beta = 0.7;
  c.N_list = {512, 1024};
  c.k_list = {4, 5};
  c.seed = 123456789012345ull;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_FALSE(config_to_json(c).contains("threads"));
  ExperimentConfig d;
  d.model = c.model;
  EXPECT_EQ(config_from_json(config_to_json(d)), d);
  EXPECT_FALSE(config_from_json(config_to_json(d)).beta.has_value());
}

TEST(Config, DefaultsAreValid) {
  ExperimentConfig c;
  c.model = {{"kind", "ar"}, {"alpha", 0.5}, {"x0", 0.0}};
  EXPECT_EQ(message_of(c, true), "");
  EXPECT_DOUBLE_EQ(c.beta_or_default(), 0.75);
}

TEST(Config, ValidationNamesEveryField) {
  ExperimentConfig c;
  c.epsilon = 1.5;
  c.reps = 1;
  const auto msg = message_of(c);
  EXPECT_NE(msg.find("config.model:"), std::string::npos);
  EXPECT_NE(msg.find("config.epsilon:"), std::string::npos);
  EXPECT_NE(msg.find("config.reps:"), std::string::npos);
  EXPECT_EQ(msg.find("config.k0"), std::string::npos);
}

TEST(Config, RateExperimentsNeedBetaAboveHalf) {
  ExperimentConfig c;
  c.model = {{"kind", "ar"}, {"alpha", 0.5}, {"x0", 0.0}};
  c.beta = 0.4;
  EXPECT_EQ(message_of(c, false), "");
  EXPECT_NE(message_of(c, true).find("config.beta:"), std::string::npos);
  c.beta = 0.97;
  EXPECT_NE(message_of(c).find("epsilon + beta"), std::string::npos);
}

TEST(Config, UnknownAndMistypedFields) {
  try {
    config_from_json(json{{"alpah", 0.5}, {"reps", "many"}});
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("config.alpah: unknown field"), std::string::npos);
    EXPECT_NE(msg.find("config.reps:"), std::string::npos);
  }
  EXPECT_THROW(config_from_json(json::array()), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ModelFromInlineJson) {
  ExperimentConfig c;
  c.model = {{"kind", "finite"}, {"P", {{0.75, 0.25}, {0.25, 0.75}}}, {"f", {-0.5, 0.5}}, {"x0", 0}};
  const auto m = c.load();
  EXPECT_EQ(model_kind(m), "finite");
  c.model = nullptr;
  c.model_file = "/nonexistent/model.json";
  EXPECT_THROW(c.load(), PreconditionError);
}
