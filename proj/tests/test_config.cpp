#include <gtest/gtest.h>

#include <cmath>

#include "ivpotts/config.hpp"

using namespace ivp;

namespace {
std::string error_path(const std::string& text) {
  try {
    config_from_json(Json::parse(text));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}
}  // namespace

TEST(Config, MinimalVerifyUsesDefaults) {
  const RunConfig c = config_from_json(Json::parse(R"({"command":"verify"})"));
  EXPECT_EQ(c.command, Command::verify);
  EXPECT_EQ(c.params.q, 2.0);
  EXPECT_EQ(c.params.r, 1.0);
  EXPECT_NEAR(c.params.beta, std::log(2.0), 1e-15);
  EXPECT_EQ(c.caps.max_contour_bonds, EnumerationCaps{}.max_contour_bonds);
  EXPECT_EQ(c.caps.flat_cap, EnumerationCaps{}.flat_cap);
  ASSERT_EQ(c.betas.size(), 1u);
  EXPECT_EQ(c.betas[0], c.params.beta);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(error_path(R"({"params":{"q":0}})"), "params.q");
  EXPECT_EQ(error_path(R"({"colour_count":3})"), "config.colour_count");
  EXPECT_EQ(error_path(R"({"command":"plot"})"), "config.command");
  EXPECT_EQ(error_path(R"({"beta":{"from":1,"to":2}})"), "config.beta.steps");
  EXPECT_EQ(error_path(R"({"torus":[16,2]})"), "config.torus[1]");
  EXPECT_EQ(error_path(R"({"sampler":"wolff"})"), "config.sampler");
  EXPECT_EQ(error_path(R"({"caps":{"max_diameter":-2}})"), "caps.max_diameter");
}

TEST(Config, BetaGridExpands) {
  const RunConfig c = config_from_json(Json::parse(R"({"command":"sweep","beta":{"from":1.5,"to":2.0,"steps":6}})"));
  ASSERT_EQ(c.betas.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(c.betas[i], 1.5 + 0.1 * i, 1e-15);
  EXPECT_TRUE(config_from_json(Json::parse(R"({"beta":{"from":1,"to":2,"steps":0}})")).betas.empty());
  EXPECT_EQ(config_from_json(Json::parse(R"({"beta":[0.5,0.7]})")).betas, (std::vector<double>{0.5, 0.7}));
  const RunConfig single = config_from_json(Json::parse(R"({"beta":1.25})"));
  EXPECT_EQ(single.params.beta, 1.25);
}

TEST(Config, RoundTripThroughJson) {
  const RunConfig c = config_from_json(Json::parse(
      R"({"command":"sample","params":{"q":2,"r":30,"beta":1.9},"torus":[16,16],"sweeps":50,"kind":"order",
          "scope":"ordered_class","volume":{"type":"rect","w":3,"h":2},"seed":9})"));
  const Json j = config_to_json(c);
  const RunConfig back = config_from_json(j);
  EXPECT_EQ(config_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.volume, make_rect(3, 2));
  EXPECT_EQ(back.seed, 9u);
  const ChainConfig chain = chain_config(back, 1.7);
  EXPECT_EQ(chain.params.beta, 1.7);
  EXPECT_EQ(chain.params.r, 30.0);
  EXPECT_TRUE(chain.torus.has_value());
}
