#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivpotts/io.hpp"
#include "ivpotts/verify.hpp"

namespace ivp {

enum class Command { verify, exact, contours, sample, sweep, report };

std::string to_string(Command c);
Command parse_command(const std::string& s);

struct RunConfig {
  Command command = Command::verify;
  ModelParams params;
  // Inverse temperatures to visit; a single value mirrors params.beta.
  std::vector<double> betas{params.beta};
  Volume volume = make_window(1);
  EnumerationCaps caps;
  double tau = 4.0;
  std::uint64_t seed = 1;
  std::string out;
  int threads = 1;

  // verify
  Scale scale = Scale::desk;
  Fault fault = Fault::none;

  // contours
  ContourScope scope = ContourScope::geometric;
  std::optional<ContourKind> kind;

  // sample, sweep
  std::optional<std::array<int, 2>> torus;
  Sampler sampler = Sampler::cluster;
  ChainBoundary boundary = ChainBoundary::free;
  int colour = 1;
  int sweeps = 1000;
  int burn_in = 100;
  int thin = 1;
  int chains = 1;
  int start_colour = 0;

  // exact, sweep: window index of the enumerated pressure; 0 skips it.
  int pressure_n = 0;
};

// {"from", "to", "steps"} expands to `steps` evenly spaced values, both ends
// included; a number or an array is taken as given.
std::vector<double> beta_grid_from_json(const Json& j, const std::string& path = "config.beta");

// Unknown keys are rejected; every error names the offending field.
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& c);

ContourScope parse_scope(const std::string& s);
std::string to_string(ContourScope s);

// The chain a sample or sweep runs at inverse temperature beta.
ChainConfig chain_config(const RunConfig& c, double beta);

}  // namespace ivp
