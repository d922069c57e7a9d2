#include "ivpotts/config.hpp"

#include <cmath>
#include <stdexcept>

namespace ivp {

namespace {

const Command kCommands[] = {Command::verify, Command::exact, Command::contours,
                             Command::sample, Command::sweep, Command::report};

std::string json_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

int positive_int(const Json& j, const std::string& path, int min) {
  const int v = json_int(j, path);
  if (v < min) throw ConfigError(path, "must be at least " + std::to_string(min));
  return v;
}

// Converts enum parse failures into schema errors at `path`.
template <class F>
auto parse_at(const std::string& path, const Json& j, F&& parse) {
  const std::string s = json_string(j, path);
  try {
    return parse(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::verify: return "verify";
    case Command::exact: return "exact";
    case Command::contours: return "contours";
    case Command::sample: return "sample";
    case Command::sweep: return "sweep";
    case Command::report: return "report";
  }
  return "verify";
}

Command parse_command(const std::string& s) {
  for (Command c : kCommands)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown command: " + s);
}

ContourScope parse_scope(const std::string& s) {
  if (s == "geometric") return ContourScope::geometric;
  if (s == "disordered_class") return ContourScope::disordered_class;
  if (s == "ordered_class") return ContourScope::ordered_class;
  throw std::invalid_argument("unknown scope: " + s);
}

std::string to_string(ContourScope s) {
  switch (s) {
    case ContourScope::geometric: return "geometric";
    case ContourScope::disordered_class: return "disordered_class";
    case ContourScope::ordered_class: return "ordered_class";
  }
  return "geometric";
}

std::vector<double> beta_grid_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return {json_number(j, path)};
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_number(j[i], path + "[" + std::to_string(i) + "]"));
  } else if (j.is_object()) {
    reject_unknown_keys(j, {"from", "to", "steps"}, path);
    const double from = json_number(json_field(j, "from", path), path + ".from");
    const double to = json_number(json_field(j, "to", path), path + ".to");
    const int steps = positive_int(json_field(j, "steps", path), path + ".steps", 0);
    for (int i = 0; i < steps; ++i) out.push_back(steps == 1 ? from : from + (to - from) * i / (steps - 1));
  } else {
    throw ConfigError(path, "expected a number, an array or {from, to, steps}");
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] >= 0.0)) throw ConfigError(path, "inverse temperatures must be nonnegative");
  return out;
}

RunConfig config_from_json(const Json& j) {
  const std::string root = "config";
  if (!j.is_object()) throw ConfigError(root, "expected an object");
  reject_unknown_keys(j,
                      {"command", "params", "beta", "volume", "caps", "tau", "seed", "out", "threads", "scale",
                       "fault", "scope", "kind", "torus", "sampler", "boundary", "colour", "sweeps", "burn_in",
                       "thin", "chains", "start_colour", "pressure_n"},
                      root);
  RunConfig c;
  const auto at = [&](const char* key) { return root + "." + key; };
  if (j.contains("command")) c.command = parse_at(at("command"), j["command"], parse_command);
  if (j.contains("params")) c.params = params_from_json(j["params"], "params");
  c.betas = {c.params.beta};
  if (j.contains("beta")) {
    c.betas = beta_grid_from_json(j["beta"], at("beta"));
    if (j["beta"].is_number()) c.params.beta = c.betas[0];
  }
  if (j.contains("volume")) c.volume = volume_from_json(j["volume"], "volume");
  if (j.contains("caps")) c.caps = caps_from_json(j["caps"], "caps");
  if (j.contains("tau")) {
    c.tau = json_number(j["tau"], at("tau"));
    if (!(c.tau > 0.0)) throw ConfigError(at("tau"), "must be positive");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError(at("seed"), "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) c.out = json_string(j["out"], at("out"));
  if (j.contains("threads")) c.threads = positive_int(j["threads"], at("threads"), 1);
  if (j.contains("scale")) c.scale = parse_at(at("scale"), j["scale"], parse_scale);
  if (j.contains("fault")) c.fault = parse_at(at("fault"), j["fault"], parse_fault);
  if (j.contains("scope")) c.scope = parse_at(at("scope"), j["scope"], parse_scope);
  if (j.contains("kind")) {
    const std::string k = json_string(j["kind"], at("kind"));
    if (k == "order") c.kind = ContourKind::order;
    else if (k == "disorder") c.kind = ContourKind::disorder;
    else if (k != "any") throw ConfigError(at("kind"), "expected order, disorder or any");
  }
  if (j.contains("torus")) {
    const Json& t = j["torus"];
    if (!t.is_array() || t.size() != 2) throw ConfigError(at("torus"), "expected [width, height]");
    c.torus = std::array<int, 2>{positive_int(t[0], at("torus") + "[0]", 3), positive_int(t[1], at("torus") + "[1]", 3)};
  }
  if (j.contains("sampler")) c.sampler = parse_at(at("sampler"), j["sampler"], parse_sampler);
  if (j.contains("boundary")) c.boundary = parse_at(at("boundary"), j["boundary"], parse_boundary);
  if (j.contains("colour")) c.colour = positive_int(j["colour"], at("colour"), 1);
  if (j.contains("sweeps")) c.sweeps = positive_int(j["sweeps"], at("sweeps"), 0);
  if (j.contains("burn_in")) c.burn_in = positive_int(j["burn_in"], at("burn_in"), 0);
  if (j.contains("thin")) c.thin = positive_int(j["thin"], at("thin"), 1);
  if (j.contains("chains")) c.chains = positive_int(j["chains"], at("chains"), 1);
  if (j.contains("start_colour")) c.start_colour = positive_int(j["start_colour"], at("start_colour"), 0);
  if (j.contains("pressure_n")) c.pressure_n = positive_int(j["pressure_n"], at("pressure_n"), 0);
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j{{"command", to_string(c.command)},
         {"params", params_to_json(c.params)},
         {"beta", c.betas},
         {"volume", volume_to_json(c.volume)},
         {"caps", caps_to_json(c.caps)},
         {"tau", c.tau},
         {"seed", c.seed},
         {"out", c.out},
         {"threads", c.threads},
         {"scale", c.scale == Scale::full ? "full" : "desk"},
         {"fault", c.fault == Fault::rc_weight ? "rc_weight" : "none"},
         {"scope", to_string(c.scope)},
         {"kind", !c.kind ? "any" : *c.kind == ContourKind::order ? "order" : "disorder"}};
  if (c.torus) j["torus"] = *c.torus;
  j["sampler"] = to_string(c.sampler);
  j["boundary"] = to_string(c.boundary);
  j["colour"] = c.colour;
  j["sweeps"] = c.sweeps;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["chains"] = c.chains;
  j["start_colour"] = c.start_colour;
  j["pressure_n"] = c.pressure_n;
  return j;
}

ChainConfig chain_config(const RunConfig& c, double beta) {
  ChainConfig cfg;
  cfg.volume = c.volume;
  cfg.torus = c.torus;
  cfg.params = c.params;
  cfg.params.beta = beta;
  cfg.boundary = c.boundary;
  cfg.colour = c.colour;
  cfg.sampler = c.sampler;
  cfg.sweeps = c.sweeps;
  cfg.burn_in = c.burn_in;
  cfg.thin = c.thin;
  cfg.seed = c.seed;
  cfg.start_colour = c.start_colour;
  return cfg;
}

}  // namespace ivp
