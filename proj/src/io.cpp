#include "ivpotts/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ivp {

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return x;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kind_name(ContourKind k) { return k == ContourKind::order ? "order" : "disorder"; }

}  // namespace

const Json& json_field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing");
  return *it;
}

int json_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

double json_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(path + "." + it.key(), "unknown key");
  }
}

Json site_to_json(Site s) { return Json::array({s.x, s.y}); }

Site site_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected [x, y]");
  return {json_int(j[0], path + "[0]"), json_int(j[1], path + "[1]")};
}

Json bond_to_json(const Bond& b) { return Json::array({b.lo.x, b.lo.y, b.axis == Axis::X ? "x" : "y"}); }

Bond bond_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3 || !j[2].is_string()) throw ConfigError(path, "expected [x, y, \"x\"|\"y\"]");
  const std::string axis = j[2].get<std::string>();
  if (axis != "x" && axis != "y") throw ConfigError(path + "[2]", "axis must be \"x\" or \"y\"");
  Bond b;
  b.lo = {json_int(j[0], path + "[0]"), json_int(j[1], path + "[1]")};
  b.axis = axis == "x" ? Axis::X : Axis::Y;
  return b;
}

Json volume_to_json(const Volume& v) {
  Json sites = Json::array();
  for (Site s : v.sites()) sites.push_back(site_to_json(s));
  Json bonds = Json::array();
  for (const Bond& b : v.bonds()) bonds.push_back(bond_to_json(b));
  return Json{{"type", "explicit"}, {"sites", sites}, {"bonds", bonds}};
}

Volume volume_from_json(const Json& j, const std::string& path) {
  const Json& type = json_field(j, "type", path);
  if (!type.is_string()) throw ConfigError(path + ".type", "expected a string");
  const std::string t = type.get<std::string>();
  if (t == "window") {
    reject_unknown_keys(j, {"type", "n"}, path);
    const int n = json_int(json_field(j, "n", path), path + ".n");
    if (n < 0) throw ConfigError(path + ".n", "must be nonnegative");
    return make_window(n);
  }
  if (t == "rect") {
    reject_unknown_keys(j, {"type", "w", "h", "x0", "y0"}, path);
    const int w = json_int(json_field(j, "w", path), path + ".w");
    const int h = json_int(json_field(j, "h", path), path + ".h");
    if (w < 1 || h < 1) throw ConfigError(path, "sides must be positive");
    const int x0 = j.contains("x0") ? json_int(j["x0"], path + ".x0") : 0;
    const int y0 = j.contains("y0") ? json_int(j["y0"], path + ".y0") : 0;
    return make_rect(w, h).translated(x0, y0);
  }
  if (t == "explicit") {
    reject_unknown_keys(j, {"type", "sites", "bonds"}, path);
    std::vector<Bond> bonds;
    const Json& jb = json_field(j, "bonds", path);
    if (!jb.is_array()) throw ConfigError(path + ".bonds", "expected an array");
    for (std::size_t i = 0; i < jb.size(); ++i)
      bonds.push_back(bond_from_json(jb[i], path + ".bonds[" + std::to_string(i) + "]"));
    if (!j.contains("sites")) return Volume::from_bonds(bonds);
    std::vector<Site> sites;
    const Json& js = j["sites"];
    if (!js.is_array()) throw ConfigError(path + ".sites", "expected an array");
    for (std::size_t i = 0; i < js.size(); ++i)
      sites.push_back(site_from_json(js[i], path + ".sites[" + std::to_string(i) + "]"));
    try {
      return Volume(sites, bonds);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  }
  throw ConfigError(path + ".type", "unknown volume type '" + t + "'");
}

Json contour_to_json(const Contour& c) {
  Json pairs = Json::array();
  for (const Pair& p : c.pairs) pairs.push_back(Json::array({site_to_json(p.site), bond_to_json(p.bond)}));
  return Json{{"kind", kind_name(c.kind)}, {"pairs", pairs}};
}

Contour contour_from_json(const Json& j, const std::string& path) {
  reject_unknown_keys(j, {"kind", "pairs"}, path);
  const Json& kind = json_field(j, "kind", path);
  Contour c;
  if (kind == "order") {
    c.kind = ContourKind::order;
  } else if (kind == "disorder") {
    c.kind = ContourKind::disorder;
  } else {
    throw ConfigError(path + ".kind", "expected \"order\" or \"disorder\"");
  }
  const Json& pairs = json_field(j, "pairs", path);
  if (!pairs.is_array()) throw ConfigError(path + ".pairs", "expected an array");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string p = path + ".pairs[" + std::to_string(i) + "]";
    if (!pairs[i].is_array() || pairs[i].size() != 2) throw ConfigError(p, "expected [site, bond]");
    Pair pair{site_from_json(pairs[i][0], p + "[0]"), bond_from_json(pairs[i][1], p + "[1]")};
    if (!pair.bond.incident(pair.site)) throw ConfigError(p, "site is not an endpoint of the bond");
    c.pairs.push_back(pair);
  }
  std::sort(c.pairs.begin(), c.pairs.end());
  c.pairs.erase(std::unique(c.pairs.begin(), c.pairs.end()), c.pairs.end());
  return c;
}

Json params_to_json(const ModelParams& p) { return Json{{"q", p.q}, {"r", p.r}, {"beta", p.beta}}; }

ModelParams params_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown_keys(j, {"q", "r", "beta"}, path);
  ModelParams p;
  if (j.contains("q")) p.q = json_number(j["q"], path + ".q");
  if (j.contains("r")) p.r = json_number(j["r"], path + ".r");
  if (j.contains("beta")) p.beta = json_number(j["beta"], path + ".beta");
  if (!(p.q > 0.0)) throw ConfigError(path + ".q", "must be positive");
  if (!(p.r >= 0.0)) throw ConfigError(path + ".r", "must be nonnegative");
  if (!(p.beta >= 0.0)) throw ConfigError(path + ".beta", "must be nonnegative");
  return p;
}

Json caps_to_json(const EnumerationCaps& c) {
  return Json{{"max_contour_bonds", c.max_contour_bonds}, {"max_diameter", c.max_diameter},
              {"volume_cap", c.volume_cap},               {"max_visits", c.max_visits},
              {"max_states", c.max_states},               {"flat_cap", c.flat_cap}};
}

EnumerationCaps caps_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown_keys(j, {"max_contour_bonds", "max_diameter", "volume_cap", "max_visits", "max_states", "flat_cap"},
                 path);
  EnumerationCaps c;
  const auto nonneg = [&](const char* key) -> long long {
    const Json& v = j[key];
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(path + "." + key, "expected a nonnegative integer");
    return v.get<long long>();
  };
  if (j.contains("max_contour_bonds")) c.max_contour_bonds = static_cast<int>(nonneg("max_contour_bonds"));
  if (j.contains("max_diameter")) c.max_diameter = static_cast<int>(nonneg("max_diameter"));
  if (j.contains("volume_cap")) c.volume_cap = static_cast<int>(nonneg("volume_cap"));
  if (j.contains("max_visits")) c.max_visits = static_cast<std::uint64_t>(nonneg("max_visits"));
  if (j.contains("max_states")) c.max_states = static_cast<std::uint64_t>(nonneg("max_states"));
  if (j.contains("flat_cap")) c.flat_cap = static_cast<std::size_t>(nonneg("flat_cap"));
  return c;
}

Json golden_to_json(const GoldenValue& g) {
  return Json{{"quantity", g.quantity},
              {"params", params_to_json(g.params)},
              {"caps", caps_to_json(g.caps)},
              {"value", g.value},
              {"completeness", g.complete}};
}

GoldenValue golden_from_json(const Json& j, const std::string& path) {
  reject_unknown_keys(j, {"quantity", "params", "caps", "value", "completeness"}, path);
  GoldenValue g;
  if (j.contains("quantity")) g.quantity = j["quantity"].get<std::string>();
  g.params = params_from_json(json_field(j, "params", path), path + ".params");
  if (j.contains("caps")) g.caps = caps_from_json(j["caps"], path + ".caps");
  g.value = json_number(json_field(j, "value", path), path + ".value");
  const Json& c = json_field(j, "completeness", path);
  if (!c.is_boolean()) throw ConfigError(path + ".completeness", "expected a boolean");
  g.complete = c.get<bool>();
  return g;
}

Json manifest_to_json(const RunManifest& m) {
  return Json{{"seed", m.seed},
              {"stream", m.stream},
              {"params", params_to_json(m.params)},
              {"boundary", m.boundary},
              {"colour", m.colour},
              {"sampler", m.sampler},
              {"geometry", m.geometry},
              {"num_sites", m.num_sites},
              {"sweeps", m.sweeps},
              {"burn_in", m.burn_in},
              {"thin", m.thin},
              {"code_version", m.code_version},
              {"wall_seconds", m.wall_seconds}};
}

Json bimodality_to_json(const BimodalityReport& b) {
  return Json{{"mode_locations", Json::array({b.mode_low, b.mode_high})},
              {"dip_ratio", b.dip_ratio},
              {"verdict", b.bimodal ? "bimodal" : "unimodal"}};
}

void write_series_csv(std::ostream& os, const ObservableSeries& s) {
  const std::size_t colours = s.colour_fractions.size();
  os << "sweep,energy_per_site";
  for (std::size_t c = 1; c <= colours; ++c) os << ",frac_colour_" << c;
  os << ",largest_component_fraction,isolated_fraction\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << s.sweep[i] << ',' << fmt(s.energy_per_site[i]);
    for (std::size_t c = 0; c < colours; ++c) os << ',' << fmt(s.colour_fractions[c][i]);
    os << ',' << fmt(s.largest_component_fraction[i]) << ',' << fmt(s.isolated_fraction[i]) << '\n';
  }
}

ObservableSeries read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("series CSV: missing header");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "sweep" || header[1] != "energy_per_site" ||
      header[header.size() - 2] != "largest_component_fraction" || header.back() != "isolated_fraction")
    throw std::invalid_argument("series CSV: unexpected header");
  const std::size_t colours = header.size() - 4;
  for (std::size_t c = 0; c < colours; ++c)
    if (header[2 + c] != "frac_colour_" + std::to_string(c + 1))
      throw std::invalid_argument("series CSV: unexpected column " + header[2 + c]);
  ObservableSeries s;
  s.colour_fractions.assign(colours, {});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::invalid_argument("series CSV: ragged row");
    s.sweep.push_back(std::stoi(cells[0]));
    s.energy_per_site.push_back(parse_double(cells[1]));
    for (std::size_t c = 0; c < colours; ++c) s.colour_fractions[c].push_back(parse_double(cells[2 + c]));
    s.largest_component_fraction.push_back(parse_double(cells[2 + colours]));
    s.isolated_fraction.push_back(parse_double(cells[3 + colours]));
  }
  return s;
}

void write_pressure_csv(std::ostream& os, const PressureTable& t) {
  os << "beta,e_order,e_disorder,F,f_o,f_d,f_rc,margin_flag\n";
  for (const PressureRow& r : t.rows)
    os << fmt(r.beta) << ',' << fmt(r.e_order) << ',' << fmt(r.e_disorder) << ',' << fmt(r.F) << ','
       << fmt(r.f_o) << ',' << fmt(r.f_d) << ',' << fmt(r.f_rc) << ',' << (r.margin_flag ? 1 : 0) << '\n';
}

PressureTable read_pressure_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "beta,e_order,e_disorder,F,f_o,f_d,f_rc,margin_flag")
    throw std::invalid_argument("pressure CSV: unexpected header");
  PressureTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 8) throw std::invalid_argument("pressure CSV: ragged row");
    PressureRow r;
    r.beta = parse_double(c[0]);
    r.e_order = parse_double(c[1]);
    r.e_disorder = parse_double(c[2]);
    r.F = parse_double(c[3]);
    r.f_o = parse_double(c[4]);
    r.f_d = parse_double(c[5]);
    r.f_rc = parse_double(c[6]);
    if (c[7] != "0" && c[7] != "1") throw std::invalid_argument("pressure CSV: margin_flag must be 0 or 1");
    r.margin_flag = c[7] == "1";
    t.rows.push_back(r);
  }
  return t;
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    os << fmt(h.edges[i]) << ',' << fmt(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ivp
