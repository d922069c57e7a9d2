#pragma once

#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "ivpotts/analysis.hpp"
#include "ivpotts/contour_model.hpp"
#include "ivpotts/contours.hpp"
#include "ivpotts/lattice.hpp"
#include "ivpotts/mc.hpp"
#include "ivpotts/potts.hpp"

namespace ivp {

using Json = nlohmann::ordered_json;

// Schema violation; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Schema helpers; errors carry the field path.
const Json& json_field(const Json& j, const char* key, const std::string& path);
int json_int(const Json& j, const std::string& path);
double json_number(const Json& j, const std::string& path);
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& path);

Json site_to_json(Site s);
Site site_from_json(const Json& j, const std::string& path = "site");
// [x, y, "x"|"y"] with (x, y) the lower endpoint.
Json bond_to_json(const Bond& b);
Bond bond_from_json(const Json& j, const std::string& path = "bond");

// {"type": "explicit", "sites": [...], "bonds": [...]}.
Json volume_to_json(const Volume& v);
// Accepts {"type": "window", "n"}, {"type": "rect", "w", "h"[, "x0", "y0"]}
// and the explicit form.
Volume volume_from_json(const Json& j, const std::string& path = "volume");

// {"kind": "order"|"disorder", "pairs": [[[x, y], [x, y, axis]], ...]}.
Json contour_to_json(const Contour& c);
Contour contour_from_json(const Json& j, const std::string& path = "contour");

Json params_to_json(const ModelParams& p);
// Missing fields keep their defaults; the result is validated.
ModelParams params_from_json(const Json& j, const std::string& path = "params");

Json caps_to_json(const EnumerationCaps& c);
EnumerationCaps caps_from_json(const Json& j, const std::string& path = "caps");

struct GoldenValue {
  std::string quantity;
  ModelParams params;
  EnumerationCaps caps;
  double value = 0.0;
  bool complete = true;
};

Json golden_to_json(const GoldenValue& g);
GoldenValue golden_from_json(const Json& j, const std::string& path = "golden");

Json manifest_to_json(const RunManifest& m);
Json bimodality_to_json(const BimodalityReport& b);

// Columns: sweep, energy_per_site, frac_colour_1..C, largest_component_fraction,
// isolated_fraction.
void write_series_csv(std::ostream& os, const ObservableSeries& s);
ObservableSeries read_series_csv(std::istream& is);

// Columns: beta, e_order, e_disorder, F, f_o, f_d, f_rc, margin_flag.
void write_pressure_csv(std::ostream& os, const PressureTable& t);
PressureTable read_pressure_csv(std::istream& is);

// Columns: bin_low, bin_high, count.
void write_histogram_csv(std::ostream& os, const Histogram& h);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// Writes through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ivp
