#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ivpotts/lattice.hpp"
#include "ivpotts/logspace.hpp"

namespace ivp {

// Thrown when an exhaustive computation would exceed its configured size.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelParams {
  double q = 2.0;
  double r = 1.0;
  double beta = 0.6931471805599453;

  double p_beta() const;
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Integer colour counts for spin operations; throws if q or r is not integral.
  int q_int() const;
  int r_int() const;
  int colours() const { return q_int() + r_int(); }
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 26;

// Colours are 1..q+r, indexed like Volume::sites(); colours > q are invisible.
using SpinConfig = std::vector<int>;

void check_spins(const Volume& v, const SpinConfig& sigma, int colours);

int energy_interior(const Volume& v, const SpinConfig& sigma, int q);
// H^bound against the boundary condition where every outside site has colour k.
int energy_boundary(const Volume& v, const SpinConfig& sigma, int k, int q);

// counts[m] = number of configurations with exactly m satisfied interactions
// (interior, plus boundary ones when k is given).
std::vector<double> interaction_histogram(const Volume& v, int q, int r, std::optional<int> k,
                                          std::uint64_t cap = kDefaultEnumerationCap);

LogValue log_partition_free(const Volume& v, const ModelParams& params,
                            std::uint64_t cap = kDefaultEnumerationCap);
LogValue log_partition_homogeneous(const Volume& v, const ModelParams& params, int k,
                                   std::uint64_t cap = kDefaultEnumerationCap);
LogValue log_partition_from_histogram(const std::vector<double>& counts, double beta);

}  // namespace ivp
