#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ivpotts/lattice.hpp"
#include "ivpotts/logspace.hpp"
#include "ivpotts/potts.hpp"

namespace ivp {

// Presence mask over the bonds of a context volume, in Volume::bonds() order.
using BondConfig = std::vector<std::uint8_t>;

struct ComponentCounts {
  int kappa0 = 0;  // isolated sites
  int kappa1 = 0;  // components with at least two sites
  bool operator==(const ComponentCounts&) const = default;
};

enum class BoundaryClass { plain, disordered, ordered };

ComponentCounts component_counts(const Volume& v, const BondConfig& x);

// log[p^|X| (1-p)^|B\X| (q+r)^κ0 q^κ1]; -inf when p in {0,1} forbids X.
LogValue rc_log_weight(const Volume& v, const BondConfig& x, double p, double q, double r);
// Same weight from the sufficient statistics.
LogValue rc_log_weight(int n_present, int n_absent, ComponentCounts k, double p, double q, double r);

// Multiplicities of (|X|, κ0, κ1) over a constrained family of bond sets.
struct RcStatistics {
  int num_bonds = 0;
  struct Entry {
    int present;
    int kappa0;
    int kappa1;
    double count;
  };
  std::vector<Entry> entries;

  LogValue log_partition(double p, double q, double r) const;
};

// Free bonds enumerated exhaustively, `fixed_present` bonds always present,
// every other bond of the volume absent.
RcStatistics rc_statistics(const Volume& v, const std::vector<Bond>& free_bonds,
                           const std::vector<Bond>& fixed_present,
                           std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);

// Same on an abstract graph with vertices 0..n-1. The first `fixed_counted`
// fixed edges count as present bonds in the weight; `num_bonds` is |B|.
RcStatistics rc_statistics_graph(int n, const std::vector<std::array<int, 2>>& edges,
                                 const std::vector<std::array<int, 2>>& fixed_edges, int fixed_counted,
                                 int num_bonds, std::uint64_t cap = kDefaultEnumerationCap,
                                 int threads = 1);

// Free and frozen bonds of each boundary class on a general volume.
std::vector<Bond> class_free_bonds(const Volume& v, BoundaryClass bc);
std::vector<Bond> class_fixed_bonds(const Volume& v, BoundaryClass bc);
bool in_class(const Volume& v, const BondConfig& x, BoundaryClass bc);

RcStatistics rc_statistics(const Volume& v, BoundaryClass bc,
                           std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);

LogValue log_partition(const Volume& v, double p, double q, double r,
                       std::uint64_t cap = kDefaultEnumerationCap);
LogValue log_partition_class(const Volume& v, double p, double q, double r, BoundaryClass bc,
                             std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);
// The window pair (Λ_n, Λ_{n+1}): RC sum on Λ_{n+1} over the class.
LogValue log_partition_bc(int n, double p, double q, double r, BoundaryClass bc,
                          std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);

struct IdentityResiduals {
  double plain = 0.0;
  double disordered = 0.0;
  double ordered = 0.0;
};

// |log Z_β(G) - β|B| - log Z^RC(G)| on a general graph.
double plain_identity_residual(const Volume& v, const ModelParams& params,
                               std::uint64_t cap = kDefaultEnumerationCap);
double disordered_identity_residual(int n, const ModelParams& params,
                                    std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);
double ordered_identity_residual(int n, const ModelParams& params, int k = 1,
                                 std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);
IdentityResiduals identity_checks(int n, const ModelParams& params,
                                  std::uint64_t cap = kDefaultEnumerationCap, int threads = 1);

}  // namespace ivp
