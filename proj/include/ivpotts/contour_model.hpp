#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ivpotts/biased_rc.hpp"
#include "ivpotts/contours.hpp"

namespace ivp {

// Which contours count as lying in a volume Λ.
//  geometric:        B(γ) ⊆ B(Λ)
//  disordered_class: disorder contours whose island uses inner bonds of Λ only
//  ordered_class:    order contours with B(V(γ)) inside the free bonds of the ordered class
enum class ContourScope { geometric, disordered_class, ordered_class };

struct EnumerationCaps {
  int max_contour_bonds = 0;  // |B(γ)| limit, 0 = none
  int max_diameter = 0;       // doubled units, 0 = none
  int volume_cap = 24;        // free-bond limit for exhaustive sub-volume sums
  std::uint64_t max_visits = 50'000'000;
  std::uint64_t max_states = 20'000'000;  // abstract partition function frontier limit
  std::size_t flat_cap = 5'000;            // contours allowed in a direct family sum
};

struct ContourSet {
  std::vector<Contour> contours;
  bool complete = true;  // false when a cap removed candidates
};

// Streams the contours of the scope; the engine holds exactly one contour,
// index 0, during the call. Returns the completeness flag.
using ContourVisitor = std::function<void(const ContourEngine&)>;
bool for_each_contour(const Volume& v, const EnumerationCaps& caps, ContourScope scope,
                      std::optional<ContourKind> kind, const ContourVisitor& visit);

ContourSet enumerate_contours(const Volume& v, const EnumerationCaps& caps,
                              ContourScope scope = ContourScope::geometric,
                              std::optional<ContourKind> kind = std::nullopt);

// Weight function over contours in log space; kNegInf encodes a zero weight.
struct WeightFunction {
  std::string tag;
  std::function<LogValue(const Contour&)> log_weight;
};

WeightFunction truncate(const WeightFunction& chi, double tau);

// Log of the sum over pairwise compatible subfamilies of Π χ(γ). Extra
// conflicts, given as index pairs into `contours`, are forbidden in addition
// to overlapping pair sets.
LogValue abstract_log_partition(const std::vector<Contour>& contours, const std::vector<LogValue>& log_w,
                                const std::vector<std::array<int, 2>>& extra_conflicts = {},
                                std::uint64_t max_states = 20'000'000);

// Contours of one kind that share no pair yet are incompatible: neither lies in
// the class scope of the other's interior, and the two cannot be the contours
// of a single configuration (their islands or missing sets merge or split).
std::vector<std::array<int, 2>> realizability_conflicts(const std::vector<Contour>& contours);

// Partition-function machinery on sub-volumes, with shape-canonical memoization.
class ContourModel {
 public:
  enum class DisorderInterior { conditional, volume };

  explicit ContourModel(ModelParams params, EnumerationCaps caps = {});

  const ModelParams& params() const { return params_; }
  const EnumerationCaps& caps() const { return caps_; }
  Energies energies() const { return energies_; }

  // Redefined partition functions Z^disord(Λ), Z^ord(Λ) and Y = e^{|B|e} Z.
  LogValue log_z(const Volume& v, BoundaryClass bc);
  LogValue log_y(const Volume& v, BoundaryClass bc);

  // Ordered sum over int γ restricted to configurations having γ among their
  // contours (the interior seen from a disorder contour).
  LogValue log_z_ord_given(const Contour& gamma);

  LogValue log_xi_d(const Contour& gamma,
                    DisorderInterior mode = DisorderInterior::conditional);
  LogValue log_xi_o(const Contour& gamma);
  WeightFunction xi_d(DisorderInterior mode = DisorderInterior::conditional);
  WeightFunction xi_o();
  WeightFunction rho();
  WeightFunction rho_tilde();

  // 𝒵 over contours of `kind` in the class scope of v, summed directly over
  // compatible families (pair-disjoint and jointly realizable). Memoized.
  LogValue log_abstract(const Volume& v, ContourKind kind);
  LogValue log_abstract(const Volume& v, ContourKind kind, const WeightFunction& chi);
  // Same quantity for the ordered scope, organised by external families:
  // Σ_θ Π_{γ∈θ} ξ^o(γ) 𝒵(int γ|ξ^o), with θ running over the contour
  // families of ordered-class configurations that have no finite cluster.
  LogValue log_abstract_by_externals(const Volume& v);
  LogValue log_abstract_by_externals(const Volume& v, const WeightFunction& chi);
  // χ(γ) 𝒵(int γ|χ) for an order contour.
  LogValue log_external_factor(const Contour& gamma, const WeightFunction& chi);

  std::size_t cache_size() const;

 private:
  const RcStatistics& statistics(const Volume& v, BoundaryClass bc);

  ModelParams params_;
  EnumerationCaps caps_;
  Energies energies_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<RcStatistics>> volume_cache_;
  std::unordered_map<std::string, std::shared_ptr<std::map<std::array<int, 3>, double>>> given_cache_;
  std::unordered_map<std::string, LogValue> abstract_cache_;
  // Keyed by a 128-bit digest of (weight tag, translated contour).
  std::map<std::array<std::uint64_t, 2>, LogValue> factor_cache_;
};

// RC statistics of a volume's class, computed on S(B(Λ)) with the boundary
// sites wired to one ghost vertex in the ordered class.
RcStatistics class_statistics_direct(const Volume& v, BoundaryClass bc,
                                     std::uint64_t cap = kDefaultEnumerationCap);
// Redefined partition function from direct RC statistics.
LogValue log_z_redefined(const RcStatistics& stats, const Volume& v, BoundaryClass bc,
                         const ModelParams& params);

struct FamilySumReport {
  LogValue log_y = 0.0;         // configuration side, Y^d or Y^o
  LogValue log_abstract = 0.0;  // 𝒵(Λ|ξ)
  // 𝒵 with compatibility by pair-disjointness alone; NaN when not evaluated.
  LogValue log_abstract_pair_disjoint = 0.0;
  std::size_t n_contours = 0;
  std::size_t n_extra_conflicts = 0;
  bool by_externals = false;
  bool complete = true;
  double residual() const { return log_abstract - log_y; }
  double residual_pair_disjoint() const { return log_abstract_pair_disjoint - log_y; }
};

FamilySumReport family_sum_check(ContourModel& model, const Volume& v, BoundaryClass bc);

// Exact probability, under the ordered-class RC measure on Λ, that each
// external family occurs, against Π ξ^o 𝒵(int γ|ξ^o) / 𝒵(Λ|ξ^o).
struct ExternalFamilyReport {
  std::size_t families = 0;
  double max_abs_error = 0.0;
  double total_probability = 0.0;
};
ExternalFamilyReport external_family_check(ContourModel& model, const Volume& v);

struct PeierlsReport {
  LogValue log_sum = kNegInf;  // Σ ξ over Γ_A
  std::size_t n_contours = 0;
  bool complete = true;
  double exact_probability = -1.0;  // filled when an exact ordered-class value was requested
};

// Σ of ξ over contours of `kind` in the scope whose interior contains A.
PeierlsReport peierls_sum(ContourModel& model, const Volume& scope_volume, ContourScope scope,
                          const std::vector<Site>& a, ContourKind kind, int diameter_cap);
// Exact φ^ord_Λ{some contour surrounds every site of A} by enumeration.
double exact_surround_probability(const Volume& v, const std::vector<Site>& a, const ModelParams& params,
                                  std::uint64_t cap = kDefaultEnumerationCap);

struct GfRow {
  int n = 0;
  double g_truncated_o = 0.0;  // g_n(ξ̄^o)
  double g_truncated_d = 0.0;  // g_n(ξ̄^d)
  double f_o = 0.0;
  double f_d = 0.0;
  double single_site_bound_o = 0.0;  // Σ_{S(γ)∋0} ξ̄^o
  double single_site_bound_d = 0.0;
  bool complete = true;
};

std::vector<GfRow> g_and_f_estimates(ContourModel& model, double tau, int n_max);

struct DerivativeReport {
  double finite_difference = 0.0;  // d/dβ of log 𝒵(Λ|ξ̄^o)/|S(Λ)|
  double bound_tau = 0.0;          // 2/(e^β-1) e^{-τ/2}
  double bound_enumerated = 0.0;   // -2 e(𝔹)' Σ_{S(V(γ))∋0} ξ̄^o
  bool complete = true;
};

DerivativeReport derivative_bound_check(const ModelParams& params, double tau, const Volume& v,
                                        double h, const EnumerationCaps& caps = {});

}  // namespace ivp
