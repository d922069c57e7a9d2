#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ivpotts/analysis.hpp"
#include "ivpotts/contour_model.hpp"
#include "ivpotts/contours.hpp"
#include "ivpotts/mc.hpp"

namespace ivp {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool complete = true;   // false when a cap cut an enumeration short
  double value = 0.0;     // worst observed deviation, or the tested statistic
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

// Test hook: rc_weight evaluates the random-cluster side with r + 1.
enum class Fault { none, rc_weight };

// desk keeps every check under a minute; full uses the acceptance sizes.
enum class Scale { desk, full };

struct VerifyOptions {
  ModelParams params;
  EnumerationCaps caps;
  int threads = 1;
  std::uint64_t seed = 1;
  Fault fault = Fault::none;
  Scale scale = Scale::desk;
};

Fault parse_fault(const std::string& s);
Scale parse_scale(const std::string& s);

// Every connected non-empty bond subset of v, as volumes.
std::vector<Volume> connected_subvolumes(const Volume& v);

// Chi-square survival probability with `dof` degrees of freedom.
double chi_square_p_value(double statistic, int dof);

CheckResult check_potts_rc_identity(const VerifyOptions& opt);
CheckResult check_boundary_reductions(const VerifyOptions& opt);

// One exhaustive contour sweep over both classes of the window pair (Λ_n, Λ_{n+1}).
struct ContourSweep {
  int n = 0;
  ContourStatistics disordered;
  ContourStatistics ordered;
};
ContourSweep contour_sweep(int n, std::uint64_t cap = kDefaultEnumerationCap);
CheckResult check_bond_site_identities(const ContourSweep& sweep);
CheckResult check_contour_equivalence(const ContourSweep& sweep, const VerifyOptions& opt);

// Exhaustive on a 3x3 (desk) or 4x4 (full) box through the dense engine, finite
// and cofinite, plus random 6x6 configurations through the generic API.
CheckResult check_contour_roundtrip(const VerifyOptions& opt);

CheckResult check_family_sums(const VerifyOptions& opt);
CheckResult check_minimal_order_weight(const VerifyOptions& opt);
CheckResult check_peierls(const VerifyOptions& opt);
CheckResult check_coupling_marginals(const VerifyOptions& opt);
CheckResult check_kernel_stationarity(const VerifyOptions& opt);
CheckResult check_sampler_chi_square(const VerifyOptions& opt);
CheckResult check_fkg(const VerifyOptions& opt);
CheckResult check_domination(const VerifyOptions& opt);
CheckResult check_closed_forms(const VerifyOptions& opt);

// Monte Carlo property checks on the 16x16 torus at q=2, r=30.
struct TransitionSignature {
  std::vector<double> betas;
  std::vector<Histogram> histograms;
  std::vector<BimodalityReport> reports;
};
TransitionSignature transition_signature(const std::vector<double>& betas, int sweeps, int threads,
                                         std::uint64_t seed);
CheckResult check_transition_signature(const VerifyOptions& opt);
CheckResult check_symmetry_breaking(const VerifyOptions& opt);

// Identity, enumeration and sampler checks; stops at the first complete failure.
using CheckObserver = std::function<void(const CheckResult&)>;
std::vector<CheckResult> run_verification(const VerifyOptions& opt, const CheckObserver& observe = {});

// 0 all passed, 1 some complete check failed, 2 otherwise incomplete.
int verification_exit_code(const std::vector<CheckResult>& results);

}  // namespace ivp
