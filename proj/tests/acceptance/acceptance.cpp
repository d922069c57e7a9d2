// Acceptance run: one PASS/FAIL line per criterion at full scale.
//
// Exit status is 0 when the set of failing criteria equals the --expect-fail
// set, 1 otherwise. An expected failure still prints FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ivpotts/verify.hpp"

namespace {

using ivp::CheckResult;

enum class Rule { at_most, at_least, above, within_bound, verdict };

// Pinned acceptance thresholds, independent of the library's defaults.
struct Pin {
  const char* check;
  Rule rule;
  double tol;
};

const Pin kPins[] = {
    {"potts_rc_identity", Rule::at_most, 1e-10},
    {"boundary_reductions", Rule::at_most, 1e-9},
    {"bond_site_identities", Rule::at_most, 0.0},
    {"contour_roundtrip", Rule::at_most, 0.0},
    {"contour_equivalence", Rule::at_most, 1e-9},
    {"family_sums", Rule::at_most, 1e-9},
    {"minimal_order_weight", Rule::at_most, 1e-12},
    {"peierls_bound", Rule::within_bound, 1e-12},
    {"coupling_marginals", Rule::at_most, 1e-12},
    {"kernel_stationarity", Rule::at_most, 1e-12},
    {"sampler_chi_square", Rule::above, 0.01},
    {"fkg_lattice_condition", Rule::at_least, -1e-12},
    {"stochastic_domination", Rule::at_least, -1e-12},
    {"transition_signature", Rule::verdict, 0.7},
    {"symmetry_breaking", Rule::above, 0.9},
    {"closed_forms", Rule::at_most, 1e-12},
};

const Pin& pin_for(const std::string& name) {
  for (const Pin& p : kPins)
    if (name == p.check) return p;
  throw std::logic_error("no pinned tolerance for " + name);
}

bool meets_pin(const CheckResult& r) {
  const Pin& p = pin_for(r.name);
  switch (p.rule) {
    case Rule::at_most: return r.value <= p.tol;
    case Rule::at_least: return r.value >= p.tol;
    case Rule::above: return r.value > p.tol;
    case Rule::within_bound: return r.value <= r.tolerance * (1.0 + p.tol);
    case Rule::verdict: return r.tolerance == p.tol && r.passed;
  }
  return false;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0 means no runtime limit
  std::function<std::vector<CheckResult>()> run;
};

std::string summary(const CheckResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s value=%.3g", r.name.c_str(), r.value);
  std::string s = buf;
  if (!r.complete) s += " INCOMPLETE";
  return s + " [" + r.detail + "]";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria at full scale"};
  int threads = 4;
  std::uint64_t seed = 1;
  std::vector<int> expect_fail, only;
  app.add_option("--threads", threads)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  app.add_option("--expect-fail", expect_fail, "criteria known to fail");
  app.add_option("--only", only, "run a subset of criteria");
  CLI11_PARSE(app, argc, argv);

  ivp::VerifyOptions base;
  base.scale = ivp::Scale::full;
  base.threads = threads;
  base.seed = seed;

  // Contour family sums and the Peierls bound run at the transition point of q=2, r=30.
  ivp::VerifyOptions critical = base;
  critical.params.q = 2;
  critical.params.r = 30;
  critical.params.beta = ivp::beta_bar_c(32);

  ivp::ContourSweep sweep;
  double sweep_seconds = 0.0;
  const auto ensure_sweep = [&] {
    if (sweep_seconds > 0.0) return;
    const auto t0 = std::chrono::steady_clock::now();
    sweep = ivp::contour_sweep(1);
    sweep_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const std::vector<Criterion> criteria = {
      {1, "Potts and random-cluster partition functions agree", 60,
       [&] { return std::vector{ivp::check_potts_rc_identity(base)}; }},
      {2, "boundary-condition reductions", 600, [&] { return std::vector{ivp::check_boundary_reductions(base)}; }},
      {3, "bond and site identities on every class configuration", 0,
       [&] {
         ensure_sweep();
         return std::vector{ivp::check_bond_site_identities(sweep)};
       }},
      {4, "contour extraction and reconstruction round trip", 0,
       [&] { return std::vector{ivp::check_contour_roundtrip(base)}; }},
      {5, "contour representation equals direct constrained sums", 0,
       [&] {
         ensure_sweep();
         return std::vector{ivp::check_contour_equivalence(sweep, base)};
       }},
      {6, "contour family sums and minimal order contour weight", 0,
       [&] { return std::vector{ivp::check_family_sums(critical), ivp::check_minimal_order_weight(critical)}; }},
      {7, "Peierls bound for the centre site", 600, [&] { return std::vector{ivp::check_peierls(critical)}; }},
      {8, "coupling marginals and compatible counts", 0,
       [&] { return std::vector{ivp::check_coupling_marginals(base)}; }},
      {9, "sampler stationarity and chi-square", 0,
       [&] { return std::vector{ivp::check_kernel_stationarity(base), ivp::check_sampler_chi_square(base)}; }},
      {10, "FKG lattice condition and stochastic domination", 0,
       [&] { return std::vector{ivp::check_fkg(base), ivp::check_domination(base)}; }},
      {11, "energy histogram bimodal only at the transition point", 600,
       [&] { return std::vector{ivp::check_transition_signature(base)}; }},
      {12, "symmetry breaking under boundary colours", 0,
       [&] { return std::vector{ivp::check_symmetry_breaking(base)}; }},
      {13, "closed forms for the transition point and latent heat", 0,
       [&] { return std::vector{ivp::check_closed_forms(base)}; }},
  };

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  const std::set<int> selected(only.begin(), only.end());
  std::set<int> failed;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const std::vector<CheckResult> results = c.run();
    bool ok = true;
    double seconds = 0.0;
    std::string detail;
    for (const CheckResult& r : results) {
      ok = ok && r.complete && r.passed && meets_pin(r);
      seconds += r.seconds;
      detail += (detail.empty() ? "" : "; ") + summary(r);
    }
    if ((c.id == 3 || c.id == 5) && sweep_seconds > 0.0) {
      detail += "; shared contour sweep " + std::to_string(static_cast<int>(sweep_seconds)) + " s";
      if (c.id == 3) seconds += sweep_seconds;
    }
    if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      ok = false;
      detail += "; over the " + std::to_string(static_cast<int>(c.budget_seconds)) + " s budget";
    }
    if (!ok) failed.insert(c.id);
    std::printf("%s %2d %s (%.1f s)%s\n    %s\n", ok ? "PASS" : "FAIL", c.id, c.title, seconds,
                !ok && expected.count(c.id) ? " expected" : "", detail.c_str());
    std::fflush(stdout);
  }

  std::set<int> considered = expected;
  if (!selected.empty()) {
    considered.clear();
    for (int id : expected)
      if (selected.count(id)) considered.insert(id);
  }
  if (failed == considered) {
    std::printf("%zu failing, all expected\n", failed.size());
    return 0;
  }
  for (int id : failed)
    if (!considered.count(id)) std::printf("unexpected failure: %d\n", id);
  for (int id : considered)
    if (!failed.count(id)) std::printf("expected failure now passes: %d\n", id);
  return 1;
}
