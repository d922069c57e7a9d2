#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivpotts/biased_rc.hpp"
#include "ivpotts/contour_model.hpp"
#include "ivpotts/lattice.hpp"
#include "ivpotts/mc.hpp"

namespace ivp {

// Crossing point of -e(𝔹) and -e(∅): log(1 + √(q+r)).
double beta_bar_c(double q_plus_r);
// Twice the jump of F' at the crossing: 2 + 2/√(q+r).
double latent_heat_asymptote(double q_plus_r);
// dF/dβ just above minus just below the crossing, from the energy derivatives.
double pressure_slope_jump(double q_plus_r);

struct PressureRow {
  double beta = 0.0;
  double e_order = 0.0;
  double e_disorder = 0.0;
  double F = 0.0;
  double f_o = 0.0;
  double f_d = 0.0;
  double f_rc = 0.0;  // NaN when not computed
  double margin = 0.0;  // e^{-τ/2}
  // f_rc < max(f_o, f_d) - tolerance.
  bool margin_flag = false;
  // 0 <= f_rc - F <= margin, up to the tolerance.
  bool in_tube = true;
};

struct PressureTable {
  double q = 0.0;
  double r = 0.0;
  double tau = 0.0;
  int n = 0;
  std::vector<PressureRow> rows;
};

// Closed-form columns only; f_o, f_d and f_rc are NaN.
PressureTable energy_curves(double q, double r, const std::vector<double>& betas);

// Adds the truncated contour pressures on Λ_n and the finite-volume pressure
// max(log Z^ord, log Z^disord)/|B(Λ_n)|.
PressureTable pressure_table(double q, double r, const std::vector<double>& betas, double tau, int n,
                             const EnumerationCaps& caps = {}, double tolerance = 1e-12);

struct BimodalityReport {
  double mode_low = 0.0;
  double mode_high = 0.0;
  double dip_ratio = 1.0;
  bool bimodal = false;
};

// Width-3 moving average, then the two highest local maxima; dip_ratio is the
// lowest smoothed count between them over the lower of the two.
BimodalityReport detect_bimodality(const Histogram& h, double dip_threshold = 0.7,
                                   double min_mode_fraction = 0.1);

// Normalised biased random-cluster probabilities of every bond set of the
// class, indexed by the bit pattern over v.bonds().
std::vector<double> rc_probabilities(const Volume& v, double p, double q, double r,
                                     BoundaryClass bc = BoundaryClass::plain);

// min over pairs of μ(X∨Y)μ(X∧Y) - μ(X)μ(Y) for the plain measure.
double fkg_exact_check(const Volume& v, double p, double q, double r);

// All monotone Boolean functions on m <= 4 variables as truth tables.
std::vector<std::uint16_t> monotone_functions(int m);

struct DominationReport {
  std::vector<Bond> observed;
  int functions = 0;
  // Most negative gaps of E_disord f <= E f <= E_ord f at p1 and p2.
  double class_gap = 0.0;
  // Most negative gap of E_{p1} f <= E_{p2} f over the three measures.
  double monotone_gap = 0.0;
  bool holds(double tol = 1e-12) const { return class_gap >= -tol && monotone_gap >= -tol; }
};

// Compares the disordered-class, plain and ordered-class measures on v through
// their marginals on `observed` (at most 4 bonds; default: all bonds of v when
// there are at most 4, else the free bonds of the ordered class).
DominationReport domination_exact_check(const Volume& v, double p1, double p2, double q, double r,
                                        std::vector<Bond> observed = {});

}  // namespace ivp
