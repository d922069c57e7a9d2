#include "ivpotts/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ivpotts/contours.hpp"
#include "ivpotts/logspace.hpp"

namespace ivp {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

ModelParams make_params(double q, double r, double beta) {
  ModelParams p;
  p.q = q;
  p.r = r;
  p.beta = beta;
  p.validate();
  return p;
}

PressureRow closed_form_row(double q, double r, double beta) {
  const Energies e = energies(make_params(q, r, beta));
  PressureRow row;
  row.beta = beta;
  row.e_order = e.e_order;
  row.e_disorder = e.e_disorder;
  row.F = std::max(-e.e_order, -e.e_disorder);
  row.f_o = row.f_d = row.f_rc = kNaN;
  return row;
}

// Marginal of a full-configuration distribution on the bond positions `idx`.
std::vector<double> marginal(const std::vector<double>& prob, const std::vector<int>& idx) {
  std::vector<double> out(std::size_t{1} << idx.size(), 0.0);
  for (std::size_t s = 0; s < prob.size(); ++s) {
    if (prob[s] == 0.0) continue;
    std::size_t w = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) w |= ((s >> idx[j]) & 1u) << j;
    out[w] += prob[s];
  }
  return out;
}

double expectation(const std::vector<double>& marg, std::uint16_t f) {
  double e = 0.0;
  for (std::size_t w = 0; w < marg.size(); ++w)
    if ((f >> w) & 1u) e += marg[w];
  return e;
}

}  // namespace

double beta_bar_c(double q_plus_r) {
  if (!(q_plus_r > 0.0)) throw std::invalid_argument("q + r must be positive");
  return std::log1p(std::sqrt(q_plus_r));
}

double latent_heat_asymptote(double q_plus_r) {
  if (!(q_plus_r > 0.0)) throw std::invalid_argument("q + r must be positive");
  return 2.0 + 2.0 / std::sqrt(q_plus_r);
}

double pressure_slope_jump(double q_plus_r) {
  const double b = beta_bar_c(q_plus_r);
  // d e(𝔹)/dβ = -1/(e^β - 1) and d e(∅)/dβ = 1.
  const double de_order = -1.0 / std::expm1(b);
  const double de_disorder = 1.0;
  return -de_order - (-de_disorder);
}

PressureTable energy_curves(double q, double r, const std::vector<double>& betas) {
  if (!(q + r > 0.0)) throw std::invalid_argument("q + r must be positive");
  PressureTable t;
  t.q = q;
  t.r = r;
  for (double beta : betas) t.rows.push_back(closed_form_row(q, r, beta));
  return t;
}

PressureTable pressure_table(double q, double r, const std::vector<double>& betas, double tau, int n,
                             const EnumerationCaps& caps, double tolerance) {
  if (n < 1) throw std::invalid_argument("window size must be at least 1");
  PressureTable t = energy_curves(q, r, betas);
  t.tau = tau;
  t.n = n;
  const Volume v = make_window(n);
  const double nb = static_cast<double>(v.num_bonds());
  for (PressureRow& row : t.rows) {
    ContourModel model(make_params(q, r, row.beta), caps);
    const GfRow gf = g_and_f_estimates(model, tau, n).back();
    row.f_o = gf.f_o;
    row.f_d = gf.f_d;
    row.f_rc = std::max(model.log_z(v, BoundaryClass::ordered), model.log_z(v, BoundaryClass::disordered)) / nb;
    row.margin = std::exp(-tau / 2.0);
    row.margin_flag = row.f_rc < std::max(row.f_o, row.f_d) - tolerance;
    const double excess = row.f_rc - row.F;
    row.in_tube = excess >= -tolerance && excess <= row.margin + tolerance;
  }
  return t;
}

BimodalityReport detect_bimodality(const Histogram& h, double dip_threshold, double min_mode_fraction) {
  const std::size_t nb = h.counts.size();
  if (nb == 0 || h.total() == 0) throw std::invalid_argument("empty histogram");
  std::vector<double> s(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    double sum = 0.0;
    int k = 0;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(nb - 1, i + 1); ++j, ++k) sum += h.counts[j];
    s[i] = sum / k;
  }
  const double top = *std::max_element(s.begin(), s.end());
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < nb; ++i) {
    const double left = i == 0 ? -1.0 : s[i - 1];
    const double right = i + 1 == nb ? -1.0 : s[i + 1];
    if (s[i] >= left && s[i] > right && s[i] >= min_mode_fraction * top) peaks.push_back(i);
  }
  const auto centre = [&](std::size_t i) { return 0.5 * (h.edges[i] + h.edges[i + 1]); };
  BimodalityReport rep;
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  if (peaks.size() < 2) {
    const std::size_t i = peaks.empty() ? 0 : peaks[0];
    rep.mode_low = rep.mode_high = centre(i);
    return rep;
  }
  std::size_t a = std::min(peaks[0], peaks[1]);
  std::size_t b = std::max(peaks[0], peaks[1]);
  double dip = s[a];
  for (std::size_t i = a; i <= b; ++i) dip = std::min(dip, s[i]);
  rep.mode_low = centre(a);
  rep.mode_high = centre(b);
  rep.dip_ratio = dip / std::min(s[a], s[b]);
  rep.bimodal = rep.dip_ratio < dip_threshold;
  return rep;
}

std::vector<double> rc_probabilities(const Volume& v, double p, double q, double r, BoundaryClass bc) {
  const std::size_t m = v.num_bonds();
  if (m > 20) throw CapExceeded("too many bonds for exact probabilities");
  const std::size_t states = std::size_t{1} << m;
  std::vector<double> logw(states, kNegInf);
  BondConfig x(m);
  LogSum z;
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t b = 0; b < m; ++b) x[b] = (s >> b) & 1u;
    if (bc != BoundaryClass::plain && !in_class(v, x, bc)) continue;
    logw[s] = rc_log_weight(v, x, p, q, r);
    z.add(logw[s]);
  }
  std::vector<double> prob(states);
  for (std::size_t s = 0; s < states; ++s) prob[s] = std::exp(logw[s] - z.value());
  return prob;
}

double fkg_exact_check(const Volume& v, double p, double q, double r) {
  if (v.num_bonds() > 12) throw CapExceeded("FKG check limited to 12 bonds");
  const std::vector<double> mu = rc_probabilities(v, p, q, r);
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (std::size_t b = a + 1; b < mu.size(); ++b) {
      if ((a & b) == a || (a & b) == b) continue;  // comparable pairs are equalities
      slack = std::min(slack, mu[a | b] * mu[a & b] - mu[a] * mu[b]);
    }
  return mu.size() < 4 ? 0.0 : slack;
}

std::vector<std::uint16_t> monotone_functions(int m) {
  if (m < 0 || m > 4) throw std::invalid_argument("monotone sweep limited to 4 variables");
  const int inputs = 1 << m;
  std::vector<std::uint16_t> out;
  for (std::uint32_t f = 0; f < (1u << inputs); ++f) {
    bool ok = true;
    for (int x = 0; x < inputs && ok; ++x)
      for (int bit = 0; bit < m && ok; ++bit)
        if (!((x >> bit) & 1) && ((f >> x) & 1u) && !((f >> (x | (1 << bit))) & 1u)) ok = false;
    if (ok) out.push_back(static_cast<std::uint16_t>(f));
  }
  return out;
}

DominationReport domination_exact_check(const Volume& v, double p1, double p2, double q, double r,
                                        std::vector<Bond> observed) {
  if (p1 > p2) throw std::invalid_argument("need p1 <= p2");
  if (observed.empty())
    observed = v.num_bonds() <= 4 ? v.bonds() : class_free_bonds(v, BoundaryClass::ordered);
  if (observed.size() > 4) throw CapExceeded("domination sweep limited to 4 observed bonds");
  std::vector<int> idx;
  for (const Bond& b : observed) {
    const std::size_t i = v.bond_index(b);
    if (i == Volume::npos) throw std::invalid_argument("observed bond outside the volume");
    idx.push_back(static_cast<int>(i));
  }
  const auto functions = monotone_functions(static_cast<int>(idx.size()));
  DominationReport rep;
  rep.observed = observed;
  rep.functions = static_cast<int>(functions.size());
  const BoundaryClass order[3] = {BoundaryClass::disordered, BoundaryClass::plain, BoundaryClass::ordered};
  std::vector<double> marg[2][3];
  for (int k = 0; k < 2; ++k)
    for (int c = 0; c < 3; ++c) marg[k][c] = marginal(rc_probabilities(v, k ? p2 : p1, q, r, order[c]), idx);
  rep.class_gap = rep.monotone_gap = std::numeric_limits<double>::infinity();
  for (std::uint16_t f : functions) {
    double e[2][3];
    for (int k = 0; k < 2; ++k)
      for (int c = 0; c < 3; ++c) e[k][c] = expectation(marg[k][c], f);
    for (int k = 0; k < 2; ++k) rep.class_gap = std::min({rep.class_gap, e[k][1] - e[k][0], e[k][2] - e[k][1]});
    for (int c = 0; c < 3; ++c) rep.monotone_gap = std::min(rep.monotone_gap, e[1][c] - e[0][c]);
  }
  return rep;
}

}  // namespace ivp
