#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ivpotts/analysis.hpp"

using namespace ivp;

namespace {
// Counts monotone Boolean functions by checking every pair of comparable inputs.
int count_monotone_bruteforce(int m) {
  const int inputs = 1 << m;
  int count = 0;
  for (std::uint32_t f = 0; f < (1u << inputs); ++f) {
    bool ok = true;
    for (int x = 0; x < inputs && ok; ++x)
      for (int y = 0; y < inputs && ok; ++y)
        if ((x & y) == x && ((f >> x) & 1u) > ((f >> y) & 1u)) ok = false;
    count += ok;
  }
  return count;
}

Histogram normal_histogram(std::vector<std::pair<double, double>> centres, int n, int bins, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> xs;
  for (auto [mu, sd] : centres) {
    std::normal_distribution<double> d(mu, sd);
    for (int i = 0; i < n; ++i) xs.push_back(d(gen));
  }
  return histogram(xs, bins);
}
}  // namespace

TEST(Analysis, ClosedFormExamples) {
  const PressureTable t = energy_curves(2, 2, {std::log(2.0)});
  EXPECT_NEAR(t.rows[0].e_order, std::log(2.0), 1e-15);
  EXPECT_NEAR(t.rows[0].e_disorder, 0.0, 1e-15);
  EXPECT_NEAR(t.rows[0].F, 0.0, 1e-15);
  EXPECT_NEAR(beta_bar_c(4), std::log(3.0), 1e-15);
  EXPECT_NEAR(beta_bar_c(100), 2.3978952727983707, 1e-12);
  EXPECT_NEAR(latent_heat_asymptote(100), 2.2, 1e-15);
  EXPECT_TRUE(std::isnan(t.rows[0].f_rc));
}

TEST(Analysis, CrossingAndSlopeJumpOnGrid) {
  for (double q : {1.0, 2.0, 3.0, 10.0})
    for (double r : {0.0, 1.0, 5.0, 30.0, 97.0}) {
      const double b = beta_bar_c(q + r);
      const PressureRow row = energy_curves(q, r, {b}).rows[0];
      EXPECT_NEAR(row.e_order, row.e_disorder, 1e-12);
      EXPECT_NEAR(2.0 * pressure_slope_jump(q + r), latent_heat_asymptote(q + r), 1e-12);
      // One-sided finite differences of F straddling the crossing.
      const double h = 1e-6;
      const auto F = [&](double beta) { return energy_curves(q, r, {beta}).rows[0].F; };
      const double jump = (F(b + 2 * h) - F(b + h)) / h - (F(b - h) - F(b - 2 * h)) / h;
      EXPECT_NEAR(jump, 1.0 + 1.0 / std::sqrt(q + r), 1e-4);
    }
}

TEST(Analysis, LimitsOfF) {
  const PressureRow hot = energy_curves(2, 30, {0.0}).rows[0];
  EXPECT_NEAR(hot.F, 0.5 * std::log(32.0), 1e-15);
  const PressureRow cold = energy_curves(2, 30, {12.0}).rows[0];
  EXPECT_NEAR(cold.F, -cold.e_order, 1e-15);
}

TEST(Analysis, PressureTableOnSmallestWindow) {
  const double bc = beta_bar_c(32);
  const PressureTable t = pressure_table(2, 30, {bc - 1, bc, bc + 1}, 4.0, 1);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const PressureRow& row : t.rows) {
    EXPECT_FALSE(row.margin_flag) << row.beta;
    EXPECT_GE(row.f_rc, row.F - 1e-12);
    EXPECT_GE(row.f_rc, std::max(row.f_o, row.f_d) - 1e-12);
    EXPECT_NEAR(row.margin, std::exp(-2.0), 1e-15);
  }
  EXPECT_TRUE(t.rows.front().in_tube);
  EXPECT_TRUE(t.rows.back().in_tube);
}

TEST(Analysis, BimodalityVerdicts) {
  const auto two = detect_bimodality(normal_histogram({{-3, 1}, {3, 1}}, 20000, 60, 1));
  EXPECT_TRUE(two.bimodal);
  EXPECT_LT(two.mode_low, -2);
  EXPECT_GT(two.mode_high, 2);
  const auto one = detect_bimodality(normal_histogram({{0, 1}}, 40000, 60, 2));
  EXPECT_FALSE(one.bimodal);
  EXPECT_THROW(detect_bimodality(Histogram{{0, 1, 2}, {0, 0}}), std::invalid_argument);
}

TEST(Analysis, RcProbabilitiesOnPath) {
  const auto mu = rc_probabilities(make_rect(3, 1), 0.5, 2, 1);
  EXPECT_NEAR(mu[3], 0.5 / 10.25, 1e-15);
  EXPECT_NEAR(mu[1] + mu[3], 2.0 / 10.25, 1e-15);
  EXPECT_GE(mu[3], (mu[1] + mu[3]) * (mu[2] + mu[3]));
  EXPECT_NEAR((mu[1] + mu[3]) * (mu[2] + mu[3]), 0.038072575847709, 1e-12);
}

TEST(Analysis, FkgLatticeCondition) {
  EXPECT_NEAR(fkg_exact_check(make_rect(2, 2), 0.37, 1, 0), 0.0, 1e-15);
  EXPECT_NEAR(fkg_exact_check(make_rect(3, 2), 0.8, 1, 0), 0.0, 1e-15);
  for (double p : {0.1, 0.5, 0.9})
    for (double q : {1.0, 2.0, 5.0})
      for (double r : {0.0, 1.0, 30.0}) EXPECT_GE(fkg_exact_check(make_rect(2, 2), p, q, r), -1e-12);
}

TEST(Analysis, MonotoneFunctionCounts) {
  const int dedekind[] = {2, 3, 6, 20, 168};
  for (int m = 0; m <= 4; ++m) {
    EXPECT_EQ(static_cast<int>(monotone_functions(m).size()), dedekind[m]);
    EXPECT_EQ(count_monotone_bruteforce(m), dedekind[m]);
  }
}

TEST(Analysis, DominationSingleBond) {
  const Volume v = make_rect(2, 1);
  const auto dis = rc_probabilities(v, 0.4, 2, 1, BoundaryClass::disordered);
  const auto ord = rc_probabilities(v, 0.4, 2, 1, BoundaryClass::ordered);
  EXPECT_DOUBLE_EQ(dis[1], 0.0);
  EXPECT_DOUBLE_EQ(ord[1], 1.0);
  EXPECT_TRUE(domination_exact_check(v, 0.4, 0.4, 2, 1).holds());
}

TEST(Analysis, DominationFourBonds) {
  const DominationReport square = domination_exact_check(make_rect(2, 2), 0.6, 0.6, 2, 5);
  EXPECT_EQ(square.functions, 168);
  EXPECT_TRUE(square.holds());
  EXPECT_TRUE(domination_exact_check(make_rect(2, 2), 0.3, 0.7, 2, 5).holds());
  // The four spokes of the smallest window, with its outer ring frozen or cut.
  const DominationReport star = domination_exact_check(make_window(1), 0.3, 0.7, 2, 5);
  EXPECT_EQ(star.observed.size(), 4u);
  EXPECT_EQ(star.functions, 168);
  EXPECT_TRUE(star.holds());
  EXPECT_GT(star.class_gap, -1e-12);
  EXPECT_THROW(domination_exact_check(make_window(1), 0.7, 0.3, 2, 5), std::invalid_argument);
}
