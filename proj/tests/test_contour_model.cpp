#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ivpotts/contour_model.hpp"

using namespace ivp;

namespace {
const Bond kB0{{0, 0}, Axis::X};
const double kBetaBar = std::log(1.0 + std::sqrt(32.0));

Contour minimal_disorder() { return extract_contours(Configuration::finite({kB0})).at(0); }
Contour minimal_disorder_y() {
  return extract_contours(Configuration::finite({Bond{{0, 0}, Axis::Y}})).at(0);
}
Contour minimal_order() { return extract_contours(Configuration::cofinite_without({kB0})).at(0); }

// Every subset of the candidate bonds whose configuration has exactly one
// contour of the wanted kind.
std::set<Contour> brute_force_contours(const std::vector<Bond>& candidates, bool order) {
  std::set<Contour> out;
  const int n = static_cast<int>(candidates.size());
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Bond> sub;
    for (int e = 0; e < n; ++e)
      if ((mask >> e) & 1U) sub.push_back(candidates[e]);
    const auto cs = extract_contours(order ? Configuration::cofinite_without(sub) : Configuration::finite(sub));
    if (cs.size() == 1 && cs[0].kind == (order ? ContourKind::order : ContourKind::disorder)) out.insert(cs[0]);
  }
  return out;
}

// Family sum by listing every subfamily.
double brute_force_partition(const std::vector<Contour>& cs, const std::vector<double>& w,
                             const std::vector<std::array<int, 2>>& extra) {
  const int n = static_cast<int>(cs.size());
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    bool ok = true;
    double prod = 1.0;
    for (int i = 0; i < n && ok; ++i) {
      if (!((mask >> i) & 1U)) continue;
      prod *= w[i];
      for (int j = i + 1; j < n && ok; ++j)
        if ((mask >> j) & 1U) ok = compatible(cs[i], cs[j]);
    }
    for (const auto& [a, b] : extra) ok = ok && !(((mask >> a) & 1U) && ((mask >> b) & 1U));
    if (ok) total += prod;
  }
  return total;
}
}  // namespace

TEST(ContourModel, EnumerationSmallVolumes) {
  const Volume single({{0, 0}, {1, 0}}, {kB0});
  const auto one = enumerate_contours(single, {}, ContourScope::geometric);
  ASSERT_EQ(one.contours.size(), 1u);
  EXPECT_EQ(one.contours[0], minimal_order());
  EXPECT_TRUE(one.complete);

  const auto w1 = enumerate_contours(make_window(1), {}, ContourScope::geometric, ContourKind::disorder);
  EXPECT_TRUE(w1.contours.empty());

  EnumerationCaps six;
  six.max_contour_bonds = 6;
  const auto w2 = enumerate_contours(make_window(2), six, ContourScope::geometric);
  std::size_t nd = 0, no = 0, minimal = 0;
  for (const Contour& c : w2.contours) {
    (c.kind == ContourKind::disorder ? nd : no)++;
    if (c.canonical() == minimal_disorder().canonical() || c.canonical() == minimal_disorder_y().canonical())
      ++minimal;
  }
  EXPECT_EQ(nd, 12u);
  EXPECT_EQ(minimal, 12u);
  EXPECT_EQ(no, 14229u);
  EXPECT_FALSE(w2.complete);
}

TEST(ContourModel, EnumerationMatchesBruteForce) {
  for (const Volume& v : {make_rect(3, 3), make_rect(3, 4), make_rect(4, 4)}) {
    const auto ord = enumerate_contours(v, {}, ContourScope::ordered_class, ContourKind::order);
    const auto want_o = brute_force_contours(class_free_bonds(v, BoundaryClass::ordered), true);
    EXPECT_EQ(std::set<Contour>(ord.contours.begin(), ord.contours.end()), want_o);
    EXPECT_EQ(ord.contours.size(), want_o.size());
  }
  const Volume w2 = make_window(2);
  const auto dis = enumerate_contours(w2, {}, ContourScope::disordered_class, ContourKind::disorder);
  const auto want_d = brute_force_contours(w2.inner_bonds(), false);
  EXPECT_EQ(std::set<Contour>(dis.contours.begin(), dis.contours.end()), want_d);
  EXPECT_EQ(dis.contours.size(), 1632u);
  for (const Contour& c : dis.contours) EXPECT_TRUE(is_valid_contour(c));
}

TEST(ContourModel, EnumerationCapsAreMonotone) {
  const Volume v = make_rect(3, 4);
  std::size_t last = 0;
  for (int cap = 2; cap <= 10; cap += 2) {
    EnumerationCaps caps;
    caps.max_contour_bonds = cap;
    const auto set = enumerate_contours(v, caps, ContourScope::geometric);
    EXPECT_GE(set.contours.size(), last);
    for (const Contour& c : set.contours) EXPECT_LE(static_cast<int>(c.bonds().size()), cap);
    last = set.contours.size();
  }
}

TEST(ContourModel, AbstractPartitionTrivialCases) {
  const Contour c = minimal_order();
  EXPECT_DOUBLE_EQ(abstract_log_partition({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(abstract_log_partition({c}, {kNegInf}), 0.0);
  EXPECT_NEAR(abstract_log_partition({c}, {std::log(0.3)}), std::log(1.3), 1e-15);
}

TEST(ContourModel, AbstractPartitionMatchesSubfamilyListing) {
  auto all = enumerate_contours(make_rect(3, 4), {}, ContourScope::ordered_class, ContourKind::order).contours;
  std::stable_sort(all.begin(), all.end(),
                   [](const Contour& a, const Contour& b) { return a.size() < b.size(); });
  std::vector<Contour> cs(all.begin(), all.begin() + 18);
  std::vector<double> w;
  std::vector<LogValue> lw;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    w.push_back(0.05 + 0.01 * static_cast<double>(i));
    lw.push_back(std::log(w.back()));
  }
  EXPECT_NEAR(abstract_log_partition(cs, lw), std::log(brute_force_partition(cs, w, {})), 1e-12);
  const auto extra = realizability_conflicts(cs);
  EXPECT_FALSE(extra.empty());
  EXPECT_NEAR(abstract_log_partition(cs, lw, extra), std::log(brute_force_partition(cs, w, extra)), 1e-12);
}

TEST(ContourModel, AdjacentIsolatedSitesConflict) {
  // Two order contours around neighbouring isolated sites share no pair but
  // no configuration has both.
  auto around = [](Site s) {
    const auto inc = incident_bonds(s);
    std::vector<Bond> m(inc.begin(), inc.end());
    return extract_contours(Configuration::cofinite_without(m)).at(0);
  };
  const Contour a = around({0, 0}), b = around({1, 0}), far = around({3, 0});
  EXPECT_TRUE(compatible(a, b));
  EXPECT_EQ(realizability_conflicts({a, b}).size(), 1u);
  EXPECT_TRUE(realizability_conflicts({a, far}).empty());
}

TEST(ContourModel, XiMinimalContours) {
  for (double q : {1.0, 2.0, 3.0})
    for (double r : {0.0, 1.0, 30.0})
      for (double beta : {0.3, std::log(2.0), 1.5, kBetaBar}) {
        ContourModel m({q, r, beta});
        EXPECT_NEAR(std::exp(m.log_xi_o(minimal_order())), 1.0 / std::expm1(beta), 1e-12 / std::expm1(beta));
        EXPECT_NEAR(std::exp(m.log_xi_d(minimal_disorder())), q * std::expm1(beta) / ((q + r) * (q + r)), 1e-12);
      }
  ContourModel m({2, 2, std::log(2.0)});
  EXPECT_NEAR(std::exp(m.log_xi_o(minimal_order())), 1.0, 1e-12);
  EXPECT_NEAR(std::exp(m.log_xi_d(minimal_disorder())), 0.125, 1e-12);
  EXPECT_EQ(m.log_xi_d(minimal_order()), kNegInf);
  EXPECT_EQ(m.log_xi_o(minimal_disorder()), kNegInf);
}

TEST(ContourModel, Truncation) {
  WeightFunction chi{"custom", [](const Contour&) { return std::log(0.1); }};
  const Contour c = minimal_disorder();  // |γ| = 6
  EXPECT_EQ(truncate(chi, 0.5).log_weight(c), kNegInf);
  EXPECT_NEAR(truncate(chi, 0.1).log_weight(c), std::log(0.1), 1e-15);
  EXPECT_EQ(truncate(chi, 1e6).log_weight(c), kNegInf);
}

TEST(ContourModel, SubvolumeSumsMatchContourForms) {
  const ModelParams prm{2, 3, 0.8};
  ContourModel m(prm);
  const Volume pinched({{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}},
                       {{{0, 0}, Axis::X}, {{1, 0}, Axis::X}, {{0, 0}, Axis::Y}, {{2, 0}, Axis::Y},
                        {{0, 1}, Axis::X}, {{1, 1}, Axis::X}});
  for (const Volume& v : {make_rect(3, 4), make_rect(4, 4), make_window(1), pinched})
    for (auto bc : {BoundaryClass::disordered, BoundaryClass::ordered})
      EXPECT_NEAR(m.log_z(v, bc), log_partition_contour(v, prm, bc, ContourVariant::redefined), 1e-12);
}

TEST(ContourModel, FamilySumDisordered) {
  ContourModel m({2, 30, kBetaBar});
  for (const Volume& v : {make_rect(3, 4), make_rect(4, 4), make_rect(4, 5), make_window(2)}) {
    const auto r = family_sum_check(m, v, BoundaryClass::disordered);
    EXPECT_TRUE(r.complete);
    EXPECT_NEAR(r.residual(), 0.0, 1e-9) << v.num_sites();
  }
}

TEST(ContourModel, FamilySumOrdered) {
  ContourModel m({2, 30, kBetaBar});
  for (const Volume& v : {make_window(1), make_rect(3, 4), make_rect(4, 4)}) {
    const auto r = family_sum_check(m, v, BoundaryClass::ordered);
    EXPECT_TRUE(r.complete);
    EXPECT_FALSE(r.by_externals);
    EXPECT_NEAR(r.residual(), 0.0, 1e-9) << v.num_sites();
    EXPECT_GT(r.residual_pair_disjoint(), 1e-3);  // pair-disjointness alone over-counts
    EXPECT_NEAR(m.log_abstract_by_externals(v), r.log_abstract, 1e-12);
  }
}

TEST(ContourModel, VolumeInteriorDisorderWeightsMissFamilySum) {
  ContourModel m({2, 30, kBetaBar});
  const Volume v = make_window(2);
  const auto set = enumerate_contours(v, {}, ContourScope::disordered_class, ContourKind::disorder);
  std::vector<LogValue> w;
  for (const Contour& c : set.contours) w.push_back(m.log_xi_d(c, ContourModel::DisorderInterior::volume));
  const double z = abstract_log_partition(set.contours, w, realizability_conflicts(set.contours));
  EXPECT_GT(std::abs(z - m.log_y(v, BoundaryClass::disordered)), 1e-7);
}

TEST(ContourModel, ExternalFamilyProbabilities) {
  ContourModel m({2, 3, 0.9});
  const auto rep = external_family_check(m, make_rect(4, 4));
  EXPECT_GT(rep.families, 100u);
  EXPECT_NEAR(rep.total_probability, 1.0, 1e-12);
  EXPECT_LT(rep.max_abs_error, 1e-9);
}

TEST(ContourModel, PeierlsBoundSmallVolume) {
  ContourModel m({2, 30, kBetaBar});
  const Volume v = make_rect(4, 5);
  const Site centre{1, 2};
  const auto sum = peierls_sum(m, v, ContourScope::ordered_class, {centre}, ContourKind::order, 100);
  EXPECT_TRUE(sum.complete);
  EXPECT_GT(sum.n_contours, 0u);
  const double exact = exact_surround_probability(v, {centre}, m.params());
  EXPECT_GT(exact, 0.0);
  EXPECT_LE(exact, std::exp(sum.log_sum));
  const auto none = peierls_sum(m, v, ContourScope::ordered_class, {centre}, ContourKind::order, 1);
  EXPECT_EQ(none.n_contours, 0u);
  EXPECT_EQ(none.log_sum, kNegInf);
}

TEST(ContourModel, TruncatedPressures) {
  ContourModel m({2, 30, kBetaBar});
  const auto rows = g_and_f_estimates(m, 2.0, 1);
  ASSERT_EQ(rows.size(), 1u);
  const auto& row = rows[0];
  EXPECT_TRUE(row.complete);
  EXPECT_GE(row.f_d, -m.energies().e_disorder);
  EXPECT_GE(row.g_truncated_o, 0.0);
  EXPECT_LE(std::abs(row.f_o + m.energies().e_order), std::exp(-1.0));

  WeightFunction zero{"zero", [](const Contour&) { return kNegInf; }};
  EXPECT_EQ(m.log_abstract(make_window(1), ContourKind::order, zero), 0.0);

  // Truncation never increases the family sum.
  const Volume v = make_rect(4, 4);
  EXPECT_LE(m.log_abstract(v, ContourKind::order, truncate(m.xi_o(), 2.0)),
            m.log_abstract(v, ContourKind::order) + 1e-15);
}

TEST(ContourModel, DerivativeBound) {
  const ModelParams prm{2, 30, kBetaBar};
  const auto rep = derivative_bound_check(prm, 2.0, make_window(1), 1e-4);
  EXPECT_TRUE(rep.complete);
  EXPECT_LE(std::abs(rep.finite_difference), rep.bound_enumerated + 1e-6);
  const auto half = derivative_bound_check(prm, 2.0, make_window(1), 5e-5);
  EXPECT_NEAR(rep.finite_difference, half.finite_difference, 1e-6);
}
