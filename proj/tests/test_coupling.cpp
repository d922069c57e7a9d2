#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ivpotts/coupling.hpp"

using namespace ivp;

namespace {
const double kLog2 = std::log(2.0);

ModelParams params_of(double q, double r, double beta) {
  ModelParams p;
  p.q = q;
  p.r = r;
  p.beta = beta;
  return p;
}

Volume single_bond() { return make_rect(2, 1); }

// Six bonds of the 3x2 rectangle: the top-right bond removed.
Volume six_bond_volume() {
  std::vector<Bond> bonds;
  for (const Bond& b : make_rect(3, 2).bonds())
    if (!(b.lo == Site{1, 1} && b.axis == Axis::X)) bonds.push_back(b);
  return Volume::from_bonds(bonds);
}

BondConfig mask_to_config(std::uint32_t mask, std::size_t m) {
  BondConfig x(m);
  for (std::size_t b = 0; b < m; ++b) x[b] = (mask >> b) & 1u;
  return x;
}

// Satisfied interactions counted straight from the lattice geometry.
int matched_pairs(const Volume& v, const SpinConfig& s, int q) {
  int m = 0;
  for (const Bond& b : v.bonds()) {
    const int a = s[v.site_index(b.lo)];
    if (a == s[v.site_index(b.hi())] && a <= q) ++m;
  }
  return m;
}
}  // namespace

TEST(Coupling, JointWeightSingleBond) {
  const Volume v = single_bond();
  const ModelParams p = params_of(2, 1, 0.8);
  EXPECT_NEAR(joint_log_weight(v, {{1, 1}, {1}}, p), std::log(std::exp(0.8) - 1.0), 1e-14);
  EXPECT_EQ(joint_log_weight(v, {{1, 2}, {1}}, p), kNegInf);
  EXPECT_EQ(joint_log_weight(v, {{3, 3}, {1}}, p), kNegInf);
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) EXPECT_NEAR(joint_log_weight(v, {{a, b}, {0}}, p), 0.0, 1e-15);
}

TEST(Coupling, CompatibleCountExamples) {
  EXPECT_DOUBLE_EQ(compatible_count(single_bond(), {1}, 2, 1), 2.0);
  const Volume path = make_rect(3, 1);
  EXPECT_DOUBLE_EQ(compatible_count(path, {0, 0}, 2, 1), 27.0);
  EXPECT_DOUBLE_EQ(compatible_count(path, {1, 0}, 2, 1), 6.0);
  EXPECT_DOUBLE_EQ(compatible_count(make_rect(2, 2), BondConfig(4, 0), 3, 2), 625.0);
}

TEST(Coupling, CompatibleCountMatchesSpinEnumeration) {
  for (const Volume& v : {make_rect(2, 2), make_rect(4, 1), make_rect(3, 1)}) {
    for (auto [q, r] : {std::pair{2, 1}, std::pair{1, 2}, std::pair{3, 0}}) {
      const int colours = q + r;
      const auto states = static_cast<std::size_t>(std::pow(colours, v.num_sites()));
      for (std::uint32_t mask = 0; mask < (1u << v.num_bonds()); ++mask) {
        const BondConfig x = mask_to_config(mask, v.num_bonds());
        double count = 0;
        for (std::size_t s = 0; s < states; ++s)
          count += is_compatible(v, {decode_spins(s, v.num_sites(), colours), x}, q) ? 1 : 0;
        EXPECT_DOUBLE_EQ(compatible_count(v, x, q, r), count);
      }
    }
  }
}

TEST(Coupling, MarginalsMatchPottsAndRandomCluster) {
  for (const Volume& v : {single_bond(), make_rect(2, 2), six_bond_volume()}) {
    ASSERT_LE(v.num_bonds(), 6u);
    for (const ModelParams& p : {params_of(2, 1, kLog2), params_of(3, 2, 0.37), params_of(1, 1, 1.9)}) {
      if (v.num_sites() > 4 && p.colours() > 3) continue;
      const int colours = p.colours();
      const int q = p.q_int();
      const std::size_t m = v.num_bonds();
      const auto states = static_cast<std::size_t>(std::pow(colours, v.num_sites()));
      std::vector<double> by_bonds(1u << m, 0.0);
      for (std::size_t s = 0; s < states; ++s) {
        const SpinConfig sigma = decode_spins(s, v.num_sites(), colours);
        double by_spin = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
          const double w = std::exp(joint_log_weight(v, {sigma, mask_to_config(mask, m)}, p));
          by_spin += w;
          by_bonds[mask] += w;
        }
        const double potts = std::exp(p.beta * matched_pairs(v, sigma, q));
        EXPECT_NEAR(by_spin / potts, 1.0, 1e-12);
      }
      for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        const BondConfig x = mask_to_config(mask, m);
        int present = 0;
        for (auto b : x) present += b;
        const double pb = p.p_beta();
        const double rc = std::pow(pb, present) * std::pow(1 - pb, static_cast<double>(m - present)) *
                          compatible_count(v, x, q, p.r_int());
        EXPECT_NEAR(by_bonds[mask] / (std::exp(p.beta * m) * rc), 1.0, 1e-12);
      }
    }
  }
}

TEST(Coupling, BondSamplerRespectsSpins) {
  const Volume v = make_rect(3, 2);
  CounterRng rng(11);
  const SpinConfig sigma = {1, 1, 3, 1, 2, 3};
  for (int t = 0; t < 200; ++t) {
    EXPECT_TRUE(is_compatible(v, {sigma, sample_bonds_given_spins(v, sigma, params_of(2, 1, 0.9), rng)}, 2));
    const BondConfig zero = sample_bonds_given_spins(v, sigma, params_of(2, 1, 0.0), rng);
    EXPECT_EQ(zero, BondConfig(v.num_bonds(), 0));
  }
  const BondConfig all = sample_bonds_given_spins(v, sigma, params_of(2, 1, 800.0), rng);
  for (std::size_t b = 0; b < v.num_bonds(); ++b) {
    const Bond& bond = v.bonds()[b];
    const int a = sigma[v.site_index(bond.lo)];
    EXPECT_EQ(all[b], (a == sigma[v.site_index(bond.hi())] && a <= 2) ? 1 : 0);
  }
}

TEST(Coupling, BondInclusionFrequency) {
  CounterRng rng(3);
  const int n = 100000;
  int hits = 0;
  for (int t = 0; t < n; ++t) hits += sample_bonds_given_spins(single_bond(), {1, 1}, params_of(2, 1, kLog2), rng)[0];
  EXPECT_NEAR(hits / double(n), 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(Coupling, SpinSamplerComponents) {
  const Volume v = make_rect(3, 3);
  CounterRng rng(5);
  const ModelParams p = params_of(2, 3, 1.0);
  for (int t = 0; t < 100; ++t) {
    const SpinConfig s = sample_spins_given_bonds(v, BondConfig(v.num_bonds(), 1), p, rng);
    for (int c : s) EXPECT_EQ(c, s[0]);
    EXPECT_LE(s[0], 2);
  }
  // Frame colouring: the whole boundary ring takes colour k.
  const Volume w = make_window(1);
  for (int t = 0; t < 50; ++t) {
    const SpinConfig s = sample_spins_given_bonds(w, BondConfig(w.num_bonds(), 0), p, rng, 2);
    for (Site b : w.boundary_sites()) EXPECT_EQ(s[w.site_index(b)], 2);
  }
  std::map<int, int> freq;
  const int n = 60000;
  for (int t = 0; t < n; ++t) ++freq[sample_spins_given_bonds(make_rect(3, 1), {0, 0}, p, rng)[1]];
  for (int c = 1; c <= 5; ++c) EXPECT_NEAR(freq[c] / double(n), 0.2, 3 * std::sqrt(0.16 / n));

  int same = 0;
  for (int t = 0; t < n; ++t) {
    const SpinConfig s = sample_spins_given_bonds(single_bond(), {1}, params_of(2, 1, 1.0), rng);
    same += (s[0] == 1 && s[1] == 1) ? 1 : 0;
  }
  EXPECT_NEAR(same / double(n), 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(Coupling, SpinGraphShapes) {
  const SpinGraph t = SpinGraph::torus(3, 4);
  EXPECT_EQ(t.num_sites(), 12);
  EXPECT_EQ(t.edges().size(), 24u);
  for (const auto& nb : t.adjacency()) EXPECT_EQ(nb.size(), 4u);
  const SpinGraph h = SpinGraph::homogeneous(make_rect(2, 1), 1);
  EXPECT_EQ(h.ghost_links(), (std::vector<int>{3, 3}));
  EXPECT_EQ(h.satisfied({1, 1}, 2), 7);
  EXPECT_EQ(h.satisfied({2, 2}, 2), 1);
  EXPECT_THROW(SpinGraph::torus(2, 5), std::invalid_argument);
}

TEST(Coupling, ClusterStepInfiniteTemperature) {
  const SpinGraph g = SpinGraph::free(make_rect(2, 2));
  CounterRng rng(9);
  const ModelParams p = params_of(2, 1, 0.0);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  SpinConfig s = {1, 1, 1, 1};
  for (int t = 0; t < n; ++t) {
    s = cluster_step(g, {1, 1, 1, 1}, p, rng);
    ++counts[s[2] - 1];
  }
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / 3, 3 * std::sqrt(2.0 / 9 / n));
}

TEST(Coupling, ClusterStepStationarySingleBond) {
  const SpinGraph g = SpinGraph::free(single_bond());
  const ModelParams p = params_of(2, 1, kLog2);
  CounterRng rng(21);
  SpinConfig s = {3, 2};
  std::vector<double> freq(9, 0.0);
  const int n = 200000;
  for (int t = 0; t < n; ++t) {
    s = cluster_step(g, s, p, rng);
    freq[encode_spins(s, 3)] += 1.0;
  }
  // Z = 2 matched visible configurations of weight 2 plus 7 of weight 1.
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    const SpinConfig c = decode_spins(i, 2, 3);
    const double expected = n * ((c[0] == c[1] && c[0] <= 2) ? 2.0 : 1.0) / 11.0;
    chi2 += (freq[i] - expected) * (freq[i] - expected) / expected;
  }
  EXPECT_NEAR(freq[encode_spins({1, 1}, 3)] / n, 2.0 / 11, 0.005);
  EXPECT_LT(chi2, 26.1);  // chi-square, 8 degrees of freedom, p = 0.001
}

TEST(Coupling, ClusterKernelDetailedBalance) {
  std::vector<SpinGraph> graphs = {SpinGraph::free(single_bond()), SpinGraph::free(make_rect(3, 1)),
                                   SpinGraph::homogeneous(make_rect(1, 1), 1),
                                   SpinGraph::homogeneous(single_bond(), 2)};
  for (const SpinGraph& g : graphs) {
    for (const ModelParams& p : {params_of(2, 1, kLog2), params_of(3, 2, 1.3)}) {
      const auto kernel = cluster_kernel(g, p);
      const auto w = boltzmann_weights(g, p);
      double z = 0;
      for (double x : w) z += x;
      for (std::size_t j = 0; j < w.size(); ++j) {
        double row = 0.0, flow = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          row += kernel[j][i];
          flow += w[i] / z * kernel[i][j];
          EXPECT_NEAR(w[i] * kernel[i][j], w[j] * kernel[j][i], 1e-12 * z);
        }
        EXPECT_NEAR(row, 1.0, 1e-12);
        EXPECT_NEAR(flow, w[j] / z, 1e-12);
      }
    }
  }
  EXPECT_EQ(cluster_kernel(SpinGraph::free(single_bond()), params_of(2, 1, kLog2)).size(), 9u);
}
