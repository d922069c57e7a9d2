#include <gtest/gtest.h>

#include <cmath>

#include "ivpotts/potts.hpp"

using namespace ivp;

namespace {
const double kLog2 = std::log(2.0);

// Direct q-Potts enumeration, independent of the histogram code path.
double direct_potts(const Volume& v, int q, double beta) {
  const std::size_t n = v.num_sites();
  std::vector<int> s(n, 0);
  double z = 0.0;
  while (true) {
    int m = 0;
    for (const Bond& b : v.bonds()) m += s[v.site_index(b.lo)] == s[v.site_index(b.hi())];
    z += std::exp(beta * m);
    std::size_t i = 0;
    while (i < n && s[i] == q - 1) s[i++] = 0;
    if (i == n) break;
    ++s[i];
  }
  return std::log(z);
}
}  // namespace

TEST(Potts, Energies) {
  const Volume sq = make_rect(2, 2);
  EXPECT_EQ(energy_interior(sq, {1, 1, 1, 1}, 2), -4);
  EXPECT_EQ(energy_interior(sq, {3, 3, 3, 3}, 2), 0);
  EXPECT_EQ(energy_interior(make_rect(1, 2), {1, 2}, 2), 0);
  const Volume w0 = make_window(0);
  EXPECT_EQ(energy_boundary(w0, {1}, 1, 2), -4);
  EXPECT_EQ(energy_boundary(w0, {3}, 1, 2), 0);
  EXPECT_EQ(energy_boundary(w0, {2}, 1, 2), 0);
  EXPECT_THROW(energy_boundary(w0, {1}, 3, 2), std::invalid_argument);
}

TEST(Potts, FreePartition) {
  ModelParams p{2, 1, kLog2};
  EXPECT_NEAR(log_partition_free(make_window(0), p), std::log(3.0), 1e-14);
  EXPECT_NEAR(log_partition_free(make_rect(1, 2), p), std::log(11.0), 1e-14);
  ModelParams one{1, 0, 0.7};
  EXPECT_NEAR(log_partition_free(make_rect(1, 2), one), 0.7, 1e-14);
}

TEST(Potts, HomogeneousPartition) {
  ModelParams p{2, 1, kLog2};
  EXPECT_NEAR(log_partition_homogeneous(make_window(0), p, 1), std::log(18.0), 1e-14);
  EXPECT_EQ(log_partition_homogeneous(make_window(1), p, 1),
            log_partition_homogeneous(make_window(1), p, 2));
  ModelParams one{1, 0, 0.9};
  EXPECT_NEAR(log_partition_homogeneous(make_window(0), one, 1), 4 * 0.9, 1e-14);
}

TEST(Potts, ReducesToStandardPotts) {
  for (int q : {2, 3})
    for (double beta : {0.2, 1.1}) {
      ModelParams p{static_cast<double>(q), 0, beta};
      const Volume v = make_rect(2, 3);
      EXPECT_NEAR(log_partition_free(v, p), direct_potts(v, q, beta), 1e-12);
    }
}

TEST(Potts, MonotoneInBeta) {
  const Volume v = make_rect(2, 3);
  double prev_free = -1e300, prev_hom = -1e300;
  for (double beta = 0.0; beta <= 3.0; beta += 0.25) {
    ModelParams p{2, 2, beta};
    const double f = log_partition_free(v, p), h = log_partition_homogeneous(v, p, 1);
    EXPECT_GE(f, prev_free);
    EXPECT_GE(h, prev_hom);
    prev_free = f;
    prev_hom = h;
  }
}

TEST(Potts, CapAndValidation) {
  ModelParams p{2, 1, 1.0};
  EXPECT_THROW(log_partition_free(make_window(2), p, 1000), CapExceeded);
  ModelParams bad{0, 1, 1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(check_spins(make_window(0), {4}, 3), std::invalid_argument);
}
