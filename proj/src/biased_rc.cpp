#include "ivpotts/biased_rc.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <string>
#include <thread>

#include "ivpotts/union_find.hpp"

namespace ivp {

namespace {

// a * log(x) with the convention 0 * log(0) = 0.
double xlogy(int a, double x) { return a == 0 ? 0.0 : a * std::log(x); }

std::array<int, 2> ends(const Volume& v, const Bond& b) {
  const auto i = v.site_index(b.lo), j = v.site_index(b.hi());
  if (i == Volume::npos || j == Volume::npos)
    throw std::invalid_argument("bond " + to_string(b) + " not in volume");
  return {static_cast<int>(i), static_cast<int>(j)};
}

}  // namespace

ComponentCounts component_counts(const Volume& v, const BondConfig& x) {
  if (x.size() != v.num_bonds()) throw std::invalid_argument("bond configuration size mismatch");
  const int n = static_cast<int>(v.num_sites());
  UnionFind uf(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> touched(static_cast<std::size_t>(n), 0);
  int merges = 0;
  for (std::size_t e = 0; e < x.size(); ++e) {
    if (!x[e]) continue;
    const auto [i, j] = ends(v, v.bonds()[e]);
    touched[i] = touched[j] = 1;
    if (uf.unite(i, j)) ++merges;
  }
  ComponentCounts c;
  int covered = 0;
  for (auto t : touched) covered += t;
  c.kappa0 = n - covered;
  c.kappa1 = covered - merges;
  return c;
}

LogValue rc_log_weight(int n_present, int n_absent, ComponentCounts k, double p, double q, double r) {
  const double w = xlogy(n_present, p) + xlogy(n_absent, 1.0 - p) + xlogy(k.kappa0, q + r) +
                   xlogy(k.kappa1, q);
  return std::isnan(w) ? kNegInf : w;
}

LogValue rc_log_weight(const Volume& v, const BondConfig& x, double p, double q, double r) {
  int present = 0;
  for (auto b : x) present += b ? 1 : 0;
  return rc_log_weight(present, static_cast<int>(x.size()) - present, component_counts(v, x), p, q, r);
}

LogValue RcStatistics::log_partition(double p, double q, double r) const {
  LogSum acc;
  for (const auto& e : entries)
    acc.add(std::log(e.count) +
            rc_log_weight(e.present, num_bonds - e.present, {e.kappa0, e.kappa1}, p, q, r));
  return acc.value();
}

RcStatistics rc_statistics_graph(int n, const std::vector<std::array<int, 2>>& edges,
                                 const std::vector<std::array<int, 2>>& fixed_edges, int fixed_counted,
                                 int num_bonds, std::uint64_t cap, int threads) {
  const int nf = static_cast<int>(edges.size());
  if (nf >= 63 || (std::uint64_t{1} << nf) > cap)
    throw CapExceeded("bond enumeration over " + std::to_string(nf) + " free bonds exceeds cap");
  const int nfix = fixed_counted;

  UnionFind base(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> base_touched(static_cast<std::size_t>(n), 0);
  int base_merges = 0;
  for (const auto& [i, j] : fixed_edges) {
    base_touched[i] = base_touched[j] = 1;
    if (base.unite(i, j)) ++base_merges;
  }
  // Flatten the base partition so that copies start fully compressed.
  std::vector<int> base_parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) base_parent[i] = base.find(i);

  const int dim0 = n + 1, dim1 = n / 2 + 2;
  auto slot = [&](int present, int k0, int k1) { return (present * dim0 + k0) * dim1 + k1; };
  const std::size_t table = static_cast<std::size_t>(nf + 1) * dim0 * dim1;
  const std::uint64_t total = std::uint64_t{1} << nf;
  threads = std::max(1, threads);
  std::vector<std::vector<std::uint64_t>> counts(static_cast<std::size_t>(threads),
                                                 std::vector<std::uint64_t>(table, 0));

  auto worker = [&](int t) {
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> touched(static_cast<std::size_t>(n));
    auto find = [&](int i) {
      while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
      }
      return i;
    };
    auto& local = counts[static_cast<std::size_t>(t)];
    const std::uint64_t lo = total * static_cast<std::uint64_t>(t) / threads;
    const std::uint64_t hi = total * static_cast<std::uint64_t>(t + 1) / threads;
    for (std::uint64_t mask = lo; mask < hi; ++mask) {
      std::copy(base_parent.begin(), base_parent.end(), parent.begin());
      std::copy(base_touched.begin(), base_touched.end(), touched.begin());
      int merges = base_merges;
      int present = nfix;
      for (int e = 0; e < nf; ++e) {
        if (!((mask >> e) & 1U)) continue;
        ++present;
        const int i = edges[e][0], j = edges[e][1];
        touched[i] = touched[j] = 1;
        const int a = find(i), b = find(j);
        if (a != b) {
          parent[a] = b;
          ++merges;
        }
      }
      int covered = 0;
      for (auto c : touched) covered += c;
      ++local[slot(present - nfix, n - covered, covered - merges)];
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  RcStatistics stats;
  stats.num_bonds = num_bonds;
  for (int pf = 0; pf <= nf; ++pf)
    for (int k0 = 0; k0 < dim0; ++k0)
      for (int k1 = 0; k1 < dim1; ++k1) {
        std::uint64_t c = 0;
        for (const auto& local : counts) c += local[slot(pf, k0, k1)];
        if (c) stats.entries.push_back({pf + nfix, k0, k1, static_cast<double>(c)});
      }
  return stats;
}

RcStatistics rc_statistics(const Volume& v, const std::vector<Bond>& free_bonds,
                           const std::vector<Bond>& fixed_present, std::uint64_t cap, int threads) {
  std::vector<std::array<int, 2>> edges, fixed;
  for (const Bond& b : free_bonds) edges.push_back(ends(v, b));
  for (const Bond& b : fixed_present) fixed.push_back(ends(v, b));
  return rc_statistics_graph(static_cast<int>(v.num_sites()), edges, fixed,
                             static_cast<int>(fixed.size()), static_cast<int>(v.num_bonds()), cap,
                             threads);
}

std::vector<Bond> class_free_bonds(const Volume& v, BoundaryClass bc) {
  switch (bc) {
    case BoundaryClass::plain: return v.bonds();
    case BoundaryClass::disordered: return v.inner_bonds();
    case BoundaryClass::ordered: {
      const auto frozen = v.frozen_bonds();
      std::vector<Bond> out;
      std::set_difference(v.bonds().begin(), v.bonds().end(), frozen.begin(), frozen.end(),
                          std::back_inserter(out));
      return out;
    }
  }
  return {};
}

std::vector<Bond> class_fixed_bonds(const Volume& v, BoundaryClass bc) {
  return bc == BoundaryClass::ordered ? v.frozen_bonds() : std::vector<Bond>{};
}

bool in_class(const Volume& v, const BondConfig& x, BoundaryClass bc) {
  if (x.size() != v.num_bonds()) return false;
  if (bc == BoundaryClass::plain) return true;
  const auto free = class_free_bonds(v, bc);
  const auto fixed = class_fixed_bonds(v, bc);
  for (std::size_t e = 0; e < x.size(); ++e) {
    const Bond& b = v.bonds()[e];
    if (std::binary_search(free.begin(), free.end(), b)) continue;
    const bool must = std::binary_search(fixed.begin(), fixed.end(), b);
    if (static_cast<bool>(x[e]) != must) return false;
  }
  return true;
}

RcStatistics rc_statistics(const Volume& v, BoundaryClass bc, std::uint64_t cap, int threads) {
  return rc_statistics(v, class_free_bonds(v, bc), class_fixed_bonds(v, bc), cap, threads);
}

LogValue log_partition(const Volume& v, double p, double q, double r, std::uint64_t cap) {
  return rc_statistics(v, BoundaryClass::plain, cap).log_partition(p, q, r);
}

LogValue log_partition_class(const Volume& v, double p, double q, double r, BoundaryClass bc,
                             std::uint64_t cap, int threads) {
  return rc_statistics(v, bc, cap, threads).log_partition(p, q, r);
}

LogValue log_partition_bc(int n, double p, double q, double r, BoundaryClass bc, std::uint64_t cap,
                          int threads) {
  return log_partition_class(make_window(n + 1), p, q, r, bc, cap, threads);
}

double plain_identity_residual(const Volume& v, const ModelParams& params, std::uint64_t cap) {
  const double lhs = log_partition_free(v, params, cap);
  const double rhs = params.beta * static_cast<double>(v.num_bonds()) +
                     log_partition(v, params.p_beta(), params.q, params.r, cap);
  return std::abs(lhs - rhs);
}

double disordered_identity_residual(int n, const ModelParams& params, std::uint64_t cap, int threads) {
  const Volume inner = make_window(n), outer = make_window(n + 1);
  const double lhs = log_partition_free(inner, params, cap);
  const double added_sites = static_cast<double>(outer.num_sites() - inner.num_sites());
  const double rhs = -added_sites * std::log(params.q + params.r) +
                     params.beta * static_cast<double>(outer.num_bonds()) +
                     log_partition_bc(n, params.p_beta(), params.q, params.r, BoundaryClass::disordered,
                                      cap, threads);
  return std::abs(lhs - rhs);
}

double ordered_identity_residual(int n, const ModelParams& params, int k, std::uint64_t cap,
                                 int threads) {
  const Volume inner = make_window(n), outer = make_window(n + 1);
  const double lhs = log_partition_homogeneous(inner, params, k, cap);
  const double ring = static_cast<double>(outer.frozen_bonds().size());
  const double rhs = -std::log(params.q) - ring * std::log(std::expm1(params.beta)) +
                     params.beta * static_cast<double>(outer.num_bonds()) +
                     log_partition_bc(n, params.p_beta(), params.q, params.r, BoundaryClass::ordered,
                                      cap, threads);
  return std::abs(lhs - rhs);
}

IdentityResiduals identity_checks(int n, const ModelParams& params, std::uint64_t cap, int threads) {
  IdentityResiduals res;
  res.plain = plain_identity_residual(make_window(n), params, cap);
  res.disordered = disordered_identity_residual(n, params, cap, threads);
  res.ordered = ordered_identity_residual(n, params, 1, cap, threads);
  return res;
}

}  // namespace ivp
