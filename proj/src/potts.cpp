#include "ivpotts/potts.hpp"

#include <cmath>
#include <string>

namespace ivp {

double ModelParams::p_beta() const { return -std::expm1(-beta); }

void ModelParams::validate() const {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("params.q must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("params.r must be nonnegative");
  if (!(beta >= 0.0)) throw std::invalid_argument("params.beta must be nonnegative");
}

int ModelParams::q_int() const {
  if (q < 1.0 || q != std::floor(q)) throw std::invalid_argument("params.q must be a positive integer");
  return static_cast<int>(q);
}

int ModelParams::r_int() const {
  if (r < 0.0 || r != std::floor(r)) throw std::invalid_argument("params.r must be a nonnegative integer");
  return static_cast<int>(r);
}

void check_spins(const Volume& v, const SpinConfig& sigma, int colours) {
  if (sigma.size() != v.num_sites()) throw std::invalid_argument("spin configuration size mismatch");
  for (int c : sigma)
    if (c < 1 || c > colours) throw std::invalid_argument("colour " + std::to_string(c) + " out of range");
}

int energy_interior(const Volume& v, const SpinConfig& sigma, int q) {
  if (sigma.size() != v.num_sites()) throw std::invalid_argument("spin configuration size mismatch");
  int h = 0;
  for (const Bond& b : v.bonds()) {
    const int a = sigma[v.site_index(b.lo)];
    const int c = sigma[v.site_index(b.hi())];
    if (a < 1 || c < 1) throw std::invalid_argument("colour out of range");
    if (a == c && a <= q) --h;
  }
  return h;
}

int energy_boundary(const Volume& v, const SpinConfig& sigma, int k, int q) {
  if (k < 1 || k > q) throw std::invalid_argument("boundary colour must be visible");
  if (sigma.size() != v.num_sites()) throw std::invalid_argument("spin configuration size mismatch");
  int h = 0;
  for (std::size_t i = 0; i < v.num_sites(); ++i) {
    if (sigma[i] != k) continue;
    for (Site t : neighbours(v.sites()[i]))
      if (!v.contains(t)) --h;
  }
  return h;
}

std::vector<double> interaction_histogram(const Volume& v, int q, int r, std::optional<int> k,
                                          std::uint64_t cap) {
  const int colours = q + r;
  if (q < 1 || r < 0) throw std::invalid_argument("need q >= 1 and r >= 0");
  if (k && (*k < 1 || *k > q)) throw std::invalid_argument("boundary colour must be visible");
  const std::size_t n = v.num_sites();
  double total = std::pow(static_cast<double>(colours), static_cast<double>(n));
  if (total > static_cast<double>(cap))
    throw CapExceeded("spin enumeration of " + std::to_string(n) + " sites exceeds cap");

  std::vector<std::array<int, 2>> edges;
  for (const Bond& b : v.bonds())
    edges.push_back({static_cast<int>(v.site_index(b.lo)), static_cast<int>(v.site_index(b.hi()))});
  std::vector<int> outside(n, 0);
  if (k)
    for (std::size_t i = 0; i < n; ++i)
      for (Site t : neighbours(v.sites()[i]))
        if (!v.contains(t)) ++outside[i];

  std::size_t max_m = edges.size();
  for (int o : outside) max_m += static_cast<std::size_t>(o);
  std::vector<double> counts(max_m + 1, 0.0);
  std::vector<int> sigma(n, 1);
  while (true) {
    std::size_t m = 0;
    for (const auto& e : edges)
      if (sigma[e[0]] == sigma[e[1]] && sigma[e[0]] <= q) ++m;
    if (k)
      for (std::size_t i = 0; i < n; ++i)
        if (sigma[i] == *k) m += static_cast<std::size_t>(outside[i]);
    counts[m] += 1.0;
    std::size_t i = 0;
    while (i < n && sigma[i] == colours) sigma[i++] = 1;
    if (i == n) break;
    ++sigma[i];
  }
  return counts;
}

LogValue log_partition_from_histogram(const std::vector<double>& counts, double beta) {
  LogSum acc;
  for (std::size_t m = 0; m < counts.size(); ++m)
    if (counts[m] > 0) acc.add(std::log(counts[m]) + beta * static_cast<double>(m));
  return acc.value();
}

LogValue log_partition_free(const Volume& v, const ModelParams& params, std::uint64_t cap) {
  params.validate();
  return log_partition_from_histogram(
      interaction_histogram(v, params.q_int(), params.r_int(), std::nullopt, cap), params.beta);
}

LogValue log_partition_homogeneous(const Volume& v, const ModelParams& params, int k,
                                   std::uint64_t cap) {
  params.validate();
  return log_partition_from_histogram(interaction_histogram(v, params.q_int(), params.r_int(), k, cap),
                                      params.beta);
}

}  // namespace ivp
