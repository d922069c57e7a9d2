#include "ivpotts/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ivpotts/union_find.hpp"

#ifndef IVPOTTS_VERSION
#define IVPOTTS_VERSION "unknown"
#endif

namespace ivp {

namespace {

int satisfied_delta(const SpinGraph& g, const SpinConfig& sigma, int i, int to, int q) {
  const int from = sigma[i];
  int d = 0;
  for (int j : g.adjacency()[i]) {
    if (sigma[j] == to && to <= q) ++d;
    if (sigma[j] == from && from <= q) --d;
  }
  const int k = g.ghost_colour();
  if (k != 0) d += g.ghost_links()[i] * ((to == k) - (from == k));
  return d;
}

double acceptance(double beta, int delta) { return delta >= 0 ? 1.0 : std::exp(beta * delta); }

// Largest component and isolated-site counts of a bond set on n vertices.
std::pair<int, int> component_stats(int n, const std::vector<std::array<int, 2>>& edges,
                                    const std::vector<std::uint8_t>& present) {
  UnionFind uf(n);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (present[e]) uf.unite(edges[e][0], edges[e][1]);
  int largest = 0;
  int isolated = 0;
  for (int i = 0; i < n; ++i) {
    const int s = uf.set_size(i);
    largest = std::max(largest, s);
    if (s == 1) ++isolated;
  }
  return {largest, isolated};
}

void record(ObservableSeries& out, int sweep, const SpinGraph& g, const SpinConfig& sigma, int q,
            int colours, int largest, int isolated) {
  const double n = g.num_sites();
  out.sweep.push_back(sweep);
  out.energy_per_site.push_back(-g.satisfied(sigma, q) / n);
  std::vector<int> counts(colours, 0);
  for (int c : sigma) ++counts[c - 1];
  for (int c = 0; c < colours; ++c) out.colour_fractions[c].push_back(counts[c] / n);
  out.largest_component_fraction.push_back(largest / n);
  out.isolated_fraction.push_back(isolated / n);
}

BoundaryClass rc_class(ChainBoundary b) {
  switch (b) {
    case ChainBoundary::disordered: return BoundaryClass::disordered;
    case ChainBoundary::ordered: return BoundaryClass::ordered;
    default: return BoundaryClass::plain;
  }
}

}  // namespace

SpinConfig metropolis_step(const SpinGraph& g, const SpinConfig& sigma, const ModelParams& params,
                           CounterRng& rng) {
  const int colours = params.colours();
  const int n = g.num_sites();
  if (static_cast<int>(sigma.size()) != n) throw std::invalid_argument("spin configuration size mismatch");
  SpinConfig out = sigma;
  if (colours < 2 || n == 0) return out;
  const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  int to = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(colours - 1)));
  if (to >= sigma[i]) ++to;
  const int d = satisfied_delta(g, sigma, i, to, params.q_int());
  if (d >= 0 || rng.uniform() < acceptance(params.beta, d)) out[i] = to;
  return out;
}

std::vector<std::vector<double>> metropolis_kernel(const SpinGraph& g, const ModelParams& params) {
  const int colours = params.colours();
  const int q = params.q_int();
  const int n = g.num_sites();
  const double states_d = std::pow(static_cast<double>(colours), n);
  if (states_d > 4096) throw CapExceeded("too many spin configurations for an exact kernel");
  const auto states = static_cast<std::size_t>(states_d);
  std::vector<std::vector<double>> kernel(states, std::vector<double>(states, 0.0));
  for (std::size_t s = 0; s < states; ++s) {
    const SpinConfig sigma = decode_spins(s, n, colours);
    double stay = 1.0;
    if (colours >= 2)
      for (int i = 0; i < n; ++i)
        for (int to = 1; to <= colours; ++to) {
          if (to == sigma[i]) continue;
          const double pr = acceptance(params.beta, satisfied_delta(g, sigma, i, to, q)) / n / (colours - 1);
          SpinConfig tau = sigma;
          tau[i] = to;
          kernel[s][encode_spins(tau, colours)] += pr;
          stay -= pr;
        }
    kernel[s][s] += stay;
  }
  return kernel;
}

RcState::RcState(const Volume& v, BoundaryClass bc) : v_(v), bc_(bc) {
  const std::size_t m = v.num_bonds();
  ends_.resize(m);
  incident_.assign(v.num_sites(), {});
  for (std::size_t b = 0; b < m; ++b) {
    const Bond& bond = v.bonds()[b];
    ends_[b] = {static_cast<int>(v.site_index(bond.lo)), static_cast<int>(v.site_index(bond.hi()))};
    incident_[ends_[b][0]].push_back(static_cast<int>(b));
    incident_[ends_[b][1]].push_back(static_cast<int>(b));
  }
  is_free_.assign(m, 0);
  for (const Bond& b : class_free_bonds(v, bc)) is_free_[v.bond_index(b)] = 1;
  for (std::size_t b = 0; b < m; ++b)
    if (is_free_[b]) free_.push_back(static_cast<int>(b));
  x_.assign(m, 0);
  for (const Bond& b : class_fixed_bonds(v, bc)) x_[v.bond_index(b)] = 1;
  mark_.assign(v.num_sites(), 0);
}

void RcState::set_bonds(const BondConfig& x) {
  if (!in_class(v_, x, bc_)) throw std::invalid_argument("bond configuration outside the boundary class");
  x_ = x;
}

int RcState::component_size(int i, int skip) const {
  ++epoch_;
  std::vector<int> stack = {i};
  mark_[i] = epoch_;
  int size = 0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    ++size;
    for (int b : incident_[u]) {
      if (b == skip || !x_[b]) continue;
      const int w = ends_[b][0] == u ? ends_[b][1] : ends_[b][0];
      if (mark_[w] != epoch_) {
        mark_[w] = epoch_;
        stack.push_back(w);
      }
    }
  }
  return size;
}

double RcState::log_insertion_odds(int b, const ModelParams& params) const {
  const double p = params.p_beta();
  const double base = std::log(p) - std::log1p(-p);
  const int su = component_size(ends_[b][0], b);
  if (mark_[ends_[b][1]] == epoch_) return base;
  const int sv = component_size(ends_[b][1], b);
  const auto weight = [&](int s) { return s == 1 ? std::log(params.q + params.r) : std::log(params.q); };
  return base + std::log(params.q) - weight(su) - weight(sv);
}

void RcState::heatbath_update(int b, const ModelParams& params, CounterRng& rng) {
  if (b < 0 || b >= static_cast<int>(x_.size())) throw std::out_of_range("bond index out of range");
  if (!is_free_[b]) throw std::logic_error("attempt to toggle a frozen bond");
  const double lo = log_insertion_odds(b, params);
  const double pr = 1.0 / (1.0 + std::exp(-lo));
  x_[b] = rng.uniform() < pr ? 1 : 0;
}

void rc_heatbath_step(RcState& state, const ModelParams& params, CounterRng& rng) {
  const auto& free = state.free_bonds();
  if (free.empty()) return;
  state.heatbath_update(free[rng.below(free.size())], params, rng);
}

std::vector<double> rc_class_weights(const RcState& state, const ModelParams& params) {
  const auto& free = state.free_bonds();
  if (free.size() > 16) throw CapExceeded("too many free bonds for exact weights");
  std::vector<double> w(std::size_t{1} << free.size());
  BondConfig x = state.bonds();
  for (std::size_t s = 0; s < w.size(); ++s) {
    for (std::size_t j = 0; j < free.size(); ++j) x[free[j]] = (s >> j) & 1u;
    w[s] = std::exp(rc_log_weight(state.volume(), x, params.p_beta(), params.q, params.r));
  }
  return w;
}

std::vector<std::vector<double>> heatbath_kernel(const RcState& state, const ModelParams& params) {
  const auto& free = state.free_bonds();
  if (free.size() > 12) throw CapExceeded("too many free bonds for an exact kernel");
  const std::size_t states = std::size_t{1} << free.size();
  std::vector<std::vector<double>> kernel(states, std::vector<double>(states, 0.0));
  RcState work = state;
  BondConfig x = state.bonds();
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t j = 0; j < free.size(); ++j) x[free[j]] = (s >> j) & 1u;
    work.set_bonds(x);
    for (std::size_t j = 0; j < free.size(); ++j) {
      const double pr = 1.0 / (1.0 + std::exp(-work.log_insertion_odds(free[j], params)));
      const double share = 1.0 / static_cast<double>(free.size());
      kernel[s][s | (std::size_t{1} << j)] += share * pr;
      kernel[s][s & ~(std::size_t{1} << j)] += share * (1.0 - pr);
    }
  }
  if (free.empty()) kernel[0][0] = 1.0;
  return kernel;
}

std::string to_string(ChainBoundary b) {
  switch (b) {
    case ChainBoundary::free: return "free";
    case ChainBoundary::colour: return "colour";
    case ChainBoundary::disordered: return "disordered";
    case ChainBoundary::ordered: return "ordered";
  }
  return "";
}

std::string to_string(Sampler s) {
  switch (s) {
    case Sampler::metropolis: return "metropolis";
    case Sampler::cluster: return "cluster";
    case Sampler::heatbath: return "heatbath";
  }
  return "";
}

ChainBoundary parse_boundary(const std::string& s) {
  for (auto b : {ChainBoundary::free, ChainBoundary::colour, ChainBoundary::disordered, ChainBoundary::ordered})
    if (to_string(b) == s) return b;
  throw std::invalid_argument("unknown boundary '" + s + "'");
}

Sampler parse_sampler(const std::string& s) {
  for (auto m : {Sampler::metropolis, Sampler::cluster, Sampler::heatbath})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown sampler '" + s + "'");
}

void ChainConfig::validate() const {
  params.validate();
  const int q = params.q_int();
  params.r_int();
  if (sweeps < 0) throw std::invalid_argument("sweeps must be nonnegative");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be nonnegative");
  if (thin < 1) throw std::invalid_argument("thin must be positive");
  const bool rc_boundary = boundary == ChainBoundary::disordered || boundary == ChainBoundary::ordered;
  if (rc_boundary && sampler != Sampler::heatbath)
    throw std::invalid_argument("boundary " + to_string(boundary) + " requires the heatbath sampler");
  if (boundary == ChainBoundary::colour && sampler == Sampler::heatbath)
    throw std::invalid_argument("boundary colour requires a spin sampler");
  if ((boundary == ChainBoundary::colour || boundary == ChainBoundary::ordered) && (colour < 1 || colour > q))
    throw std::invalid_argument("colour must be a visible colour");
  if (torus) {
    if (boundary != ChainBoundary::free || sampler == Sampler::heatbath)
      throw std::invalid_argument("torus requires free boundary and a spin sampler");
    if ((*torus)[0] < 3 || (*torus)[1] < 3) throw std::invalid_argument("torus sides must be at least 3");
  } else if (volume.num_sites() == 0) {
    throw std::invalid_argument("volume is empty");
  }
  if (start_colour < 0 || start_colour > params.colours())
    throw std::invalid_argument("start_colour out of range");
}

std::string code_version() { return IVPOTTS_VERSION; }

ChainResult run_chain(const ChainConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams& params = cfg.params;
  const int q = params.q_int();
  const int colours = params.colours();
  CounterRng rng(cfg.seed, cfg.stream);

  ChainResult result;
  RunManifest& m = result.manifest;
  m.seed = cfg.seed;
  m.stream = cfg.stream;
  m.params = params;
  m.boundary = to_string(cfg.boundary);
  m.colour = cfg.colour;
  m.sampler = to_string(cfg.sampler);
  m.sweeps = cfg.sweeps;
  m.burn_in = cfg.burn_in;
  m.thin = cfg.thin;
  m.code_version = code_version();

  ObservableSeries& out = result.series;
  out.colour_fractions.assign(colours, {});

  if (cfg.sampler == Sampler::heatbath) {
    m.geometry = "volume";
    const Volume& v = cfg.volume;
    m.num_sites = static_cast<int>(v.num_sites());
    RcState state(v, rc_class(cfg.boundary));
    if (cfg.boundary == ChainBoundary::ordered) state.set_bonds(BondConfig(v.num_bonds(), 1));
    const SpinGraph g = SpinGraph::free(v);
    const int frame = cfg.boundary == ChainBoundary::ordered ? cfg.colour : 0;
    const std::size_t per_sweep = std::max<std::size_t>(1, state.free_bonds().size());
    for (int sweep = 1; sweep <= cfg.burn_in + cfg.sweeps; ++sweep) {
      for (std::size_t u = 0; u < per_sweep; ++u) rc_heatbath_step(state, params, rng);
      if (sweep <= cfg.burn_in || (sweep - cfg.burn_in) % cfg.thin != 0) continue;
      const SpinConfig sigma = sample_spins_given_bonds(v, state.bonds(), params, rng, frame);
      const auto [largest, isolated] = component_stats(g.num_sites(), g.edges(), state.bonds());
      record(out, sweep - cfg.burn_in, g, sigma, q, colours, largest, isolated);
    }
  } else {
    SpinGraph g;
    if (cfg.torus) {
      g = SpinGraph::torus((*cfg.torus)[0], (*cfg.torus)[1]);
      m.geometry = "torus " + std::to_string((*cfg.torus)[0]) + "x" + std::to_string((*cfg.torus)[1]);
    } else {
      g = cfg.boundary == ChainBoundary::colour ? SpinGraph::homogeneous(cfg.volume, cfg.colour)
                                                : SpinGraph::free(cfg.volume);
      m.geometry = "volume";
    }
    const int n = g.num_sites();
    m.num_sites = n;
    SpinConfig sigma(n, cfg.start_colour);
    if (cfg.start_colour == 0)
      for (int& c : sigma) c = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(colours)));
    const double p = params.p_beta();
    std::vector<std::uint8_t> present(g.edges().size());
    for (int sweep = 1; sweep <= cfg.burn_in + cfg.sweeps; ++sweep) {
      if (cfg.sampler == Sampler::cluster) {
        sigma = cluster_step(g, sigma, params, rng);
      } else {
        for (int u = 0; u < n; ++u) sigma = metropolis_step(g, sigma, params, rng);
      }
      if (sweep <= cfg.burn_in || (sweep - cfg.burn_in) % cfg.thin != 0) continue;
      for (std::size_t e = 0; e < present.size(); ++e) {
        const int a = sigma[g.edges()[e][0]];
        present[e] = (a == sigma[g.edges()[e][1]] && a <= q && rng.bernoulli(p)) ? 1 : 0;
      }
      const auto [largest, isolated] = component_stats(n, g.edges(), present);
      record(out, sweep - cfg.burn_in, g, sigma, q, colours, largest, isolated);
    }
  }
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<ChainResult> run_chains(const ChainConfig& cfg, int chains, int threads) {
  if (chains < 0) throw std::invalid_argument("chains must be nonnegative");
  cfg.validate();
  std::vector<ChainResult> results(chains);
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i = next++; i < chains; i = next++) {
      ChainConfig c = cfg;
      c.stream = cfg.stream + static_cast<std::uint64_t>(i);
      results[i] = run_chain(c);
    }
  };
  const int t = std::max(1, std::min(threads, chains));
  std::vector<std::thread> pool;
  for (int i = 1; i < t; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return results;
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram histogram(const std::vector<double>& series, int bins) {
  if (bins < 2) throw std::invalid_argument("bins must be at least 2");
  if (series.empty()) throw std::invalid_argument("empty series");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
  h.counts.assign(bins, 0);
  for (double x : series) {
    auto i = static_cast<int>((x - lo) / (hi - lo) * bins);
    ++h.counts[std::clamp(i, 0, bins - 1)];
  }
  return h;
}

Histogram lattice_histogram(const std::vector<double>& series, double unit, int width) {
  if (!(unit > 0.0)) throw std::invalid_argument("unit must be positive");
  if (width < 1) throw std::invalid_argument("width must be at least 1");
  if (series.empty()) throw std::invalid_argument("empty series");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const auto lo = static_cast<long long>(std::llround(*lo_it / unit));
  const auto hi = static_cast<long long>(std::llround(*hi_it / unit));
  const long long bins = std::max<long long>(2, (hi - lo) / width + 1);
  Histogram h;
  h.edges.resize(bins + 1);
  for (long long i = 0; i <= bins; ++i) h.edges[i] = (static_cast<double>(lo + i * width) - 0.5) * unit;
  h.counts.assign(bins, 0);
  for (double x : series) {
    const long long i = (std::llround(x / unit) - lo) / width;
    ++h.counts[std::clamp<long long>(i, 0, bins - 1)];
  }
  return h;
}

Histogram energy_histogram(const std::vector<double>& e, int sites) {
  if (e.empty()) throw std::invalid_argument("empty series");
  if (sites < 1) throw std::invalid_argument("sites must be positive");
  const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
  const double points = (*hi - *lo) * sites;
  const int width = 4 * std::max(1, static_cast<int>(std::ceil(points / 160.0)));
  return lattice_histogram(e, 1.0 / sites, width);
}

MeanError batch_means(const std::vector<double>& series, int batches) {
  if (series.empty()) throw std::invalid_argument("empty series");
  if (batches < 2) throw std::invalid_argument("batches must be at least 2");
  MeanError r;
  for (double x : series) r.mean += x;
  r.mean /= static_cast<double>(series.size());
  const std::size_t b = std::min<std::size_t>(batches, series.size());
  if (b < 2) {
    r.error = std::nan("");
    return r;
  }
  const std::size_t len = series.size() / b;
  std::vector<double> means(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < len; ++j) means[i] += series[i * len + j];
    means[i] /= static_cast<double>(len);
  }
  double grand = 0.0;
  for (double x : means) grand += x;
  grand /= static_cast<double>(b);
  double var = 0.0;
  for (double x : means) var += (x - grand) * (x - grand);
  var /= static_cast<double>(b - 1);
  r.error = std::sqrt(var / static_cast<double>(b));
  return r;
}

}  // namespace ivp
