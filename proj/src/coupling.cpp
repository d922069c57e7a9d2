#include "ivpotts/coupling.hpp"

#include <cmath>
#include <stdexcept>

#include "ivpotts/union_find.hpp"

namespace ivp {

namespace {

std::vector<std::array<int, 2>> volume_edges(const Volume& v) {
  std::vector<std::array<int, 2>> edges;
  edges.reserve(v.num_bonds());
  for (const Bond& b : v.bonds())
    edges.push_back({static_cast<int>(v.site_index(b.lo)), static_cast<int>(v.site_index(b.hi()))});
  return edges;
}

void check_bonds(const Volume& v, const BondConfig& x) {
  if (x.size() != v.num_bonds()) throw std::invalid_argument("bond configuration size mismatch");
}

// Colours every class of uf: the class of `forced_root` (if >= 0) gets
// forced_colour, other classes of size >= 2 a uniform visible colour, and
// singletons a uniform colour among all.
SpinConfig colour_components(UnionFind& uf, int n, int forced_root, int forced_colour, int q,
                             int colours, CounterRng& rng) {
  std::vector<int> colour_of(uf.size(), 0);
  if (forced_root >= 0) colour_of[uf.find(forced_root)] = forced_colour;
  SpinConfig sigma(n);
  for (int i = 0; i < n; ++i) {
    const int root = uf.find(i);
    if (colour_of[root] == 0) {
      const int range = uf.set_size(i) > 1 ? q : colours;
      colour_of[root] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(range)));
    }
    sigma[i] = colour_of[root];
  }
  return sigma;
}

}  // namespace

bool is_compatible(const Volume& v, const JointConfig& jc, int q) {
  check_bonds(v, jc.x);
  if (jc.sigma.size() != v.num_sites()) throw std::invalid_argument("spin configuration size mismatch");
  const auto edges = volume_edges(v);
  for (std::size_t b = 0; b < edges.size(); ++b) {
    if (!jc.x[b]) continue;
    const int a = jc.sigma[edges[b][0]];
    if (a != jc.sigma[edges[b][1]] || a > q) return false;
  }
  return true;
}

LogValue joint_log_weight(const Volume& v, const JointConfig& jc, const ModelParams& params) {
  params.validate();
  if (!is_compatible(v, jc, params.q_int())) return kNegInf;
  const double log_p = std::log(params.p_beta());
  double w = params.beta * static_cast<double>(v.num_bonds());
  for (std::uint8_t present : jc.x) w += present ? log_p : -params.beta;
  return w;
}

double compatible_count(const Volume& v, const BondConfig& x, int q, int r) {
  const ComponentCounts k = component_counts(v, x);
  return std::pow(static_cast<double>(q), k.kappa1) * std::pow(static_cast<double>(q + r), k.kappa0);
}

BondConfig sample_bonds_given_spins(const Volume& v, const SpinConfig& sigma,
                                    const ModelParams& params, CounterRng& rng) {
  const int q = params.q_int();
  check_spins(v, sigma, params.colours());
  const double p = params.p_beta();
  const auto edges = volume_edges(v);
  BondConfig x(edges.size(), 0);
  for (std::size_t b = 0; b < edges.size(); ++b) {
    const int a = sigma[edges[b][0]];
    if (a == sigma[edges[b][1]] && a <= q) x[b] = rng.bernoulli(p) ? 1 : 0;
  }
  return x;
}

SpinConfig sample_spins_given_bonds(const Volume& v, const BondConfig& x, const ModelParams& params,
                                    CounterRng& rng, int frame_colour) {
  const int q = params.q_int();
  check_bonds(v, x);
  if (frame_colour != 0 && (frame_colour < 1 || frame_colour > q))
    throw std::invalid_argument("frame colour must be visible");
  const int n = static_cast<int>(v.num_sites());
  UnionFind uf(n + 1);
  const auto edges = volume_edges(v);
  for (std::size_t b = 0; b < edges.size(); ++b)
    if (x[b]) uf.unite(edges[b][0], edges[b][1]);
  if (frame_colour != 0)
    for (Site s : v.boundary_sites()) uf.unite(static_cast<int>(v.site_index(s)), n);
  return colour_components(uf, n, frame_colour != 0 ? n : -1, frame_colour, q, params.colours(), rng);
}

SpinGraph SpinGraph::free(const Volume& v) {
  SpinGraph g;
  g.n_ = static_cast<int>(v.num_sites());
  g.edges_ = volume_edges(v);
  g.ghost_links_.assign(g.n_, 0);
  g.finish();
  return g;
}

SpinGraph SpinGraph::torus(int w, int h) {
  if (w < 3 || h < 3) throw std::invalid_argument("torus sides must be at least 3");
  SpinGraph g;
  g.n_ = w * h;
  g.periodic_ = true;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      g.edges_.push_back({i, y * w + (x + 1) % w});
      g.edges_.push_back({i, ((y + 1) % h) * w + x});
    }
  g.ghost_links_.assign(g.n_, 0);
  g.finish();
  return g;
}

SpinGraph SpinGraph::homogeneous(const Volume& v, int k) {
  if (k < 1) throw std::invalid_argument("boundary colour must be visible");
  SpinGraph g = free(v);
  g.ghost_colour_ = k;
  for (int i = 0; i < g.n_; ++i)
    for (Site t : neighbours(v.sites()[i]))
      if (!v.contains(t)) ++g.ghost_links_[i];
  return g;
}

void SpinGraph::finish() {
  adj_.assign(n_, {});
  for (const auto& e : edges_) {
    adj_[e[0]].push_back(e[1]);
    adj_[e[1]].push_back(e[0]);
  }
}

int SpinGraph::satisfied(const SpinConfig& sigma, int q) const {
  int m = 0;
  for (const auto& e : edges_)
    if (sigma[e[0]] == sigma[e[1]] && sigma[e[0]] <= q) ++m;
  if (ghost_colour_ != 0)
    for (int i = 0; i < n_; ++i)
      if (sigma[i] == ghost_colour_) m += ghost_links_[i];
  return m;
}

SpinConfig cluster_step(const SpinGraph& g, const SpinConfig& sigma, const ModelParams& params,
                        CounterRng& rng) {
  const int q = params.q_int();
  const int colours = params.colours();
  const int n = g.num_sites();
  if (static_cast<int>(sigma.size()) != n) throw std::invalid_argument("spin configuration size mismatch");
  if (g.ghost_colour() > q) throw std::invalid_argument("boundary colour must be visible");
  const double p = params.p_beta();
  UnionFind uf(n + 1);
  for (const auto& e : g.edges()) {
    const int a = sigma[e[0]];
    if (a == sigma[e[1]] && a <= q && rng.bernoulli(p)) uf.unite(e[0], e[1]);
  }
  const int k = g.ghost_colour();
  if (k != 0)
    for (int i = 0; i < n; ++i) {
      if (sigma[i] != k) continue;
      for (int l = 0; l < g.ghost_links()[i]; ++l)
        if (rng.bernoulli(p)) {
          uf.unite(i, n);
          break;
        }
    }
  return colour_components(uf, n, k != 0 ? n : -1, k, q, colours, rng);
}

SpinConfig decode_spins(std::size_t index, int n, int colours) {
  SpinConfig sigma(n);
  for (int i = n - 1; i >= 0; --i) {
    sigma[i] = 1 + static_cast<int>(index % colours);
    index /= colours;
  }
  return sigma;
}

std::size_t encode_spins(const SpinConfig& sigma, int colours) {
  std::size_t index = 0;
  for (int c : sigma) index = index * colours + static_cast<std::size_t>(c - 1);
  return index;
}

std::vector<double> boltzmann_weights(const SpinGraph& g, const ModelParams& params) {
  const int q = params.q_int();
  const int colours = params.colours();
  const double states = std::pow(static_cast<double>(colours), g.num_sites());
  if (states > 1e6) throw CapExceeded("too many spin configurations for exact weights");
  std::vector<double> w(static_cast<std::size_t>(states));
  for (std::size_t s = 0; s < w.size(); ++s)
    w[s] = std::exp(params.beta * g.satisfied(decode_spins(s, g.num_sites(), colours), q));
  return w;
}

std::vector<std::vector<double>> cluster_kernel(const SpinGraph& g, const ModelParams& params) {
  const int q = params.q_int();
  const int colours = params.colours();
  const int n = g.num_sites();
  const int k = g.ghost_colour();
  const double p = params.p_beta();
  const double states_d = std::pow(static_cast<double>(colours), n);
  if (states_d > 4096) throw CapExceeded("too many spin configurations for an exact kernel");
  const auto states = static_cast<std::size_t>(states_d);
  std::vector<SpinConfig> configs(states);
  for (std::size_t s = 0; s < states; ++s) configs[s] = decode_spins(s, n, colours);

  std::vector<std::vector<double>> kernel(states, std::vector<double>(states, 0.0));
  for (std::size_t s = 0; s < states; ++s) {
    const SpinConfig& sigma = configs[s];
    // Candidate edges: matched visible edges, then one ghost edge per site
    // whose links may connect it to the boundary.
    std::vector<std::array<int, 2>> cand;
    std::vector<double> prob;
    for (const auto& e : g.edges())
      if (sigma[e[0]] == sigma[e[1]] && sigma[e[0]] <= q) {
        cand.push_back(e);
        prob.push_back(p);
      }
    if (k != 0)
      for (int i = 0; i < n; ++i)
        if (sigma[i] == k && g.ghost_links()[i] > 0) {
          cand.push_back({i, n});
          prob.push_back(1.0 - std::pow(1.0 - p, g.ghost_links()[i]));
        }
    if (cand.size() > 20) throw CapExceeded("too many candidate bonds for an exact kernel");
    for (std::uint32_t mask = 0; mask < (1u << cand.size()); ++mask) {
      double w = 1.0;
      UnionFind uf(n + 1);
      for (std::size_t c = 0; c < cand.size(); ++c) {
        if (mask >> c & 1u) {
          w *= prob[c];
          uf.unite(cand[c][0], cand[c][1]);
        } else {
          w *= 1.0 - prob[c];
        }
      }
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < states; ++t) {
        const SpinConfig& tau = configs[t];
        double pr = w;
        std::vector<int> seen(n + 1, 0);
        for (int i = 0; i < n && pr > 0.0; ++i) {
          const int root = uf.find(i);
          if (k != 0 && root == uf.find(n)) {
            if (tau[i] != k) pr = 0.0;
            continue;
          }
          if (seen[root] != 0) {
            if (tau[i] != seen[root]) pr = 0.0;
            continue;
          }
          seen[root] = tau[i];
          if (uf.set_size(i) > 1) {
            pr = tau[i] <= q ? pr / q : 0.0;
          } else {
            pr /= colours;
          }
        }
        kernel[s][t] += pr;
      }
    }
  }
  return kernel;
}

}  // namespace ivp
