#pragma once

#include <array>
#include <vector>

#include "ivpotts/biased_rc.hpp"
#include "ivpotts/lattice.hpp"
#include "ivpotts/logspace.hpp"
#include "ivpotts/potts.hpp"
#include "ivpotts/rng.hpp"

namespace ivp {

struct JointConfig {
  SpinConfig sigma;
  BondConfig x;
};

// Every present bond joins two sites of the same visible colour.
bool is_compatible(const Volume& v, const JointConfig& jc, int q);

LogValue joint_log_weight(const Volume& v, const JointConfig& jc, const ModelParams& params);

// Number of spin configurations compatible with x: q^κ1 (q+r)^κ0.
double compatible_count(const Volume& v, const BondConfig& x, int q, int r);

BondConfig sample_bonds_given_spins(const Volume& v, const SpinConfig& sigma,
                                    const ModelParams& params, CounterRng& rng);

// With frame_colour = k, every component touching a boundary site of v is
// coloured k; otherwise components are coloured independently.
SpinConfig sample_spins_given_bonds(const Volume& v, const BondConfig& x, const ModelParams& params,
                                    CounterRng& rng, int frame_colour = 0);

// Sites and edges on which a cluster update acts. Ghost links join a site to
// an outside neighbour of fixed colour.
class SpinGraph {
 public:
  static SpinGraph free(const Volume& v);
  static SpinGraph torus(int w, int h);
  // Outside neighbours have colour k.
  static SpinGraph homogeneous(const Volume& v, int k);

  int num_sites() const { return n_; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const std::vector<int>& ghost_links() const { return ghost_links_; }
  int ghost_colour() const { return ghost_colour_; }
  bool periodic() const { return periodic_; }
  // Sites incident to each site through edges, with multiplicity.
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  // Number of satisfied interactions, ghost links included.
  int satisfied(const SpinConfig& sigma, int q) const;

 private:
  void finish();

  int n_ = 0;
  std::vector<std::array<int, 2>> edges_;
  std::vector<int> ghost_links_;
  int ghost_colour_ = 0;
  bool periodic_ = false;
  std::vector<std::vector<int>> adj_;
};

// One Swendsen-Wang update: bonds given spins, then spins given bonds.
SpinConfig cluster_step(const SpinGraph& g, const SpinConfig& sigma, const ModelParams& params,
                        CounterRng& rng);

// Boltzmann weights e^{β·satisfied} of all (q+r)^n configurations, in
// lexicographic order with site 0 most significant.
std::vector<double> boltzmann_weights(const SpinGraph& g, const ModelParams& params);

// Exact transition matrix of cluster_step over all configurations.
std::vector<std::vector<double>> cluster_kernel(const SpinGraph& g, const ModelParams& params);

SpinConfig decode_spins(std::size_t index, int n, int colours);
std::size_t encode_spins(const SpinConfig& sigma, int colours);

}  // namespace ivp
