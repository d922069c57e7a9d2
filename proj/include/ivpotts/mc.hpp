#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivpotts/biased_rc.hpp"
#include "ivpotts/coupling.hpp"
#include "ivpotts/lattice.hpp"
#include "ivpotts/potts.hpp"
#include "ivpotts/rng.hpp"

namespace ivp {

// One single-site Metropolis move: a uniform site proposes a uniform
// different colour, accepted with probability min(1, e^{-βΔH}).
SpinConfig metropolis_step(const SpinGraph& g, const SpinConfig& sigma, const ModelParams& params,
                           CounterRng& rng);

// Exact transition matrix of metropolis_step, states ordered as in
// boltzmann_weights.
std::vector<std::vector<double>> metropolis_kernel(const SpinGraph& g, const ModelParams& params);

// Bond configuration of the biased random-cluster model on a volume,
// restricted to a boundary class.
class RcState {
 public:
  RcState(const Volume& v, BoundaryClass bc);

  const Volume& volume() const { return v_; }
  BoundaryClass boundary() const { return bc_; }
  const BondConfig& bonds() const { return x_; }
  // Throws std::invalid_argument if x is not in the class.
  void set_bonds(const BondConfig& x);
  const std::vector<int>& free_bonds() const { return free_; }
  bool frozen(int b) const { return !is_free_[b]; }
  const std::array<int, 2>& ends(int b) const { return ends_[b]; }

  // Log of the weight ratio (bond b present)/(bond b absent), the rest fixed.
  double log_insertion_odds(int b, const ModelParams& params) const;
  // Resample bond b from its conditional law; throws std::logic_error if frozen.
  void heatbath_update(int b, const ModelParams& params, CounterRng& rng);

  // Size of the component of site i, ignoring bond `skip`.
  int component_size(int i, int skip = -1) const;

 private:
  Volume v_;
  BoundaryClass bc_;
  BondConfig x_;
  std::vector<std::array<int, 2>> ends_;
  std::vector<std::vector<int>> incident_;
  std::vector<int> free_;
  std::vector<std::uint8_t> is_free_;
  mutable std::vector<int> mark_;
  mutable int epoch_ = 0;
};

// Heat-bath update of one uniformly chosen free bond.
void rc_heatbath_step(RcState& state, const ModelParams& params, CounterRng& rng);

// Exact transition matrix of rc_heatbath_step over the free bonds, states
// indexed by the bit pattern of free_bonds().
std::vector<std::vector<double>> heatbath_kernel(const RcState& state, const ModelParams& params);
// Target weights over the same states.
std::vector<double> rc_class_weights(const RcState& state, const ModelParams& params);

enum class ChainBoundary { free, colour, disordered, ordered };
enum class Sampler { metropolis, cluster, heatbath };

std::string to_string(ChainBoundary b);
std::string to_string(Sampler s);
ChainBoundary parse_boundary(const std::string& s);
Sampler parse_sampler(const std::string& s);

struct ChainConfig {
  Volume volume;
  std::optional<std::array<int, 2>> torus;  // replaces the volume when set
  ModelParams params;
  ChainBoundary boundary = ChainBoundary::free;
  int colour = 1;
  Sampler sampler = Sampler::cluster;
  int sweeps = 0;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  // Initial spins (spin samplers) as a constant colour; 0 draws them uniformly.
  int start_colour = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct ObservableSeries {
  std::vector<int> sweep;
  std::vector<double> energy_per_site;
  std::vector<std::vector<double>> colour_fractions;  // [colour-1][sample]
  std::vector<double> largest_component_fraction;
  std::vector<double> isolated_fraction;

  std::size_t size() const { return sweep.size(); }
};

struct RunManifest {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ModelParams params;
  std::string boundary;
  int colour = 1;
  std::string sampler;
  std::string geometry;
  int num_sites = 0;
  int sweeps = 0;
  int burn_in = 0;
  int thin = 1;
  std::string code_version;
  double wall_seconds = 0.0;
};

struct ChainResult {
  ObservableSeries series;
  RunManifest manifest;
};

ChainResult run_chain(const ChainConfig& cfg);
// Independent chains on streams cfg.stream + i, results in chain order.
std::vector<ChainResult> run_chains(const ChainConfig& cfg, int chains, int threads = 1);

std::string code_version();

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  std::size_t total() const;
};

// Equal-width bins over [min, max]; a constant series lands in one bin.
Histogram histogram(const std::vector<double>& series, int bins);

// For series on the grid {k * unit}: bins span `width` grid points and edges sit
// half a unit off the grid, so every bin holds the same number of grid values.
Histogram lattice_histogram(const std::vector<double>& series, double unit, int width);

// Energy per site on `sites` sites: about 40 lattice-aligned bins, widths a
// multiple of 4 grid points (local excitations mostly move the energy by 4/N).
Histogram energy_histogram(const std::vector<double>& energy_per_site, int sites);

struct MeanError {
  double mean = 0.0;
  double error = 0.0;
};

// Mean with a batch-means standard error.
MeanError batch_means(const std::vector<double>& series, int batches = 32);

}  // namespace ivp
