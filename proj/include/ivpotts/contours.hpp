#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "ivpotts/biased_rc.hpp"
#include "ivpotts/lattice.hpp"
#include "ivpotts/logspace.hpp"
#include "ivpotts/potts.hpp"
#include "ivpotts/union_find.hpp"

namespace ivp {

// An incidence (i, b) of the boundary of a configuration.
struct Pair {
  Site site;
  Bond bond;
  auto operator<=>(const Pair&) const = default;
};

enum class ContourKind : std::uint8_t { disorder, order };

struct Contour {
  std::vector<Pair> pairs;  // sorted, unique
  ContourKind kind = ContourKind::disorder;

  std::size_t size() const { return pairs.size(); }
  std::vector<Bond> bonds() const;  // B(γ), sorted
  std::vector<Site> sites() const;  // S(γ), sorted
  Contour translated(int dx, int dy) const;
  // Translate so that the smallest pair site sits at the origin.
  Contour canonical() const;
  auto operator<=>(const Contour&) const = default;
};

// A finite bond set, or the complement of a finite set of missing bonds.
struct Configuration {
  std::vector<Bond> bonds;  // present bonds (finite) or missing bonds (cofinite); sorted
  bool cofinite = false;

  static Configuration finite(std::vector<Bond> present);
  static Configuration cofinite_without(std::vector<Bond> missing);
  bool has(const Bond& b) const;
  bool operator==(const Configuration&) const = default;
};

struct ContourFamily {
  std::vector<Contour> contours;  // sorted
  bool admissible = false;
};

struct ContourGeometry {
  std::vector<Volume> interior;  // connected components of int γ
  Volume interior_volume;        // their union
  Volume v_gamma;                // V(γ)
  std::size_t n_bonds_interior = 0;
  std::size_t n_bonds_v = 0;
  int diameter = 0;  // doubled L∞ units
};

struct Energies {
  double e_order = 0.0;     // e(𝔹)
  double e_disorder = 0.0;  // e(∅)
};

Energies energies(const ModelParams& params);

std::vector<Pair> boundary_of(const Configuration& x);
std::vector<Contour> extract_contours(const Configuration& x);
ContourFamily extract_family(const Configuration& x);

bool compatible(const Contour& a, const Contour& b);
bool mutually_compatible(const std::vector<Contour>& family);

// Rebuilds the configuration whose boundary is the union of the family.
// Sites touched by pairs are in S(X); the infinite region follows them, or
// `empty_cofinite` when the family is empty. Throws on incompatible input.
Configuration reconstruct(const std::vector<Contour>& family, bool empty_cofinite = false);
bool is_admissible(const std::vector<Contour>& family, bool empty_cofinite = false);
// A contour is valid when it alone is the boundary of a connected configuration.
bool is_valid_contour(const Contour& c);

ContourGeometry geometry(const Contour& c);
// Indices of the contours not lying inside the interior of another member.
std::vector<int> external_indices(const std::vector<Contour>& family);
// Sites strictly inside the contour (not reached from infinity in 𝕃 \ B(γ)).
std::vector<Site> interior_sites(const Contour& c);

LogValue log_rho(const Contour& c, double q, double r);
LogValue log_rho_tilde(const Contour& c, const ContourGeometry& g, const ModelParams& params);
LogValue log_rho_tilde(const Contour& c, const ModelParams& params);

// Dense contour extraction on a frame; reused buffers make repeated calls cheap.
class ContourEngine {
 public:
  struct DensePair {
    int site;
    int bond;
  };

  explicit ContourEngine(const Frame& frame);
  const Frame& frame() const { return frame_; }

  // `present` is indexed by frame bond slots; lattice bonds leaving the frame
  // count as present iff `outside_present`. In finite mode S(X) must stay off
  // the frame border.
  void extract(const std::uint8_t* present, bool outside_present);

  int num_contours() const { return static_cast<int>(kinds_.size()); }
  ContourKind kind(int c) const { return kinds_[c]; }
  int contour_size(int c) const { return offsets_[c + 1] - offsets_[c]; }
  const DensePair* contour_pairs(int c) const { return pairs_.data() + offsets_[c]; }
  int num_isolated() const { return isolated_; }  // sites of the frame outside S(X)
  bool in_sx(int site) const { return in_sx_[site] != 0; }

  Contour contour(int c) const;
  std::vector<Contour> contours() const;

  // Rebuilds a configuration on the frame from the extracted pairs alone.
  // `outside_present` only decides the empty family.
  void reconstruct(std::uint8_t* present_out, bool outside_present);

 private:
  Frame frame_;
  std::vector<std::array<int, 6>> coadj_;
  std::vector<std::array<int, 4>> site_bonds_;
  std::vector<std::uint8_t> border_;
  std::vector<std::uint8_t> cut_;
  std::vector<std::uint8_t> region_in_;
  UnionFind sites_uf_;
  UnionFind pairs_uf_;
  std::vector<std::uint8_t> in_sx_;
  std::vector<DensePair> raw_;
  std::vector<int> raw_root_;
  std::vector<std::array<int, 2>> at_bond_;
  std::vector<int> leftmost_;
  std::vector<int> group_of_;
  std::vector<DensePair> pairs_;
  std::vector<int> offsets_;
  std::vector<ContourKind> kinds_;
  int isolated_ = 0;
};

// Integer relations between bonds, isolated sites and contour sizes.
struct BondSiteCheck {
  long lhs = 0;          // 2|B(Λ) \ X|
  long four_kappa0 = 0;  // 4κ0 over S(B(Λ))
  long sum_sizes = 0;    // Σ|γ|
  long boundary = 0;     // |∂̄B(Λ)|, disordered class only
  bool holds = false;
};

// The configuration seen by the contour representation: X alone for the
// disordered class, X together with every lattice bond outside B(Λ) for the
// ordered class.
Configuration class_context(const Volume& v, const BondConfig& x, BoundaryClass bc);
BondSiteCheck bond_site_identity_check(const Volume& v, const BondConfig& x, BoundaryClass bc);

enum class ContourVariant { prefactored, redefined };

// Multiplicities of (|R^o|, number of disorder contours, Σ|γ|) over a class,
// obtained by extracting the contour family of every class configuration.
struct ContourStatistics {
  int num_bonds = 0;
  BoundaryClass bc = BoundaryClass::disordered;
  std::size_t boundary_pairs = 0;
  struct Entry {
    int ordered_bonds;
    int disorder_contours;
    int total_size;
    double count;
  };
  std::vector<Entry> entries;
  bool contours_inside = true;    // every contour's bonds lay in B(Λ)
  // Bond-site relation 2|B \ X| = 4κ0 + Σ|γ| (- |∂̄B| for the disordered
  // class), tested on every configuration of the sweep.
  std::uint64_t configurations = 0;
  std::uint64_t identity_failures = 0;

  LogValue log_partition(const ModelParams& params, ContourVariant variant) const;
};

ContourStatistics contour_statistics(const Volume& v, BoundaryClass bc,
                                     std::uint64_t cap = kDefaultEnumerationCap);
LogValue log_partition_contour(const Volume& v, const ModelParams& params, BoundaryClass bc,
                               ContourVariant variant, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace ivp
