#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ivp {

struct Site {
  int x = 0;
  int y = 0;
  auto operator<=>(const Site&) const = default;
};

enum class Axis : std::uint8_t { X = 0, Y = 1 };

// A nearest-neighbour bond stored by its lexicographically smaller endpoint
// and the direction of the other one.
struct Bond {
  Site lo;
  Axis axis = Axis::X;

  static Bond between(Site a, Site b);
  Site hi() const;
  std::array<Site, 2> endpoints() const { return {lo, hi()}; }
  bool incident(Site s) const { return s == lo || s == hi(); }
  // Midpoint in doubled coordinates: (2x+dx, 2y+dy).
  Site midpoint2() const;
  auto operator<=>(const Bond&) const = default;
};

std::array<Bond, 4> incident_bonds(Site s);
std::array<Site, 4> neighbours(Site s);
std::array<Bond, 6> co_adjacent_bonds(const Bond& b);
bool co_adjacent(const Bond& a, const Bond& b);

struct BBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
  void add(Site s);
  BBox padded(int pad) const { return {x0 - pad, y0 - pad, x1 + pad, y1 + pad}; }
};

struct BoundaryCounts {
  std::size_t incidence_pairs = 0;
  std::size_t external_bonds = 0;
};

class Volume {
 public:
  Volume() = default;
  // Throws std::invalid_argument if a bond leaves the site set.
  Volume(std::vector<Site> sites, std::vector<Bond> bonds);
  static Volume from_bonds(std::vector<Bond> bonds);

  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  std::size_t num_sites() const { return sites_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  bool contains(Site s) const;
  bool contains(const Bond& b) const;
  std::size_t site_index(Site s) const;  // npos if absent
  std::size_t bond_index(const Bond& b) const;
  BBox bbox() const;

  // S(B(Λ)): sites touched by a bond of the volume.
  std::vector<Site> bond_sites() const;
  // Sites of S(B(Λ)) with an incident lattice bond outside B(Λ).
  std::vector<Site> boundary_sites() const;
  // Sites all of whose four bonds lie in B(Λ).
  std::vector<Site> inner_sites() const;
  // Bonds joining two inner sites: the free bonds of the disordered class.
  std::vector<Bond> inner_bonds() const;
  // Bonds joining two boundary sites: frozen present in the ordered class.
  std::vector<Bond> frozen_bonds() const;

  Volume translated(int dx, int dy) const;
  // Translate so that the bounding box starts at the origin.
  Volume canonical() const;

  bool operator==(const Volume& o) const { return sites_ == o.sites_ && bonds_ == o.bonds_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Site> sites_;  // sorted, unique
  std::vector<Bond> bonds_;  // sorted, unique
};

Volume make_window(int n);
Volume make_rect(int w, int h);
// Induced subgraph on a site set: all lattice bonds between the given sites.
Volume induced_volume(std::vector<Site> sites);

bool is_hole_free(const Volume& v);
bool is_volume(const std::vector<Site>& sites, const std::vector<Bond>& bonds);
BoundaryCounts boundary_counts(const Volume& v);

// Dense indexing of a rectangle of the lattice. Horizontal bond with lower
// endpoint at site s has index s; vertical bond has index W*H + s.
class Frame {
 public:
  Frame() = default;
  Frame(int x0, int y0, int w, int h);
  static Frame around(const BBox& box, int pad);

  int x0() const { return x0_; }
  int y0() const { return y0_; }
  int width() const { return w_; }
  int height() const { return h_; }
  int num_sites() const { return w_ * h_; }
  int num_bond_slots() const { return 2 * w_ * h_; }

  bool contains(Site s) const {
    return s.x >= x0_ && s.y >= y0_ && s.x < x0_ + w_ && s.y < y0_ + h_;
  }
  int site_index(Site s) const { return contains(s) ? (s.y - y0_) * w_ + (s.x - x0_) : -1; }
  Site site_at(int i) const { return {x0_ + i % w_, y0_ + i / w_}; }
  // -1 unless both endpoints are inside the frame.
  int bond_index(const Bond& b) const;
  Bond bond_at(int i) const;
  // Bond leaving site i in direction d (0:+x 1:+y 2:-x 3:-y); -1 if it leaves the frame.
  int bond_from(int i, int d) const;
  // Neighbour site in direction d, or -1.
  int neighbour(int i, int d) const;
  // Endpoint site indices of a bond slot.
  std::array<int, 2> bond_ends(int bi) const;

 private:
  int x0_ = 0, y0_ = 0, w_ = 0, h_ = 0;
};

std::string to_string(Site s);
std::string to_string(const Bond& b);

}  // namespace ivp

template <>
struct std::hash<ivp::Site> {
  std::size_t operator()(const ivp::Site& s) const noexcept {
    auto u = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x)) << 32) |
             static_cast<std::uint32_t>(s.y);
    u ^= u >> 33;
    u *= 0xff51afd7ed558ccdULL;
    u ^= u >> 33;
    return static_cast<std::size_t>(u);
  }
};

template <>
struct std::hash<ivp::Bond> {
  std::size_t operator()(const ivp::Bond& b) const noexcept {
    return std::hash<ivp::Site>{}(b.lo) * 2 + static_cast<std::size_t>(b.axis);
  }
};
