#include "ivpotts/lattice.hpp"

#include <algorithm>
#include <stdexcept>

#include "ivpotts/union_find.hpp"

namespace ivp {

Bond Bond::between(Site a, Site b) {
  if (b < a) std::swap(a, b);
  if (b.x == a.x + 1 && b.y == a.y) return {a, Axis::X};
  if (b.y == a.y + 1 && b.x == a.x) return {a, Axis::Y};
  throw std::invalid_argument("sites " + to_string(a) + " and " + to_string(b) +
                              " are not adjacent");
}

Site Bond::hi() const { return axis == Axis::X ? Site{lo.x + 1, lo.y} : Site{lo.x, lo.y + 1}; }

Site Bond::midpoint2() const {
  return axis == Axis::X ? Site{2 * lo.x + 1, 2 * lo.y} : Site{2 * lo.x, 2 * lo.y + 1};
}

std::array<Bond, 4> incident_bonds(Site s) {
  return {Bond{s, Axis::X}, Bond{s, Axis::Y}, Bond{{s.x - 1, s.y}, Axis::X},
          Bond{{s.x, s.y - 1}, Axis::Y}};
}

std::array<Site, 4> neighbours(Site s) {
  return {Site{s.x + 1, s.y}, Site{s.x, s.y + 1}, Site{s.x - 1, s.y}, Site{s.x, s.y - 1}};
}

std::array<Bond, 6> co_adjacent_bonds(const Bond& b) {
  const int x = b.lo.x, y = b.lo.y;
  if (b.axis == Axis::X) {
    return {Bond{{x, y + 1}, Axis::X}, Bond{{x, y}, Axis::Y},     Bond{{x + 1, y}, Axis::Y},
            Bond{{x, y - 1}, Axis::X}, Bond{{x, y - 1}, Axis::Y}, Bond{{x + 1, y - 1}, Axis::Y}};
  }
  return {Bond{{x, y}, Axis::X},     Bond{{x, y + 1}, Axis::X},     Bond{{x + 1, y}, Axis::Y},
          Bond{{x - 1, y}, Axis::X}, Bond{{x - 1, y + 1}, Axis::X}, Bond{{x - 1, y}, Axis::Y}};
}

bool co_adjacent(const Bond& a, const Bond& b) {
  for (const Bond& c : co_adjacent_bonds(a))
    if (c == b) return true;
  return false;
}

void BBox::add(Site s) {
  if (empty()) {
    x0 = x1 = s.x;
    y0 = y1 = s.y;
    return;
  }
  x0 = std::min(x0, s.x);
  x1 = std::max(x1, s.x);
  y0 = std::min(y0, s.y);
  y1 = std::max(y1, s.y);
}

Volume::Volume(std::vector<Site> sites, std::vector<Bond> bonds)
    : sites_(std::move(sites)), bonds_(std::move(bonds)) {
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  std::sort(bonds_.begin(), bonds_.end());
  bonds_.erase(std::unique(bonds_.begin(), bonds_.end()), bonds_.end());
  for (const Bond& b : bonds_)
    if (!contains(b.lo) || !contains(b.hi()))
      throw std::invalid_argument("bond " + to_string(b) + " leaves the site set");
}

Volume Volume::from_bonds(std::vector<Bond> bonds) {
  std::vector<Site> sites;
  sites.reserve(2 * bonds.size());
  for (const Bond& b : bonds) {
    sites.push_back(b.lo);
    sites.push_back(b.hi());
  }
  return Volume(std::move(sites), std::move(bonds));
}

bool Volume::contains(Site s) const { return std::binary_search(sites_.begin(), sites_.end(), s); }

bool Volume::contains(const Bond& b) const {
  return std::binary_search(bonds_.begin(), bonds_.end(), b);
}

std::size_t Volume::site_index(Site s) const {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
  return (it != sites_.end() && *it == s) ? static_cast<std::size_t>(it - sites_.begin()) : npos;
}

std::size_t Volume::bond_index(const Bond& b) const {
  auto it = std::lower_bound(bonds_.begin(), bonds_.end(), b);
  return (it != bonds_.end() && *it == b) ? static_cast<std::size_t>(it - bonds_.begin()) : npos;
}

BBox Volume::bbox() const {
  BBox box;
  for (Site s : sites_) box.add(s);
  return box;
}

std::vector<Site> Volume::bond_sites() const {
  std::vector<Site> out;
  for (const Bond& b : bonds_) {
    out.push_back(b.lo);
    out.push_back(b.hi());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Site> Volume::boundary_sites() const {
  std::vector<Site> out;
  for (Site s : bond_sites()) {
    for (const Bond& b : incident_bonds(s)) {
      if (!contains(b)) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

std::vector<Site> Volume::inner_sites() const {
  std::vector<Site> out;
  for (Site s : sites_) {
    bool all = true;
    for (const Bond& b : incident_bonds(s)) all = all && contains(b);
    if (all) out.push_back(s);
  }
  return out;
}

std::vector<Bond> Volume::inner_bonds() const {
  const auto inner = inner_sites();
  auto is_inner = [&](Site s) { return std::binary_search(inner.begin(), inner.end(), s); };
  std::vector<Bond> out;
  for (const Bond& b : bonds_)
    if (is_inner(b.lo) && is_inner(b.hi())) out.push_back(b);
  return out;
}

std::vector<Bond> Volume::frozen_bonds() const {
  const auto bd = boundary_sites();
  auto on_bd = [&](Site s) { return std::binary_search(bd.begin(), bd.end(), s); };
  std::vector<Bond> out;
  for (const Bond& b : bonds_)
    if (on_bd(b.lo) && on_bd(b.hi())) out.push_back(b);
  return out;
}

Volume Volume::translated(int dx, int dy) const {
  Volume v;
  v.sites_.reserve(sites_.size());
  v.bonds_.reserve(bonds_.size());
  for (Site s : sites_) v.sites_.push_back({s.x + dx, s.y + dy});
  for (const Bond& b : bonds_) v.bonds_.push_back({{b.lo.x + dx, b.lo.y + dy}, b.axis});
  return v;
}

Volume Volume::canonical() const {
  if (sites_.empty()) return *this;
  const BBox box = bbox();
  return translated(-box.x0, -box.y0);
}

Volume make_rect(int w, int h) {
  if (w < 1 || h < 1) throw std::invalid_argument("rectangle sides must be positive");
  std::vector<Site> sites;
  std::vector<Bond> bonds;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sites.push_back({x, y});
      if (x + 1 < w) bonds.push_back({{x, y}, Axis::X});
      if (y + 1 < h) bonds.push_back({{x, y}, Axis::Y});
    }
  }
  return Volume(std::move(sites), std::move(bonds));
}

Volume make_window(int n) {
  if (n < 0) throw std::invalid_argument("window index must be nonnegative");
  return make_rect(2 * n + 1, 2 * n + 1).translated(-n, -n);
}

Volume induced_volume(std::vector<Site> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  std::vector<Bond> bonds;
  for (Site s : sites) {
    for (Site t : {Site{s.x + 1, s.y}, Site{s.x, s.y + 1}})
      if (std::binary_search(sites.begin(), sites.end(), t)) bonds.push_back(Bond::between(s, t));
  }
  return Volume(std::move(sites), std::move(bonds));
}

bool is_hole_free(const Volume& v) {
  if (v.num_sites() == 0) return true;
  const Frame f = Frame::around(v.bbox(), 1);
  const int n = f.num_sites();
  UnionFind uf(static_cast<std::size_t>(n) + 1);
  const int inf = n;
  for (int i = 0; i < n; ++i) {
    const Site s = f.site_at(i);
    if (v.contains(s)) continue;
    if (s.x == f.x0() || s.y == f.y0() || s.x == f.x0() + f.width() - 1 ||
        s.y == f.y0() + f.height() - 1)
      uf.unite(i, inf);
    for (int d = 0; d < 2; ++d) {
      const int j = f.neighbour(i, d);
      if (j >= 0 && !v.contains(f.site_at(j))) uf.unite(i, j);
    }
  }
  for (int i = 0; i < n; ++i)
    if (!v.contains(f.site_at(i)) && !uf.same(i, inf)) return false;
  return true;
}

bool is_volume(const std::vector<Site>& sites, const std::vector<Bond>& bonds) {
  std::vector<Site> s = sites;
  std::sort(s.begin(), s.end());
  for (const Bond& b : bonds)
    if (!std::binary_search(s.begin(), s.end(), b.lo) ||
        !std::binary_search(s.begin(), s.end(), b.hi()))
      return false;
  return is_hole_free(Volume(sites, bonds));
}

BoundaryCounts boundary_counts(const Volume& v) {
  BoundaryCounts c;
  for (Site s : v.bond_sites())
    for (const Bond& b : incident_bonds(s))
      if (!v.contains(b)) ++c.incidence_pairs;
  for (Site s : v.sites())
    for (Site t : neighbours(s))
      if (!v.contains(t)) ++c.external_bonds;
  return c;
}

Frame::Frame(int x0, int y0, int w, int h) : x0_(x0), y0_(y0), w_(w), h_(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative frame size");
}

Frame Frame::around(const BBox& box, int pad) {
  const BBox b = box.empty() ? BBox{0, 0, 0, 0}.padded(pad) : box.padded(pad);
  return Frame(b.x0, b.y0, b.x1 - b.x0 + 1, b.y1 - b.y0 + 1);
}

int Frame::bond_index(const Bond& b) const {
  const int s = site_index(b.lo);
  if (s < 0 || !contains(b.hi())) return -1;
  return b.axis == Axis::X ? s : w_ * h_ + s;
}

Bond Frame::bond_at(int i) const {
  const int n = w_ * h_;
  return i < n ? Bond{site_at(i), Axis::X} : Bond{site_at(i - n), Axis::Y};
}

int Frame::neighbour(int i, int d) const {
  const int x = i % w_, y = i / w_;
  switch (d) {
    case 0: return x + 1 < w_ ? i + 1 : -1;
    case 1: return y + 1 < h_ ? i + w_ : -1;
    case 2: return x > 0 ? i - 1 : -1;
    default: return y > 0 ? i - w_ : -1;
  }
}

int Frame::bond_from(int i, int d) const {
  const int j = neighbour(i, d);
  if (j < 0) return -1;
  const int n = w_ * h_;
  switch (d) {
    case 0: return i;
    case 1: return n + i;
    case 2: return j;
    default: return n + j;
  }
}

std::array<int, 2> Frame::bond_ends(int bi) const {
  const int n = w_ * h_;
  return bi < n ? std::array<int, 2>{bi, bi + 1} : std::array<int, 2>{bi - n, bi - n + w_};
}

std::string to_string(Site s) { return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")"; }

std::string to_string(const Bond& b) { return to_string(b.lo) + "-" + to_string(b.hi()); }

}  // namespace ivp
