#include "ivpotts/contours.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace ivp {

std::vector<Bond> Contour::bonds() const {
  std::vector<Bond> out;
  out.reserve(pairs.size());
  for (const Pair& p : pairs) out.push_back(p.bond);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Site> Contour::sites() const {
  std::vector<Site> out;
  out.reserve(pairs.size());
  for (const Pair& p : pairs) out.push_back(p.site);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Contour Contour::translated(int dx, int dy) const {
  Contour c{pairs, kind};
  for (Pair& p : c.pairs) {
    p.site = {p.site.x + dx, p.site.y + dy};
    p.bond.lo = {p.bond.lo.x + dx, p.bond.lo.y + dy};
  }
  return c;
}

Contour Contour::canonical() const {
  if (pairs.empty()) return *this;
  const Site s = pairs.front().site;
  return translated(-s.x, -s.y);
}

Configuration Configuration::finite(std::vector<Bond> present) {
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  return {std::move(present), false};
}

Configuration Configuration::cofinite_without(std::vector<Bond> missing) {
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  return {std::move(missing), true};
}

bool Configuration::has(const Bond& b) const {
  return std::binary_search(bonds.begin(), bonds.end(), b) != cofinite;
}

Energies energies(const ModelParams& params) {
  return {-std::log(params.p_beta()), params.beta - 0.5 * std::log(params.q + params.r)};
}

// ---------------------------------------------------------------------------
// Dense engine

ContourEngine::ContourEngine(const Frame& frame) : frame_(frame) {
  const int n = frame_.num_sites(), slots = frame_.num_bond_slots();
  coadj_.assign(static_cast<std::size_t>(slots), {-1, -1, -1, -1, -1, -1});
  for (int b = 0; b < slots; ++b) {
    const Bond bond = frame_.bond_at(b);
    if (frame_.bond_index(bond) != b) continue;
    const auto adj = co_adjacent_bonds(bond);
    for (int k = 0; k < 6; ++k) coadj_[b][k] = frame_.bond_index(adj[k]);
  }
  site_bonds_.resize(static_cast<std::size_t>(n));
  border_.assign(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s)
    for (int d = 0; d < 4; ++d) {
      site_bonds_[s][d] = frame_.bond_from(s, d);
      if (site_bonds_[s][d] < 0) border_[s] = 1;
    }
  in_sx_.assign(static_cast<std::size_t>(n), 0);
  at_bond_.assign(static_cast<std::size_t>(slots), {-1, -1});
  leftmost_.assign(static_cast<std::size_t>(n) + 1, -1);
  cut_.assign(static_cast<std::size_t>(slots), 0);
  region_in_.assign(static_cast<std::size_t>(n) + 1, 0);
}

void ContourEngine::extract(const std::uint8_t* present, bool outside_present) {
  const int n = frame_.num_sites(), w = frame_.width(), h = frame_.height();
  const int virt = n;
  sites_uf_.reset(static_cast<std::size_t>(n) + 1);
  isolated_ = 0;
  for (int s = 0; s < n; ++s) {
    bool touched = outside_present && border_[s];
    for (int d = 0; d < 2; ++d) {
      const int b = site_bonds_[s][d];
      if (b >= 0 && present[b]) {
        touched = true;
        sites_uf_.unite(s, frame_.neighbour(s, d));
      }
    }
    for (int d = 2; d < 4 && !touched; ++d) {
      const int b = site_bonds_[s][d];
      touched = b >= 0 && present[b];
    }
    in_sx_[s] = touched;
    if (!touched) ++isolated_;
    if (outside_present && border_[s]) sites_uf_.unite(s, virt);
  }

  raw_.clear();
  raw_root_.clear();
  for (int s = 0; s < n; ++s) {
    if (!in_sx_[s]) continue;
    const int root = sites_uf_.find(s);
    for (int d = 0; d < 4; ++d) {
      const int b = site_bonds_[s][d];
      if (b < 0) {
        if (!outside_present)
          throw std::logic_error("configuration touches the frame border in finite mode");
        continue;
      }
      if (present[b]) continue;
      auto& slot = at_bond_[b];
      (slot[0] < 0 ? slot[0] : slot[1]) = static_cast<int>(raw_.size());
      raw_.push_back({s, b});
      raw_root_.push_back(root);
    }
  }

  const int np = static_cast<int>(raw_.size());
  pairs_uf_.reset(static_cast<std::size_t>(np));
  for (int k = 0; k < np; ++k) {
    const int b = raw_[k].bond, root = raw_root_[k];
    const auto& same = at_bond_[b];
    if (same[1] >= 0 && raw_root_[same[0]] == raw_root_[same[1]]) pairs_uf_.unite(same[0], same[1]);
    for (int c : coadj_[b]) {
      if (c < 0) continue;
      for (int k2 : at_bond_[c])
        if (k2 >= 0 && raw_root_[k2] == root) pairs_uf_.unite(k, k2);
    }
  }

  // Leftmost (then lowest) site of every finite component.
  const int virt_root = outside_present ? sites_uf_.find(virt) : -1;
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) {
      const int s = y * w + x;
      if (!in_sx_[s]) continue;
      const int root = sites_uf_.find(s);
      if (root != virt_root && leftmost_[root] < 0) leftmost_[root] = s;
    }

  group_of_.assign(static_cast<std::size_t>(np), -1);
  std::vector<int> group_id(static_cast<std::size_t>(np), -1);
  kinds_.clear();
  std::vector<int> counts;
  for (int k = 0; k < np; ++k) {
    const int g = pairs_uf_.find(k);
    if (group_id[g] < 0) {
      group_id[g] = static_cast<int>(kinds_.size());
      kinds_.push_back(ContourKind::order);
      counts.push_back(0);
    }
    group_of_[k] = group_id[g];
    ++counts[group_id[g]];
  }
  // The piece holding the left pair of the leftmost site is the outer boundary.
  for (int k = 0; k < np; ++k) {
    const int root = raw_root_[k];
    if (root == virt_root) continue;
    const int s = leftmost_[root];
    if (raw_[k].site == s && raw_[k].bond == site_bonds_[s][2])
      kinds_[group_of_[k]] = ContourKind::disorder;
  }

  offsets_.assign(kinds_.size() + 1, 0);
  for (std::size_t g = 0; g < kinds_.size(); ++g) offsets_[g + 1] = offsets_[g] + counts[g];
  pairs_.resize(static_cast<std::size_t>(np));
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int k = 0; k < np; ++k) pairs_[fill[group_of_[k]]++] = raw_[k];

  // Leave the scratch arrays clean for the next call.
  for (const auto& p : raw_) at_bond_[p.bond] = {-1, -1};
  for (int s = 0; s < n; ++s)
    if (in_sx_[s]) leftmost_[sites_uf_.find(s)] = -1;
}

Contour ContourEngine::contour(int c) const {
  Contour out;
  out.kind = kinds_[c];
  out.pairs.reserve(static_cast<std::size_t>(contour_size(c)));
  const DensePair* p = contour_pairs(c);
  for (int k = 0; k < contour_size(c); ++k)
    out.pairs.push_back({frame_.site_at(p[k].site), frame_.bond_at(p[k].bond)});
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

std::vector<Contour> ContourEngine::contours() const {
  std::vector<Contour> out;
  out.reserve(kinds_.size());
  for (int c = 0; c < num_contours(); ++c) out.push_back(contour(c));
  std::sort(out.begin(), out.end());
  return out;
}

void ContourEngine::reconstruct(std::uint8_t* present_out, bool outside_present) {
  const int n = frame_.num_sites(), slots = frame_.num_bond_slots();
  const int virt = n;
  for (const auto& p : pairs_) cut_[p.bond] = 1;
  sites_uf_.reset(static_cast<std::size_t>(n) + 1);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < 2; ++d) {
      const int b = site_bonds_[s][d];
      if (b >= 0 && !cut_[b]) sites_uf_.unite(s, frame_.neighbour(s, d));
    }
    if (border_[s]) sites_uf_.unite(s, virt);
  }
  std::fill(region_in_.begin(), region_in_.end(), 0);
  for (const auto& p : pairs_) region_in_[sites_uf_.find(p.site)] = 1;
  if (pairs_.empty() && outside_present) region_in_[sites_uf_.find(virt)] = 1;
  for (int b = 0; b < slots; ++b) {
    const int s = b < n ? b : b - n;
    const int d = b < n ? 0 : 1;
    if (site_bonds_[s][d] != b) {
      present_out[b] = 0;
      continue;
    }
    present_out[b] = !cut_[b] && region_in_[sites_uf_.find(s)];
  }
  for (const auto& p : pairs_) cut_[p.bond] = 0;
}

// ---------------------------------------------------------------------------
// Generic configurations

namespace {

Frame frame_for(const std::vector<Bond>& bonds, int pad) {
  BBox box;
  for (const Bond& b : bonds) {
    box.add(b.lo);
    box.add(b.hi());
  }
  return Frame::around(box, pad);
}

std::vector<std::uint8_t> dense_mask(const Frame& f, const Configuration& x) {
  std::vector<std::uint8_t> present(static_cast<std::size_t>(f.num_bond_slots()), x.cofinite ? 1 : 0);
  for (const Bond& b : x.bonds) present[f.bond_index(b)] = x.cofinite ? 0 : 1;
  return present;
}

}  // namespace

std::vector<Pair> boundary_of(const Configuration& x) {
  std::vector<Pair> out;
  for (const Contour& c : extract_contours(x)) out.insert(out.end(), c.pairs.begin(), c.pairs.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Contour> extract_contours(const Configuration& x) {
  if (x.bonds.empty()) return {};
  const Frame f = frame_for(x.bonds, 2);
  ContourEngine engine(f);
  const auto present = dense_mask(f, x);
  engine.extract(present.data(), x.cofinite);
  return engine.contours();
}

ContourFamily extract_family(const Configuration& x) { return {extract_contours(x), true}; }

bool compatible(const Contour& a, const Contour& b) {
  auto i = a.pairs.begin(), j = b.pairs.begin();
  while (i != a.pairs.end() && j != b.pairs.end()) {
    if (*i == *j) return false;
    if (*i < *j) ++i;
    else ++j;
  }
  return true;
}

bool mutually_compatible(const std::vector<Contour>& family) {
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (!compatible(family[i], family[j])) return false;
  return true;
}

Configuration reconstruct(const std::vector<Contour>& family, bool empty_cofinite) {
  std::vector<Pair> all;
  for (const Contour& c : family) {
    for (const Pair& p : c.pairs) {
      if (!p.bond.incident(p.site)) throw std::invalid_argument("pair site not incident to its bond");
      all.push_back(p);
    }
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw std::invalid_argument("family is not mutually compatible");
  if (all.empty()) return {{}, empty_cofinite};

  std::vector<Bond> cut_bonds;
  for (const Pair& p : all) cut_bonds.push_back(p.bond);
  const Frame f = frame_for(cut_bonds, 2);
  const int n = f.num_sites(), virt = n;
  std::vector<std::uint8_t> cut(static_cast<std::size_t>(f.num_bond_slots()), 0);
  for (const Bond& b : cut_bonds) cut[f.bond_index(b)] = 1;
  UnionFind uf(static_cast<std::size_t>(n) + 1);
  for (int s = 0; s < n; ++s) {
    bool border = false;
    for (int d = 0; d < 4; ++d) {
      const int b = f.bond_from(s, d);
      if (b < 0) border = true;
      else if (!cut[b]) uf.unite(s, f.neighbour(s, d));
    }
    if (border) uf.unite(s, virt);
  }
  std::vector<std::uint8_t> in(static_cast<std::size_t>(n) + 1, 0);
  for (const Pair& p : all) in[uf.find(f.site_index(p.site))] = 1;
  Configuration x;
  x.cofinite = in[uf.find(virt)] != 0;
  for (int b = 0; b < f.num_bond_slots(); ++b) {
    const Bond bond = f.bond_at(b);
    if (f.bond_index(bond) != b) continue;
    const bool present = !cut[b] && in[uf.find(f.site_index(bond.lo))];
    if (present != x.cofinite) x.bonds.push_back(bond);
  }
  std::sort(x.bonds.begin(), x.bonds.end());
  return x;
}

bool is_admissible(const std::vector<Contour>& family, bool empty_cofinite) {
  Configuration x;
  try {
    x = reconstruct(family, empty_cofinite);
  } catch (const std::invalid_argument&) {
    return false;
  }
  std::vector<Contour> sorted = family;
  std::sort(sorted.begin(), sorted.end());
  return extract_contours(x) == sorted;
}

bool is_valid_contour(const Contour& c) { return !c.pairs.empty() && is_admissible({c}); }

// ---------------------------------------------------------------------------
// Geometry

namespace {

struct InteriorFill {
  Frame frame;
  std::vector<std::uint8_t> cut;
  std::vector<std::uint8_t> interior;  // per frame site
  UnionFind uf;
};

InteriorFill fill_interior(const Contour& c) {
  if (c.pairs.empty()) throw std::invalid_argument("empty contour");
  const auto bonds = c.bonds();
  InteriorFill f{frame_for(bonds, 2), {}, {}, UnionFind()};
  const int n = f.frame.num_sites(), virt = n;
  f.cut.assign(static_cast<std::size_t>(f.frame.num_bond_slots()), 0);
  for (const Bond& b : bonds) f.cut[f.frame.bond_index(b)] = 1;
  f.uf.reset(static_cast<std::size_t>(n) + 1);
  for (int s = 0; s < n; ++s) {
    bool border = false;
    for (int d = 0; d < 4; ++d) {
      const int b = f.frame.bond_from(s, d);
      if (b < 0) border = true;
      else if (!f.cut[b]) f.uf.unite(s, f.frame.neighbour(s, d));
    }
    if (border) f.uf.unite(s, virt);
  }
  f.interior.assign(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) f.interior[s] = !f.uf.same(s, virt);
  return f;
}

}  // namespace

std::vector<Site> interior_sites(const Contour& c) {
  const InteriorFill f = fill_interior(c);
  std::vector<Site> out;
  for (int s = 0; s < f.frame.num_sites(); ++s)
    if (f.interior[s]) out.push_back(f.frame.site_at(s));
  std::sort(out.begin(), out.end());
  return out;
}

ContourGeometry geometry(const Contour& c) {
  InteriorFill f = fill_interior(c);
  const Frame& fr = f.frame;
  std::map<int, std::pair<std::vector<Site>, std::vector<Bond>>> parts;
  std::vector<Site> int_sites;
  std::vector<Bond> int_bonds;
  for (int s = 0; s < fr.num_sites(); ++s) {
    if (!f.interior[s]) continue;
    const Site site = fr.site_at(s);
    int_sites.push_back(site);
    parts[f.uf.find(s)].first.push_back(site);
    for (int d = 0; d < 2; ++d) {
      const int b = fr.bond_from(s, d);
      if (b < 0 || f.cut[b] || !f.interior[fr.neighbour(s, d)]) continue;
      int_bonds.push_back(fr.bond_at(b));
      parts[f.uf.find(s)].second.push_back(fr.bond_at(b));
    }
  }
  ContourGeometry g;
  for (auto& [root, part] : parts) g.interior.emplace_back(std::move(part.first), std::move(part.second));
  g.interior_volume = Volume(int_sites, int_bonds);
  g.n_bonds_interior = int_bonds.size();

  const auto bonds = c.bonds();
  std::vector<Site> v_sites = int_sites;
  std::vector<Bond> v_bonds = int_bonds;
  for (const Bond& b : bonds) {
    v_sites.push_back(b.lo);
    v_sites.push_back(b.hi());
    v_bonds.push_back(b);
  }
  g.v_gamma = Volume(std::move(v_sites), std::move(v_bonds));
  g.n_bonds_v = g.v_gamma.num_bonds();

  for (std::size_t i = 0; i < bonds.size(); ++i)
    for (std::size_t j = i + 1; j < bonds.size(); ++j) {
      const Site a = bonds[i].midpoint2(), b = bonds[j].midpoint2();
      g.diameter = std::max({g.diameter, std::abs(a.x - b.x), std::abs(a.y - b.y)});
    }
  return g;
}

std::vector<int> external_indices(const std::vector<Contour>& family) {
  std::vector<std::vector<Site>> inside;
  inside.reserve(family.size());
  for (const Contour& c : family) inside.push_back(interior_sites(c));
  std::vector<int> out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto sites = family[i].sites();
    bool nested = false;
    for (std::size_t j = 0; j < family.size() && !nested; ++j) {
      if (i == j) continue;
      nested = std::includes(inside[j].begin(), inside[j].end(), sites.begin(), sites.end());
    }
    if (!nested) out.push_back(static_cast<int>(i));
  }
  return out;
}

LogValue log_rho(const Contour& c, double q, double r) {
  const double base = -0.25 * static_cast<double>(c.size()) * std::log(q + r);
  return c.kind == ContourKind::disorder ? std::log(q) + base : base;
}

LogValue log_rho_tilde(const Contour& c, const ContourGeometry& g, const ModelParams& params) {
  const Energies e = energies(params);
  const double rho = log_rho(c, params.q, params.r);
  if (c.kind == ContourKind::disorder)
    return rho - static_cast<double>(g.n_bonds_interior) * (e.e_order - e.e_disorder);
  return rho - static_cast<double>(g.n_bonds_v) * (e.e_disorder - e.e_order);
}

LogValue log_rho_tilde(const Contour& c, const ModelParams& params) {
  return log_rho_tilde(c, geometry(c), params);
}

// ---------------------------------------------------------------------------
// Class configurations

Configuration class_context(const Volume& v, const BondConfig& x, BoundaryClass bc) {
  if (x.size() != v.num_bonds()) throw std::invalid_argument("bond configuration size mismatch");
  std::vector<Bond> list;
  const bool ordered = bc == BoundaryClass::ordered;
  for (std::size_t e = 0; e < x.size(); ++e)
    if (static_cast<bool>(x[e]) != ordered) list.push_back(v.bonds()[e]);
  return ordered ? Configuration::cofinite_without(std::move(list))
                 : Configuration::finite(std::move(list));
}

BondSiteCheck bond_site_identity_check(const Volume& v, const BondConfig& x, BoundaryClass bc) {
  if (bc == BoundaryClass::plain || !in_class(v, x, bc))
    throw std::invalid_argument("configuration is not in the requested boundary class");
  const Configuration ctx = class_context(v, x, bc);
  BondSiteCheck chk;
  for (auto b : x) chk.lhs += b ? 0 : 2;
  for (const Contour& c : extract_contours(ctx)) chk.sum_sizes += static_cast<long>(c.size());
  for (Site s : v.bond_sites()) {
    bool isolated = true;
    for (const Bond& b : incident_bonds(s)) isolated = isolated && !ctx.has(b);
    if (isolated) chk.four_kappa0 += 4;
  }
  if (bc == BoundaryClass::disordered) {
    chk.boundary = static_cast<long>(boundary_counts(v).incidence_pairs);
    chk.holds = chk.lhs == chk.four_kappa0 + chk.sum_sizes - chk.boundary;
  } else {
    chk.holds = chk.lhs == chk.four_kappa0 + chk.sum_sizes;
  }
  return chk;
}

LogValue ContourStatistics::log_partition(const ModelParams& params, ContourVariant variant) const {
  const Energies e = energies(params);
  const double lq = std::log(params.q), lqr = std::log(params.q + params.r);
  LogSum acc;
  for (const auto& en : entries)
    acc.add(std::log(en.count) - en.ordered_bonds * e.e_order -
            (num_bonds - en.ordered_bonds) * e.e_disorder + en.disorder_contours * lq -
            0.25 * en.total_size * lqr);
  double value = acc.value();
  if (variant == ContourVariant::prefactored)
    value += bc == BoundaryClass::ordered ? lq : 0.25 * static_cast<double>(boundary_pairs) * lqr;
  return value;
}

ContourStatistics contour_statistics(const Volume& v, BoundaryClass bc, std::uint64_t cap) {
  if (bc == BoundaryClass::plain) throw std::invalid_argument("contour form needs a boundary class");
  const auto free = class_free_bonds(v, bc);
  const auto fixed = class_fixed_bonds(v, bc);
  const int nf = static_cast<int>(free.size());
  if (nf >= 63 || (std::uint64_t{1} << nf) > cap)
    throw CapExceeded("contour enumeration over " + std::to_string(nf) + " free bonds exceeds cap");
  const bool ordered = bc == BoundaryClass::ordered;
  const Frame f = Frame::around(v.bbox(), 2);
  ContourEngine engine(f);
  std::vector<std::uint8_t> present(static_cast<std::size_t>(f.num_bond_slots()), ordered ? 1 : 0);
  std::vector<std::uint8_t> inside(present.size(), 0);
  for (const Bond& b : v.bonds()) {
    inside[f.bond_index(b)] = 1;
    present[f.bond_index(b)] = 0;
  }
  for (const Bond& b : fixed) present[f.bond_index(b)] = 1;
  std::vector<int> free_slots;
  for (const Bond& b : free) free_slots.push_back(f.bond_index(b));
  std::vector<int> volume_sites;
  for (Site s : v.bond_sites()) volume_sites.push_back(f.site_index(s));

  ContourStatistics stats;
  stats.num_bonds = static_cast<int>(v.num_bonds());
  stats.bc = bc;
  stats.boundary_pairs = boundary_counts(v).incidence_pairs;
  std::map<std::array<int, 3>, double> acc;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nf); ++mask) {
    int ordered_bonds = static_cast<int>(fixed.size());
    for (int e = 0; e < nf; ++e) {
      const bool on = (mask >> e) & 1U;
      present[free_slots[e]] = on;
      ordered_bonds += on;
    }
    engine.extract(present.data(), ordered);
    int n_dis = 0, total = 0;
    for (int c = 0; c < engine.num_contours(); ++c) {
      n_dis += engine.kind(c) == ContourKind::disorder;
      total += engine.contour_size(c);
      const auto* p = engine.contour_pairs(c);
      for (int k = 0; k < engine.contour_size(c); ++k)
        if (!inside[p[k].bond]) stats.contours_inside = false;
    }
    acc[{ordered_bonds, n_dis, total}] += 1.0;
    long kappa0 = 0;
    for (int s : volume_sites) kappa0 += !engine.in_sx(s);
    long rhs = 4 * kappa0 + total;
    if (!ordered) rhs -= static_cast<long>(stats.boundary_pairs);
    ++stats.configurations;
    if (2L * (stats.num_bonds - ordered_bonds) != rhs) ++stats.identity_failures;
  }
  for (const auto& [key, count] : acc) stats.entries.push_back({key[0], key[1], key[2], count});
  return stats;
}

LogValue log_partition_contour(const Volume& v, const ModelParams& params, BoundaryClass bc,
                               ContourVariant variant, std::uint64_t cap) {
  return contour_statistics(v, bc, cap).log_partition(params, variant);
}

}  // namespace ivp
