#include "ivpotts/contour_model.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "ivpotts/rng.hpp"

namespace ivp {

namespace {

std::string volume_key(const Volume& v) {
  const Volume c = v.canonical();
  std::ostringstream os;
  for (Site s : c.sites()) os << s.x << ',' << s.y << ';';
  os << '|';
  for (const Bond& b : c.bonds()) os << b.lo.x << ',' << b.lo.y << (b.axis == Axis::X ? 'x' : 'y');
  return os.str();
}

std::string contour_key(const Contour& g) {
  const Contour c = g.canonical();
  std::ostringstream os;
  os << (c.kind == ContourKind::order ? 'o' : 'd');
  for (const Pair& p : c.pairs)
    os << p.site.x << ',' << p.site.y << ':' << p.bond.lo.x << ',' << p.bond.lo.y
       << (p.bond.axis == Axis::X ? 'x' : 'y');
  return os.str();
}

std::array<std::uint64_t, 2> digest_ints(std::uint64_t seed, const int* v, std::size_t n) {
  std::uint64_t a = mix64(seed ^ 0x6a09e667f3bcc909ULL), b = mix64(seed ^ 0xbb67ae8584caa73bULL);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<std::uint64_t>(static_cast<std::uint32_t>(v[i]));
    a = mix64(a ^ x);
    b = mix64(b + x * 0x9e3779b97f4a7c15ULL);
  }
  return {a, b};
}

// Digest of a weight tag and a contour taken up to translation.
std::array<std::uint64_t, 2> contour_digest(const std::string& tag, const Contour& c) {
  std::uint64_t seed = std::hash<std::string>{}(tag);
  std::vector<int> flat;
  flat.reserve(4 * c.size() + 1);
  flat.push_back(static_cast<int>(c.kind));
  const Site o = c.pairs.empty() ? Site{0, 0} : c.pairs.front().site;
  for (const Pair& p : c.pairs) {
    flat.push_back(p.site.x - o.x);
    flat.push_back(p.site.y - o.y);
    flat.push_back((p.bond.lo.x - o.x) * 2 + (p.bond.axis == Axis::Y ? 1 : 0));
    flat.push_back(p.bond.lo.y - o.y);
  }
  return digest_ints(seed, flat.data(), flat.size());
}

// Connected vertex subsets of a graph, each visited once (Redelmeier). The
// predicate must be monotone: once it rejects a subset it rejects supersets.
class SubsetEnumerator {
 public:
  using Accept = std::function<bool(const std::vector<int>&)>;
  using Visit = std::function<void(const std::vector<int>&)>;

  SubsetEnumerator(std::vector<std::vector<int>> adj, std::uint64_t max_visits)
      : adj_(std::move(adj)), mark_(adj_.size(), 0), max_visits_(max_visits) {}

  bool pruned() const { return pruned_; }

  void run(const Accept& accept, const Visit& visit) {
    accept_ = &accept;
    visit_ = &visit;
    for (int root = 0; root < static_cast<int>(adj_.size()); ++root) {
      root_ = root;
      std::vector<int> untried{root};
      mark_[root] = 1;
      grow(untried);
      mark_[root] = 0;
    }
  }

 private:
  void grow(std::vector<int> untried) {
    while (!untried.empty()) {
      const int u = untried.back();
      untried.pop_back();
      subset_.push_back(u);
      if (!(*accept_)(subset_)) {
        pruned_ = true;
        subset_.pop_back();
        continue;
      }
      if (++visits_ > max_visits_) throw CapExceeded("contour enumeration exceeds visit cap");
      (*visit_)(subset_);
      std::vector<int> next = untried;
      std::vector<int> added;
      for (int w : adj_[u]) {
        if (w > root_ && !mark_[w]) {
          mark_[w] = 1;
          next.push_back(w);
          added.push_back(w);
        }
      }
      grow(std::move(next));
      for (int w : added) mark_[w] = 0;
      subset_.pop_back();
    }
  }

  std::vector<std::vector<int>> adj_;
  std::vector<std::uint8_t> mark_;
  std::vector<int> subset_;
  const Accept* accept_ = nullptr;
  const Visit* visit_ = nullptr;
  int root_ = 0;
  std::uint64_t visits_ = 0;
  std::uint64_t max_visits_;
  bool pruned_ = false;
};

int bonds_diameter(const std::vector<Bond>& bonds) {
  if (bonds.empty()) return 0;
  int x0 = 1 << 30, x1 = -(1 << 30), y0 = x0, y1 = x1;
  for (const Bond& b : bonds) {
    const Site m = b.midpoint2();
    x0 = std::min(x0, m.x);
    x1 = std::max(x1, m.x);
    y0 = std::min(y0, m.y);
    y1 = std::max(y1, m.y);
  }
  return std::max(x1 - x0, y1 - y0);
}

bool sorted_subset(const std::vector<Bond>& a, const std::vector<Bond>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

// ---------------------------------------------------------------------------
// Enumeration

bool for_each_contour(const Volume& v, const EnumerationCaps& caps, ContourScope scope,
                      std::optional<ContourKind> kind, const ContourVisitor& visit) {
  if (v.num_bonds() == 0) return true;
  bool complete = true;
  int dcap = caps.max_diameter > 0 ? caps.max_diameter : (1 << 30);
  // A contour with c bonds has diameter at most 2(c-1) and encloses at most
  // c^2/8 bonds, which bounds the islands and missing sets searched.
  std::size_t size_cap = ~std::size_t{0};
  if (caps.max_contour_bonds > 0) {
    const int c = caps.max_contour_bonds;
    dcap = std::min(dcap, 2 * (c - 1));
    size_cap = static_cast<std::size_t>(c + c * c / 8);
  }
  const Frame f = Frame::around(v.bbox(), 2);
  ContourEngine engine(f);
  std::vector<std::uint8_t> present(static_cast<std::size_t>(f.num_bond_slots()), 0);
  std::vector<std::uint8_t> in_volume(present.size(), 0);
  for (const Bond& b : v.bonds()) in_volume[f.bond_index(b)] = 1;

  auto run = [&](const std::vector<Bond>& cand, bool order) {
    std::vector<std::vector<int>> adj(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i)
      for (std::size_t j = 0; j < cand.size(); ++j) {
        if (i == j) continue;
        const bool linked = order ? co_adjacent(cand[i], cand[j])
                                  : (cand[i].incident(cand[j].lo) || cand[i].incident(cand[j].hi()));
        if (linked) adj[i].push_back(static_cast<int>(j));
      }
    std::vector<int> slots;
    for (const Bond& b : cand) slots.push_back(f.bond_index(b));
    SubsetEnumerator en(std::move(adj), caps.max_visits);
    auto accept = [&](const std::vector<int>& sub) {
      if (sub.size() > size_cap) return false;
      if (dcap >= (1 << 29)) return true;
      std::vector<Bond> bs;
      for (int i : sub) bs.push_back(cand[i]);
      return bonds_diameter(bs) <= dcap;
    };
    const std::uint8_t base = order ? 1 : 0;
    std::vector<int> seen_bonds;
    auto on_subset = [&](const std::vector<int>& sub) {
      for (int i : sub) present[slots[i]] = 1 - base;
      engine.extract(present.data(), order);
      for (int i : sub) present[slots[i]] = base;
      if (engine.num_contours() != 1) return;
      if (engine.kind(0) != (order ? ContourKind::order : ContourKind::disorder)) return;
      seen_bonds.clear();
      const auto* p = engine.contour_pairs(0);
      for (int t = 0; t < engine.contour_size(0); ++t) seen_bonds.push_back(p[t].bond);
      std::sort(seen_bonds.begin(), seen_bonds.end());
      seen_bonds.erase(std::unique(seen_bonds.begin(), seen_bonds.end()), seen_bonds.end());
      if (caps.max_contour_bonds > 0 && static_cast<int>(seen_bonds.size()) > caps.max_contour_bonds) {
        complete = false;
        return;
      }
      if (order && scope == ContourScope::geometric) {
        for (int b : seen_bonds)
          if (!in_volume[b]) return;
      }
      visit(engine);
    };
    std::fill(present.begin(), present.end(), base);
    en.run(accept, on_subset);
    if (en.pruned()) complete = false;
  };

  if (!kind || *kind == ContourKind::disorder) {
    if (scope != ContourScope::ordered_class) run(v.inner_bonds(), false);
  }
  if (!kind || *kind == ContourKind::order) {
    if (scope == ContourScope::ordered_class) {
      run(class_free_bonds(v, BoundaryClass::ordered), true);
    } else if (scope == ContourScope::geometric) {
      run(induced_volume(v.sites()).bonds(), true);
    }
  }
  return complete;
}

ContourSet enumerate_contours(const Volume& v, const EnumerationCaps& caps, ContourScope scope,
                              std::optional<ContourKind> kind) {
  ContourSet out;
  out.complete = for_each_contour(v, caps, scope, kind,
                                  [&](const ContourEngine& en) { out.contours.push_back(en.contour(0)); });
  std::sort(out.contours.begin(), out.contours.end());
  return out;
}

WeightFunction truncate(const WeightFunction& chi, double tau) {
  WeightFunction w;
  std::ostringstream tag;
  tag << chi.tag << "_bar(" << tau << ')';
  w.tag = tag.str();
  auto inner = chi.log_weight;
  w.log_weight = [inner, tau](const Contour& c) -> LogValue {
    const LogValue x = inner(c);
    return x <= -tau * static_cast<double>(c.size()) ? x : kNegInf;
  };
  return w;
}

// ---------------------------------------------------------------------------
// Abstract partition function

namespace {

// Covered elements ahead of the sweep position, sorted.
using Frontier = std::vector<int>;

struct FrontierHash {
  std::size_t operator()(const Frontier& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int x : k) h = mix64(h ^ static_cast<std::uint64_t>(x));
    return static_cast<std::size_t>(h);
  }
};

bool disjoint_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return false;
    if (*i < *j) ++i;
    else ++j;
  }
  return true;
}

}  // namespace

LogValue abstract_log_partition(const std::vector<Contour>& contours, const std::vector<LogValue>& log_w,
                                const std::vector<std::array<int, 2>>& extra_conflicts,
                                std::uint64_t max_states) {
  if (contours.size() != log_w.size()) throw std::invalid_argument("weight count mismatch");
  // Elements in sweep order: pairs ordered by site, then one element per extra
  // conflict placed after the earlier of its two contours' first pair.
  struct Elem {
    Pair key;
    int extra;  // -1 for a pair
    auto operator<=>(const Elem&) const = default;
  };
  std::vector<Elem> elems;
  for (const Contour& c : contours)
    for (const Pair& p : c.pairs) elems.push_back({p, -1});
  for (std::size_t e = 0; e < extra_conflicts.size(); ++e) {
    const auto [a, b] = extra_conflicts[e];
    const Pair k = std::max(contours[a].pairs.front(), contours[b].pairs.front());
    elems.push_back({k, static_cast<int>(e)});
  }
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  const int ne = static_cast<int>(elems.size());
  auto elem_index = [&](const Elem& e) {
    return static_cast<int>(std::lower_bound(elems.begin(), elems.end(), e) - elems.begin());
  };

  std::vector<std::vector<int>> members(contours.size());
  for (std::size_t i = 0; i < contours.size(); ++i)
    for (const Pair& p : contours[i].pairs) members[i].push_back(elem_index({p, -1}));
  for (std::size_t e = 0; e < extra_conflicts.size(); ++e) {
    const auto [a, b] = extra_conflicts[e];
    const Pair k = std::max(contours[a].pairs.front(), contours[b].pairs.front());
    const int idx = elem_index({k, static_cast<int>(e)});
    members[a].push_back(idx);
    members[b].push_back(idx);
  }
  // Contours grouped by their first element; the first element itself is
  // dropped since the sweep consumes it on the spot.
  std::vector<std::vector<std::pair<std::vector<int>, LogValue>>> starting(static_cast<std::size_t>(ne));
  for (std::size_t i = 0; i < contours.size(); ++i) {
    if (log_w[i] == kNegInf || members[i].empty()) continue;
    std::vector<int> m = members[i];
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    const int lo = m.front();
    m.erase(m.begin());
    starting[lo].push_back({std::move(m), log_w[i]});
  }

  // Only positions where some contour starts change the sum; covered elements
  // behind the sweep are dropped so that equivalent frontiers merge.
  std::unordered_map<Frontier, LogSum, FrontierHash> cur, next;
  cur[Frontier{}].add(0.0);
  Frontier merged;
  for (int i = 0; i < ne; ++i) {
    if (starting[i].empty()) continue;
    next.clear();
    for (auto& [key, acc] : cur) {
      const LogValue val = acc.value();
      auto from = std::lower_bound(key.begin(), key.end(), i);
      if (from != key.end() && *from == i) {
        next[Frontier(from + 1, key.end())].add(val);
        continue;
      }
      Frontier ahead(from, key.end());
      for (const auto& [cm, lw] : starting[i]) {
        if (!disjoint_sorted(ahead, cm)) continue;
        merged.clear();
        std::merge(ahead.begin(), ahead.end(), cm.begin(), cm.end(), std::back_inserter(merged));
        next[merged].add(val + lw);
      }
      next[std::move(ahead)].add(val);
    }
    if (next.size() > max_states) throw CapExceeded("abstract partition function frontier exceeds cap");
    std::swap(cur, next);
  }
  LogSum total;
  for (auto& [key, acc] : cur) total.add(acc.value());
  return total.value();
}

// ---------------------------------------------------------------------------
// Compatibility beyond pair-disjointness

namespace {

struct Footprint {
  std::vector<Bond> support;  // island (disorder) or missing set B(V(γ)) (order)
  std::vector<Bond> scope;    // bonds a nested contour's support may use
  BBox box;
};

Footprint footprint(const Contour& c) {
  Footprint f;
  const ContourGeometry g = geometry(c);
  if (c.kind == ContourKind::disorder) {
    f.support = reconstruct({c}).bonds;
    f.scope = g.interior_volume.inner_bonds();
  } else {
    f.support = g.v_gamma.bonds();
    f.scope = class_free_bonds(g.interior_volume, BoundaryClass::ordered);
  }
  for (const Bond& b : f.support) {
    f.box.add(b.lo);
    f.box.add(b.hi());
  }
  return f;
}

bool boxes_apart(const BBox& a, const BBox& b) {
  return a.x1 + 1 < b.x0 || b.x1 + 1 < a.x0 || a.y1 + 1 < b.y0 || b.y1 + 1 < a.y0;
}

}  // namespace

std::vector<std::array<int, 2>> realizability_conflicts(const std::vector<Contour>& contours) {
  std::vector<Footprint> fp;
  fp.reserve(contours.size());
  for (const Contour& c : contours) fp.push_back(footprint(c));
  std::vector<std::array<int, 2>> out;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    for (std::size_t j = i + 1; j < contours.size(); ++j) {
      const Contour &a = contours[i], &b = contours[j];
      if (a.kind != b.kind) throw std::invalid_argument("conflicts are defined within one kind");
      if (boxes_apart(fp[i].box, fp[j].box) || !compatible(a, b)) continue;
      if (sorted_subset(fp[i].support, fp[j].scope) || sorted_subset(fp[j].support, fp[i].scope))
        continue;
      std::vector<Bond> joint;
      std::set_union(fp[i].support.begin(), fp[i].support.end(), fp[j].support.begin(),
                     fp[j].support.end(), std::back_inserter(joint));
      const Configuration x = a.kind == ContourKind::order ? Configuration::cofinite_without(joint)
                                                           : Configuration::finite(joint);
      const std::vector<Contour> got = extract_contours(x);
      const bool realizable = got.size() == 2 && ((got[0] == a && got[1] == b) || (got[0] == b && got[1] == a));
      if (!realizable) out.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sub-volume sums

RcStatistics class_statistics_direct(const Volume& v, BoundaryClass bc, std::uint64_t cap) {
  const auto sites = v.bond_sites();
  auto idx = [&](Site s) {
    return static_cast<int>(std::lower_bound(sites.begin(), sites.end(), s) - sites.begin());
  };
  auto edges_of = [&](const std::vector<Bond>& bs) {
    std::vector<std::array<int, 2>> e;
    for (const Bond& b : bs) e.push_back({idx(b.lo), idx(b.hi())});
    return e;
  };
  const int n = static_cast<int>(sites.size());
  const int nb = static_cast<int>(v.num_bonds());
  if (bc != BoundaryClass::ordered)
    return rc_statistics_graph(n, edges_of(class_free_bonds(v, bc)), {}, 0, nb, cap);
  auto fixed = edges_of(v.frozen_bonds());
  const int counted = static_cast<int>(fixed.size());
  for (Site s : v.boundary_sites()) fixed.push_back({idx(s), n});
  return rc_statistics_graph(n + 1, edges_of(class_free_bonds(v, bc)), fixed, counted, nb, cap);
}

LogValue log_z_redefined(const RcStatistics& stats, const Volume& v, BoundaryClass bc,
                         const ModelParams& params) {
  if (v.num_bonds() == 0) return 0.0;
  const double z = stats.log_partition(params.p_beta(), params.q, params.r);
  if (bc == BoundaryClass::ordered) return z - std::log(params.q);
  return z - 0.25 * static_cast<double>(boundary_counts(v).incidence_pairs) * std::log(params.q + params.r);
}

ContourModel::ContourModel(ModelParams params, EnumerationCaps caps)
    : params_(params), caps_(caps), energies_(ivp::energies(params)) {
  params_.validate();
}

std::size_t ContourModel::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return volume_cache_.size() + given_cache_.size();
}

const RcStatistics& ContourModel::statistics(const Volume& v, BoundaryClass bc) {
  const std::string key = std::to_string(static_cast<int>(bc)) + volume_key(v);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = volume_cache_.find(key);
    if (it != volume_cache_.end()) return *it->second;
  }
  const std::uint64_t cap = caps_.volume_cap >= 62 ? ~std::uint64_t{0}
                                                   : (std::uint64_t{1} << caps_.volume_cap);
  auto stats = std::make_shared<RcStatistics>(class_statistics_direct(v, bc, cap));
  std::lock_guard<std::mutex> lock(mutex_);
  return *volume_cache_.emplace(key, std::move(stats)).first->second;
}

LogValue ContourModel::log_z(const Volume& v, BoundaryClass bc) {
  if (bc == BoundaryClass::plain) throw std::invalid_argument("log_z needs a boundary class");
  if (v.num_bonds() == 0) return 0.0;
  return log_z_redefined(statistics(v, bc), v, bc, params_);
}

LogValue ContourModel::log_y(const Volume& v, BoundaryClass bc) {
  const double e = bc == BoundaryClass::ordered ? energies_.e_order : energies_.e_disorder;
  return log_z(v, bc) + static_cast<double>(v.num_bonds()) * e;
}

LogValue ContourModel::log_z_ord_given(const Contour& gamma) {
  if (gamma.kind != ContourKind::disorder)
    throw std::invalid_argument("conditional interior sum needs a disorder contour");
  const std::string key = contour_key(gamma);
  std::shared_ptr<std::map<std::array<int, 3>, double>> table;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = given_cache_.find(key);
    if (it != given_cache_.end()) table = it->second;
  }
  const Contour c = gamma.canonical();
  const ContourGeometry g = geometry(c);
  const int nb = static_cast<int>(g.n_bonds_interior);
  if (!table) {
    if (nb > caps_.volume_cap || nb >= 62)
      throw CapExceeded("interior of contour has " + std::to_string(nb) + " bonds, above the cap");
    const Frame f = Frame::around(g.v_gamma.bbox(), 2);
    ContourEngine engine(f);
    std::vector<std::uint8_t> present(static_cast<std::size_t>(f.num_bond_slots()), 0);
    std::vector<int> slots;
    for (const Bond& b : g.interior_volume.bonds()) slots.push_back(f.bond_index(b));
    std::vector<std::array<int, 2>> target;
    for (const Pair& p : c.pairs) target.push_back({f.site_index(p.site), f.bond_index(p.bond)});
    std::sort(target.begin(), target.end());
    const int tsize = static_cast<int>(target.size());
    table = std::make_shared<std::map<std::array<int, 3>, double>>();
    std::vector<std::array<int, 2>> buf;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nb); ++mask) {
      int on = 0;
      for (int e = 0; e < nb; ++e) {
        const bool bit = (mask >> e) & 1U;
        present[slots[e]] = bit;
        on += bit;
      }
      engine.extract(present.data(), false);
      bool found = false;
      int n_dis = 0, total = 0;
      for (int k = 0; k < engine.num_contours(); ++k) {
        const int sz = engine.contour_size(k);
        if (!found && sz == tsize && engine.kind(k) == ContourKind::disorder) {
          buf.clear();
          const auto* p = engine.contour_pairs(k);
          for (int t = 0; t < sz; ++t) buf.push_back({p[t].site, p[t].bond});
          std::sort(buf.begin(), buf.end());
          if (buf == target) {
            found = true;
            continue;
          }
        }
        n_dis += engine.kind(k) == ContourKind::disorder;
        total += sz;
      }
      if (found) (*table)[{on, n_dis, total}] += 1.0;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    given_cache_.emplace(key, table);
  }
  const double lq = std::log(params_.q), lqr = std::log(params_.q + params_.r);
  LogSum acc;
  for (const auto& [k, count] : *table)
    acc.add(std::log(count) - k[0] * energies_.e_order - (nb - k[0]) * energies_.e_disorder +
            k[1] * lq - 0.25 * k[2] * lqr);
  return acc.value();
}

LogValue ContourModel::log_xi_d(const Contour& gamma, DisorderInterior mode) {
  if (gamma.kind != ContourKind::disorder) return kNegInf;
  const ContourGeometry g = geometry(gamma);
  const LogValue num = mode == DisorderInterior::conditional
                           ? log_z_ord_given(gamma)
                           : log_z(g.interior_volume, BoundaryClass::ordered);
  return log_rho(gamma, params_.q, params_.r) + num - log_z(g.interior_volume, BoundaryClass::disordered);
}

LogValue ContourModel::log_xi_o(const Contour& gamma) {
  if (gamma.kind != ContourKind::order) return kNegInf;
  const ContourGeometry g = geometry(gamma);
  return log_rho(gamma, params_.q, params_.r) +
         static_cast<double>(gamma.bonds().size()) * energies_.e_order +
         log_z(g.v_gamma, BoundaryClass::disordered) - log_z(g.interior_volume, BoundaryClass::ordered);
}

WeightFunction ContourModel::xi_d(DisorderInterior mode) {
  return {"xi_d", [this, mode](const Contour& c) { return log_xi_d(c, mode); }};
}

WeightFunction ContourModel::xi_o() {
  return {"xi_o", [this](const Contour& c) { return log_xi_o(c); }};
}

WeightFunction ContourModel::rho() {
  return {"rho", [this](const Contour& c) { return log_rho(c, params_.q, params_.r); }};
}

WeightFunction ContourModel::rho_tilde() {
  return {"rho_tilde", [this](const Contour& c) { return log_rho_tilde(c, geometry(c), params_); }};
}

// ---------------------------------------------------------------------------
// Abstract partition functions of the class scopes

LogValue ContourModel::log_abstract(const Volume& v, ContourKind kind) {
  return log_abstract(v, kind, kind == ContourKind::order ? xi_o() : xi_d());
}

LogValue ContourModel::log_abstract(const Volume& v, ContourKind kind, const WeightFunction& chi) {
  if (v.num_bonds() == 0) return 0.0;
  const std::string key = chi.tag + (kind == ContourKind::order ? "|o|" : "|d|") + volume_key(v);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = abstract_cache_.find(key);
    if (it != abstract_cache_.end()) return it->second;
  }
  const auto scope = kind == ContourKind::order ? ContourScope::ordered_class : ContourScope::disordered_class;
  const ContourSet set = enumerate_contours(v, caps_, scope, kind);
  if (set.contours.size() > caps_.flat_cap)
    throw CapExceeded("volume holds " + std::to_string(set.contours.size()) +
                      " contours, above the direct family-sum cap");
  std::vector<LogValue> w;
  w.reserve(set.contours.size());
  for (const Contour& c : set.contours) w.push_back(chi.log_weight(c));
  const LogValue z = abstract_log_partition(set.contours, w, realizability_conflicts(set.contours),
                                            caps_.max_states);
  std::lock_guard<std::mutex> lock(mutex_);
  abstract_cache_.emplace(key, z);
  return z;
}

LogValue ContourModel::log_external_factor(const Contour& gamma, const WeightFunction& chi) {
  if (gamma.kind != ContourKind::order) throw std::invalid_argument("external factor needs an order contour");
  const auto key = contour_digest(chi.tag, gamma);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = factor_cache_.find(key);
    if (it != factor_cache_.end()) return it->second;
  }
  const LogValue w = chi.log_weight(gamma);
  const LogValue f =
      w == kNegInf ? kNegInf : w + log_abstract(geometry(gamma).interior_volume, ContourKind::order, chi);
  std::lock_guard<std::mutex> lock(mutex_);
  factor_cache_.emplace(key, f);
  return f;
}

LogValue ContourModel::log_abstract_by_externals(const Volume& v) {
  return log_abstract_by_externals(v, xi_o());
}

namespace {

struct DigestHash {
  std::size_t operator()(const std::array<std::uint64_t, 2>& k) const { return static_cast<std::size_t>(k[0]); }
};

// Ordered-class configurations of v on a padded frame, visited one by one.
class OrderedClassWalker {
 public:
  explicit OrderedClassWalker(const Volume& v, std::uint64_t cap)
      : frame_(Frame::around(v.bbox(), 2)), engine_(frame_) {
    present_.assign(static_cast<std::size_t>(frame_.num_bond_slots()), 1);
    for (const Bond& b : v.bonds()) present_[frame_.bond_index(b)] = 0;
    for (const Bond& b : v.frozen_bonds()) present_[frame_.bond_index(b)] = 1;
    fixed_ = static_cast<int>(v.frozen_bonds().size());
    for (const Bond& b : class_free_bonds(v, BoundaryClass::ordered)) slots_.push_back(frame_.bond_index(b));
    if (slots_.size() >= 63 || (std::uint64_t{1} << slots_.size()) > cap)
      throw CapExceeded("ordered class with " + std::to_string(slots_.size()) +
                        " free bonds exceeds the enumeration cap");
  }

  std::uint64_t count() const { return std::uint64_t{1} << slots_.size(); }

  // Loads configuration `mask` and extracts its contours; returns |X ∩ B(Λ)|.
  int load(std::uint64_t mask) {
    int on = fixed_;
    for (std::size_t e = 0; e < slots_.size(); ++e) {
      const bool bit = (mask >> e) & 1U;
      present_[slots_[e]] = bit;
      on += bit;
    }
    engine_.extract(present_.data(), true);
    return on;
  }

  const ContourEngine& engine() const { return engine_; }
  const Frame& frame() const { return frame_; }

  std::array<std::uint64_t, 2> dense_digest(int c) {
    key_.clear();
    const auto* p = engine_.contour_pairs(c);
    for (int t = 0; t < engine_.contour_size(c); ++t) {
      key_.push_back(p[t].site);
      key_.push_back(p[t].bond);
    }
    return digest_ints(0, key_.data(), key_.size());
  }

 private:
  Frame frame_;
  ContourEngine engine_;
  std::vector<std::uint8_t> present_;
  std::vector<int> slots_;
  std::vector<int> key_;
  int fixed_ = 0;
};

}  // namespace

LogValue ContourModel::log_abstract_by_externals(const Volume& v, const WeightFunction& chi) {
  if (v.num_bonds() == 0) return 0.0;
  OrderedClassWalker walk(v, kDefaultEnumerationCap);
  std::unordered_map<std::array<std::uint64_t, 2>, LogValue, DigestHash> local;
  LogSum total;
  for (std::uint64_t mask = 0; mask < walk.count(); ++mask) {
    walk.load(mask);
    const ContourEngine& en = walk.engine();
    bool only_order = true;
    for (int c = 0; c < en.num_contours() && only_order; ++c)
      only_order = en.kind(c) == ContourKind::order;
    if (!only_order) continue;
    LogValue term = 0.0;
    for (int c = 0; c < en.num_contours() && term != kNegInf; ++c) {
      const auto key = walk.dense_digest(c);
      auto it = local.find(key);
      if (it == local.end()) it = local.emplace(key, log_external_factor(en.contour(c), chi)).first;
      term = it->second == kNegInf ? kNegInf : term + it->second;
    }
    total.add(term);
  }
  return total.value();
}

// ---------------------------------------------------------------------------
// Checks

FamilySumReport family_sum_check(ContourModel& model, const Volume& v, BoundaryClass bc) {
  if (bc == BoundaryClass::plain) throw std::invalid_argument("family sum check needs a boundary class");
  FamilySumReport r;
  const bool ordered = bc == BoundaryClass::ordered;
  const ContourKind kind = ordered ? ContourKind::order : ContourKind::disorder;
  r.log_y = model.log_y(v, bc);
  const auto scope = ordered ? ContourScope::ordered_class : ContourScope::disordered_class;
  r.complete = for_each_contour(v, model.caps(), scope, kind, [&](const ContourEngine&) { ++r.n_contours; });
  if (r.n_contours <= model.caps().flat_cap) {
    const ContourSet set = enumerate_contours(v, model.caps(), scope, kind);
    std::vector<LogValue> w;
    for (const Contour& c : set.contours) w.push_back(ordered ? model.log_xi_o(c) : model.log_xi_d(c));
    const auto conflicts = realizability_conflicts(set.contours);
    r.n_extra_conflicts = conflicts.size();
    r.log_abstract = abstract_log_partition(set.contours, w, conflicts, model.caps().max_states);
    r.log_abstract_pair_disjoint = abstract_log_partition(set.contours, w, {}, model.caps().max_states);
  } else {
    if (!ordered) throw CapExceeded("too many disorder contours for a direct family sum");
    r.by_externals = true;
    r.log_abstract = model.log_abstract_by_externals(v);
    r.log_abstract_pair_disjoint = std::nan("");
  }
  return r;
}

ExternalFamilyReport external_family_check(ContourModel& model, const Volume& v) {
  const Energies e = model.energies();
  const ModelParams& prm = model.params();
  const double lq = std::log(prm.q), lqr = std::log(prm.q + prm.r);
  const int nb = static_cast<int>(v.num_bonds());
  OrderedClassWalker walk(v, std::uint64_t{1} << 20);
  std::map<std::vector<Contour>, LogSum> by_family;
  LogSum total;
  for (std::uint64_t mask = 0; mask < walk.count(); ++mask) {
    const int on = walk.load(mask);
    const auto family = walk.engine().contours();
    int n_dis = 0;
    std::size_t size = 0;
    for (const Contour& c : family) {
      n_dis += c.kind == ContourKind::disorder;
      size += c.size();
    }
    const LogValue w = -on * e.e_order - (nb - on) * e.e_disorder + n_dis * lq -
                       0.25 * static_cast<double>(size) * lqr;
    std::vector<Contour> ext;
    for (int i : external_indices(family)) ext.push_back(family[i]);
    std::sort(ext.begin(), ext.end());
    by_family[ext].add(w);
    total.add(w);
  }
  ExternalFamilyReport rep;
  const LogValue z = model.log_abstract_by_externals(v);
  const WeightFunction chi = model.xi_o();
  for (auto& [theta, acc] : by_family) {
    const double exact = std::exp(acc.value() - total.value());
    LogValue pred = -z;
    for (const Contour& c : theta) pred += model.log_external_factor(c, chi);
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(exact - std::exp(pred)));
    rep.total_probability += exact;
    ++rep.families;
  }
  return rep;
}

PeierlsReport peierls_sum(ContourModel& model, const Volume& scope_volume, ContourScope scope,
                          const std::vector<Site>& a, ContourKind kind, int diameter_cap) {
  EnumerationCaps caps = model.caps();
  caps.max_diameter = diameter_cap;
  caps.max_contour_bonds = 0;
  PeierlsReport rep;
  if (diameter_cap <= 0) return rep;
  std::vector<Site> want = a;
  std::sort(want.begin(), want.end());
  LogSum acc;
  rep.complete = for_each_contour(scope_volume, caps, scope, kind, [&](const ContourEngine& en) {
    if (kind == ContourKind::order) {
      // The only contour of a cofinite configuration encloses exactly the
      // sites the configuration isolates.
      for (Site s : want) {
        const int i = en.frame().site_index(s);
        if (i < 0 || en.in_sx(i)) return;
      }
    }
    const Contour c = en.contour(0);
    if (kind == ContourKind::disorder) {
      const auto inside = interior_sites(c);
      if (!std::includes(inside.begin(), inside.end(), want.begin(), want.end())) return;
    }
    acc.add(kind == ContourKind::order ? model.log_xi_o(c) : model.log_xi_d(c));
    ++rep.n_contours;
  });
  rep.log_sum = acc.value();
  return rep;
}

double exact_surround_probability(const Volume& v, const std::vector<Site>& a, const ModelParams& params,
                                  std::uint64_t cap) {
  if (a.size() != 1) throw std::invalid_argument("exact surround probability takes a single site");
  const auto sites = v.bond_sites();
  auto idx = [&](Site s) {
    auto it = std::lower_bound(sites.begin(), sites.end(), s);
    if (it == sites.end() || *it != s) throw std::invalid_argument("site " + to_string(s) + " not in S(B(Λ))");
    return static_cast<int>(it - sites.begin());
  };
  const int n = static_cast<int>(sites.size()), ghost = n, target = idx(a.front());
  std::vector<std::array<int, 2>> free, fixed;
  for (const Bond& b : class_free_bonds(v, BoundaryClass::ordered)) free.push_back({idx(b.lo), idx(b.hi())});
  for (const Bond& b : v.frozen_bonds()) fixed.push_back({idx(b.lo), idx(b.hi())});
  const int n_frozen = static_cast<int>(fixed.size());
  for (Site s : v.boundary_sites()) fixed.push_back({idx(s), ghost});
  const int nf = static_cast<int>(free.size());
  if (nf >= 63 || (std::uint64_t{1} << nf) > cap)
    throw CapExceeded("ordered class with " + std::to_string(nf) + " free bonds exceeds cap");
  const int nb = static_cast<int>(v.num_bonds());
  const double p = params.p_beta();
  UnionFind uf;
  std::vector<std::uint8_t> touched;
  LogSum total, event;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nf); ++mask) {
    uf.reset(static_cast<std::size_t>(n) + 1);
    touched.assign(static_cast<std::size_t>(n) + 1, 0);
    int merges = 0, present = n_frozen;
    auto link = [&](int i, int j) {
      touched[i] = touched[j] = 1;
      merges += uf.unite(i, j);
    };
    for (const auto& [i, j] : fixed) link(i, j);
    for (int e = 0; e < nf; ++e)
      if ((mask >> e) & 1U) {
        link(free[e][0], free[e][1]);
        ++present;
      }
    int covered = 0;
    for (auto t : touched) covered += t;
    const ComponentCounts k{n + 1 - covered, covered - merges};
    const LogValue w = rc_log_weight(present, nb - present, k, p, params.q, params.r);
    total.add(w);
    if (!uf.same(target, ghost)) event.add(w);
  }
  return std::exp(event.value() - total.value());
}

// ---------------------------------------------------------------------------
// Truncated models

namespace {

LogValue log_abstract_any(ContourModel& model, const Volume& v, ContourKind kind, const WeightFunction& chi) {
  try {
    return model.log_abstract(v, kind, chi);
  } catch (const CapExceeded&) {
    if (kind != ContourKind::order) throw;
    return model.log_abstract_by_externals(v, chi);
  }
}

Site centre_of(const Volume& v) {
  const BBox b = v.bbox();
  return {(b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2};
}

}  // namespace

std::vector<GfRow> g_and_f_estimates(ContourModel& model, double tau, int n_max) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const WeightFunction xo = truncate(model.xi_o(), tau), xd = truncate(model.xi_d(), tau);
  const Energies e = model.energies();
  std::vector<GfRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    const Volume v = make_window(n);
    const double nb = static_cast<double>(v.num_bonds());
    GfRow row;
    row.n = n;
    row.g_truncated_o = log_abstract_any(model, v, ContourKind::order, xo) / nb;
    row.g_truncated_d = log_abstract_any(model, v, ContourKind::disorder, xd) / nb;
    row.f_o = -e.e_order + row.g_truncated_o;
    row.f_d = -e.e_disorder + row.g_truncated_d;
    const Site o = centre_of(v);
    for (ContourKind kind : {ContourKind::order, ContourKind::disorder}) {
      const auto scope = kind == ContourKind::order ? ContourScope::ordered_class : ContourScope::disordered_class;
      const ContourSet set = enumerate_contours(v, model.caps(), scope, kind);
      row.complete = row.complete && set.complete;
      LogSum acc;
      for (const Contour& c : set.contours) {
        const auto s = c.sites();
        if (!std::binary_search(s.begin(), s.end(), o)) continue;
        acc.add((kind == ContourKind::order ? xo : xd).log_weight(c));
      }
      (kind == ContourKind::order ? row.single_site_bound_o : row.single_site_bound_d) = std::exp(acc.value());
    }
    rows.push_back(row);
  }
  return rows;
}

DerivativeReport derivative_bound_check(const ModelParams& params, double tau, const Volume& v, double h,
                                        const EnumerationCaps& caps) {
  if (!(h > 0.0) || params.beta - h <= 0.0) throw std::invalid_argument("step must keep beta positive");
  auto f = [&](double beta) {
    ModelParams p = params;
    p.beta = beta;
    ContourModel m(p, caps);
    return log_abstract_any(m, v, ContourKind::order, truncate(m.xi_o(), tau)) /
           static_cast<double>(v.num_sites());
  };
  DerivativeReport rep;
  rep.finite_difference = (f(params.beta + h) - f(params.beta - h)) / (2.0 * h);
  const double slope = 2.0 / std::expm1(params.beta);  // -2 d e(𝔹)/dβ
  rep.bound_tau = slope * std::exp(-tau / 2.0);
  ContourModel m(params, caps);
  const WeightFunction xo = truncate(m.xi_o(), tau);
  const ContourSet set = enumerate_contours(v, caps, ContourScope::ordered_class, ContourKind::order);
  rep.complete = set.complete;
  const Site o = centre_of(v);
  LogSum acc;
  for (const Contour& c : set.contours) {
    const auto s = geometry(c).v_gamma.sites();
    if (std::binary_search(s.begin(), s.end(), o)) acc.add(xo.log_weight(c));
  }
  rep.bound_enumerated = slope * std::exp(acc.value());
  return rep;
}

}  // namespace ivp
