#include "polyinfer/generate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace polyinfer {

std::string_view to_string(GenerateStatus s) {
  switch (s) {
    case GenerateStatus::exhausted: return "exhausted";
    case GenerateStatus::candidate_limit: return "candidate-limit";
    case GenerateStatus::time_limit: return "time-limit";
    case GenerateStatus::leaf_limit: return "leaf-limit";
  }
  return "unknown";
}

ChemicalGraph assemble(const ExpandedGraph& x) {
  GraphBuilder b;
  const int n = static_cast<int>(x.vertices.size());
  for (int v = 0; v < n; ++v) b.add_atom(v + 1, x.vertices[v].tree.element[0]);
  int next = n + 1;
  for (int v = 0; v < n; ++v) {
    const auto& t = x.vertices[v].tree;
    std::vector<int> id(t.size());
    id[0] = v + 1;
    for (int k = 1; k < t.size(); ++k) {
      id[k] = next++;
      b.add_atom(id[k], t.element[k]);
      b.add_bond(id[t.parent[k]], id[k], t.multiplicity[k]);
    }
  }
  bool connecting = false;
  for (const auto& e : x.bonds) {
    b.add_bond(e.u + 1, e.v + 1, e.multiplicity);
    if (!e.link) continue;
    b.mark_link(e.u + 1, e.v + 1);
    if (!connecting) b.set_connecting(e.u + 1, e.v + 1), connecting = true;
  }
  return b.build();
}

namespace {

using Clock = std::chrono::steady_clock;

struct TreeInfo {
  std::string code;
  RootedTree tree;
  int root_element = 0;
  int child_bonds = 0;
  int heavy_children = 0;
  int heavy = 0;
  double heavy_mass = 0;
  int height = 0;
  std::vector<int> elements;  // every atom's element
  std::vector<std::string> leaf_keys;  // leaf-edge adjacency keys
  bool in_lambda = true;
};

std::vector<TreeInfo> tree_infos(const TopologicalSpec& spec) {
  const auto& table = ElementTable::standard();
  const int hydrogen = table.hydrogen();
  std::vector<TreeInfo> out;
  for (const auto& code : spec.fringe_catalog) {
    TreeInfo t;
    t.code = code;
    t.tree = parse_tree_code(code);
    t.root_element = t.tree.element[0];
    t.height = t.tree.heavy_height();
    const auto kids = t.tree.children();
    for (int c : kids[0]) {
      t.child_bonds += t.tree.multiplicity[c];
      t.heavy_children += t.tree.element[c] != hydrogen;
    }
    for (int v = 0; v < t.tree.size(); ++v) {
      const int el = t.tree.element[v];
      t.elements.push_back(el);
      if (std::find(spec.elements.begin(), spec.elements.end(), table[el].symbol) == spec.elements.end())
        t.in_lambda = false;
      if (el == hydrogen) continue;
      ++t.heavy;
      t.heavy_mass += table[el].mass;
      if (v == 0) continue;
      bool heavy_child = false;
      for (int c : kids[v]) heavy_child |= t.tree.element[c] != hydrogen;
      if (!heavy_child)
        t.leaf_keys.push_back(table[t.tree.element[t.tree.parent[v]]].symbol + "," + table[el].symbol + "," +
                              std::to_string(t.tree.multiplicity[v]));
    }
    out.push_back(std::move(t));
  }
  return out;
}

struct SkEdge {
  int u = 0, v = 0;
  bool link = false;
  int group = 0;
};

struct Skeleton {
  std::vector<int> seed;  // per vertex: seed vertex or -1
  std::vector<bool> tip;
  std::vector<SkEdge> edges;  // grouped: all edges of a group are contiguous
  std::vector<Interval> bd2, bd3;  // per group

  int order() const { return static_cast<int>(seed.size()); }
};

// One place where a path Q may hang: an inner vertex of a t path or a seed
// vertex.
struct Slot {
  int edge = -1;   // owning t edge
  int seed = -1;   // or owning seed vertex
  int inner = 0;   // position on the path, 1-based
};

std::vector<Slot> make_slots(const TopologicalSpec& spec, const std::vector<int>& lengths) {
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < spec.edges.size(); ++i)
    if (spec.edges[i].cls == SeedEdgeClass::t && spec.edges[i].bl.hi > 0)
      for (int k = 1; k < lengths[i]; ++k) slots.push_back({static_cast<int>(i), -1, k});
  for (std::size_t s = 0; s < spec.vertices.size(); ++s)
    if (spec.vertices[s].bl.hi > 0) slots.push_back({-1, static_cast<int>(s), 0});
  return slots;
}

bool owner_ok(const Interval& bl, const Interval& ch, int count, int longest) {
  return bl.contains(count) && ch.contains(longest);
}

// Owners without any slot still need their bounds to admit zero branches.
bool empty_owners_ok(const TopologicalSpec& spec, const std::vector<int>& lengths) {
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const auto& e = spec.edges[i];
    const bool has_slots = e.cls == SeedEdgeClass::t && e.bl.hi > 0 && lengths[i] > 1;
    if (!has_slots && !owner_ok(e.bl, e.ch, 0, 0)) return false;
  }
  for (const auto& v : spec.vertices)
    if (v.bl.hi == 0 && !owner_ok(v.bl, v.ch, 0, 0)) return false;
  return true;
}

Skeleton build_skeleton(const TopologicalSpec& spec, const std::vector<int>& lengths, const std::vector<Slot>& slots,
                        const std::vector<int>& q) {
  Skeleton sk;
  const int nseed = static_cast<int>(spec.vertices.size());
  const int ne = static_cast<int>(spec.edges.size());
  for (int s = 0; s < nseed; ++s) sk.seed.push_back(s);
  auto new_vertex = [&] {
    sk.seed.push_back(-1);
    return sk.order() - 1;
  };
  std::vector<std::vector<int>> inner(ne);
  std::vector<std::vector<SkEdge>> by_group(ne + nseed);
  for (int i = 0; i < ne; ++i) {
    const auto& e = spec.edges[i];
    int prev = e.u;
    for (int k = 1; k < lengths[i]; ++k) {
      const int w = new_vertex();
      inner[i].push_back(w);
      by_group[i].push_back({prev, w, e.link, i});
      prev = w;
    }
    by_group[i].push_back({prev, e.v, e.link, i});
  }
  sk.tip.assign(sk.order(), false);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (q[k] == 0) continue;
    const auto& slot = slots[k];
    const int anchor = slot.edge >= 0 ? inner[slot.edge][slot.inner - 1] : slot.seed;
    const int group = slot.edge >= 0 ? slot.edge : ne + slot.seed;
    int prev = anchor;
    for (int j = 0; j < q[k]; ++j) {
      const int w = new_vertex();
      sk.tip.push_back(false);
      by_group[group].push_back({prev, w, false, group});
      prev = w;
    }
    sk.tip[prev] = true;
  }
  for (int gi = 0; gi < ne + nseed; ++gi) {
    for (const auto& e : by_group[gi]) sk.edges.push_back(e);
    if (gi < ne) {
      sk.bd2.push_back(spec.edges[gi].bd2);
      sk.bd3.push_back(spec.edges[gi].bd3);
    } else {
      sk.bd2.push_back({0, 0});  // paths at seed vertices use single bonds
      sk.bd3.push_back({0, 0});
    }
  }
  return sk;
}

int link_vertex_count(const Skeleton& sk) {
  std::vector<int> links(sk.order(), 0);
  for (const auto& e : sk.edges)
    if (e.link) ++links[e.u], ++links[e.v];
  return static_cast<int>(std::count_if(links.begin(), links.end(), [](int c) { return c >= 2; }));
}

// Catalog entries usable at each skeleton vertex before bond orders are known.
std::vector<std::vector<int>> base_candidates(const TopologicalSpec& spec, const Skeleton& sk,
                                              const std::vector<TreeInfo>& infos, int rho) {
  const auto& table = ElementTable::standard();
  std::vector<std::vector<int>> out(sk.order());
  for (int v = 0; v < sk.order(); ++v) {
    const auto& allowed = spec.fringe_for(sk.seed[v]);
    for (std::size_t c = 0; c < infos.size(); ++c) {
      const auto& t = infos[c];
      if (std::find(allowed.begin(), allowed.end(), t.code) == allowed.end()) continue;
      if (!t.in_lambda || t.root_element == table.hydrogen() || t.height > rho) continue;
      if (sk.tip[v] && t.height != rho) continue;
      if (sk.seed[v] >= 0) {
        const auto& els = spec.vertices[sk.seed[v]].elements;
        if (!els.empty() && std::find(els.begin(), els.end(), table[t.root_element].symbol) == els.end()) continue;
      }
      out[v].push_back(static_cast<int>(c));
    }
  }
  return out;
}

ExpandedGraph expand(const Skeleton& sk, const std::vector<int>& mult, const std::vector<TreeInfo>& infos,
                     const std::vector<int>& tree_of) {
  ExpandedGraph x;
  for (int v = 0; v < sk.order(); ++v) x.vertices.push_back({infos[tree_of[v]].tree});
  for (std::size_t e = 0; e < sk.edges.size(); ++e)
    x.bonds.push_back({sk.edges[e].u, sk.edges[e].v, mult[e], sk.edges[e].link});
  return x;
}

std::map<std::string, long> counters_of(const GraphProfile& p) {
  std::map<std::string, long> c{{"n", p.n}, {"n_int", p.n_int}, {"rank", p.rank}, {"n_lnk_edges", p.n_lnk_edges}};
  for (const auto& [el, count] : p.elements) c["na[" + el + "]"] = count;
  for (const auto& [code, count] : p.fringe) c["fc[" + code + "]"] = count;
  return c;
}

// Prediction as an affine function of descriptor counts: y = c0 + sum c_j x_j
// in standardized target units.
class Linearized {
 public:
  Linearized(const Model& model, const DescriptorRegistry& reg) : model_(model), reg_(reg) {
    c0_ = model.h.b;
    coef_.assign(reg.size(), 0.0);
    for (int j = 0; j < reg.size(); ++j) {
      if (model.standardizer.constant(j)) continue;
      coef_[j] = model.h.w(j) / model.standardizer.range(j);
      c0_ -= coef_[j] * model.standardizer.min(j);
    }
  }

  double c0() const { return c0_; }
  double coef(DescriptorKind kind, const std::string& key) const {
    auto j = reg_.find(kind, key);
    return j ? coef_[*j] : 0.0;
  }
  double to_raw(double y) const { return model_.standardizer.inverse_value(y); }

 private:
  const Model& model_;
  const DescriptorRegistry& reg_;
  std::vector<double> coef_;
  double c0_ = 0;
};

class Search {
 public:
  Search(const TopologicalSpec& spec, const Model& model, const DescriptorRegistry& reg, const GenerateOptions& opt,
         const CandidateSink& sink)
      : spec_(spec), model_(model), reg_(reg), opt_(opt), sink_(sink), lin_(model, reg), rho_(reg.rho()),
        infos_(tree_infos(spec)), start_(Clock::now()) {
    const auto& table = ElementTable::standard();
    for (const auto& t : infos_) {
      fc_cap_.push_back(spec.fc.count(t.code) ? spec.fc.at(t.code).hi : kUnbounded);
    }
    na_cap_.assign(table.size(), kUnbounded);
    na_int_cap_.assign(table.size(), kUnbounded);
    for (const auto& [el, i] : spec.na) na_cap_[table.id(el)] = i.hi;
    for (const auto& [el, i] : spec.na_int) na_int_cap_[table.id(el)] = i.hi;
    c_n_ = lin_.coef(DescriptorKind::scalar, "n");
    c_ms_ = lin_.coef(DescriptorKind::scalar, "ms");
    for (const auto& t : infos_) {
      double local = c_n_ * t.heavy + lin_.coef(DescriptorKind::fringe_tree, t.code);
      for (int el : t.elements) local += lin_.coef(DescriptorKind::element_count, table[el].symbol);
      for (const auto& k : t.leaf_keys) local += lin_.coef(DescriptorKind::leaf_adjacency_config, k);
      tree_local_.push_back(local);
    }
  }

  GenerateResult run() {
    lengths_.assign(spec_.edges.size(), 1);
    choose_length(0);
    result_.status = status_;
    return std::move(result_);
  }

 private:
  bool out_of_time() {
    if (std::chrono::duration<double>(Clock::now() - start_).count() > opt_.limits.max_seconds) {
      stop(GenerateStatus::time_limit);
      return true;
    }
    return false;
  }

  void stop(GenerateStatus s) {
    if (!stopped_) status_ = s;
    stopped_ = true;
  }

  // --- structure -----------------------------------------------------------

  int fixed_vertices() const {
    int n = static_cast<int>(spec_.vertices.size());
    for (std::size_t i = 0; i < spec_.edges.size(); ++i) n += lengths_[i] - 1;
    return n;
  }

  void choose_length(std::size_t i) {
    if (stopped_) return;
    if (i == spec_.edges.size()) {
      if (!empty_owners_ok(spec_, lengths_)) return;
      slots_ = make_slots(spec_, lengths_);
      q_.assign(slots_.size(), 0);
      choose_branch(0, fixed_vertices());
      return;
    }
    const auto& e = spec_.edges[i];
    if (e.cls != SeedEdgeClass::t) {
      lengths_[i] = 1;
      choose_length(i + 1);
      return;
    }
    for (int len = e.length.lo; len <= e.length.hi && !stopped_; ++len) {
      lengths_[i] = len;
      if (fixed_vertices() > std::min(spec_.n_int.hi, spec_.n.hi)) break;
      choose_length(i + 1);
    }
    lengths_[i] = 1;
  }

  // Branch bounds of the owner of slot k once its last slot is decided.
  bool owner_done(std::size_t k) const {
    const auto& s = slots_[k];
    if (k + 1 < slots_.size() && slots_[k + 1].edge == s.edge && slots_[k + 1].seed == s.seed) return true;
    int count = 0, longest = 0;
    for (std::size_t j = 0; j <= k; ++j)
      if (slots_[j].edge == s.edge && slots_[j].seed == s.seed && q_[j] > 0) ++count, longest = std::max(longest, q_[j]);
    const auto& bl = s.edge >= 0 ? spec_.edges[s.edge].bl : spec_.vertices[s.seed].bl;
    const auto& ch = s.edge >= 0 ? spec_.edges[s.edge].ch : spec_.vertices[s.seed].ch;
    return owner_ok(bl, ch, count, longest);
  }

  int owner_count(std::size_t k) const {
    int count = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (slots_[j].edge == slots_[k].edge && slots_[j].seed == slots_[k].seed && q_[j] > 0) ++count;
    return count;
  }

  void choose_branch(std::size_t k, int vertices) {
    if (stopped_) return;
    if (k == slots_.size()) {
      skeleton();
      return;
    }
    const auto& s = slots_[k];
    const int ch_hi = s.edge >= 0 ? spec_.edges[s.edge].ch.hi : spec_.vertices[s.seed].ch.hi;
    const int bl_hi = s.edge >= 0 ? spec_.edges[s.edge].bl.hi : spec_.vertices[s.seed].bl.hi;
    const int limit = std::min(spec_.n_int.hi, spec_.n.hi);
    for (int len = 0; len <= ch_hi && !stopped_; ++len) {
      if (len > 0 && owner_count(k) >= bl_hi) break;
      if (vertices + len > limit) break;
      q_[k] = len;
      if (owner_done(k)) choose_branch(k + 1, vertices + len);
    }
    q_[k] = 0;
  }

  void skeleton() {
    sk_ = build_skeleton(spec_, lengths_, slots_, q_);
    if (!spec_.n_int.contains(sk_.order())) return;
    if (!spec_.n_lnk.contains(link_vertex_count(sk_))) return;
    base_ = base_candidates(spec_, sk_, infos_, rho_);
    room_lo_.assign(sk_.order(), kUnbounded);
    room_hi_.assign(sk_.order(), 0);
    const auto& table = ElementTable::standard();
    for (int v = 0; v < sk_.order(); ++v) {
      if (base_[v].empty()) return;
      for (int c : base_[v]) {
        const int room = table[infos_[c].root_element].valence - infos_[c].child_bonds;
        room_lo_[v] = std::min(room_lo_[v], room);
        room_hi_[v] = std::max(room_hi_[v], room);
      }
    }
    mult_.assign(sk_.edges.size(), 1);
    bond_sum_.assign(sk_.order(), 0);
    for (const auto& e : sk_.edges) ++bond_sum_[e.u], ++bond_sum_[e.v];
    for (int v = 0; v < sk_.order(); ++v)
      if (bond_sum_[v] > room_hi_[v]) return;
    group_count2_.assign(sk_.bd2.size(), 0);
    group_count3_.assign(sk_.bd2.size(), 0);
    choose_bond(0);
  }

  void choose_bond(std::size_t e) {
    if (stopped_) return;
    if (e > 0 && (e == sk_.edges.size() || sk_.edges[e].group != sk_.edges[e - 1].group)) {
      const int g = sk_.edges[e - 1].group;
      if (!sk_.bd2[g].contains(group_count2_[g]) || !sk_.bd3[g].contains(group_count3_[g])) return;
    }
    if (e == sk_.edges.size()) {
      fringe_setup();
      return;
    }
    const auto& edge = sk_.edges[e];
    for (int m = 1; m <= 3 && !stopped_; ++m) {
      const int extra = m - 1;
      if (bond_sum_[edge.u] + extra > room_hi_[edge.u] || bond_sum_[edge.v] + extra > room_hi_[edge.v]) break;
      const int g = edge.group;
      if (group_count2_[g] + (m == 2) > sk_.bd2[g].hi || group_count3_[g] + (m == 3) > sk_.bd3[g].hi) continue;
      mult_[e] = m;
      bond_sum_[edge.u] += extra;
      bond_sum_[edge.v] += extra;
      group_count2_[g] += m == 2;
      group_count3_[g] += m == 3;
      choose_bond(e + 1);
      group_count2_[g] -= m == 2;
      group_count3_[g] -= m == 3;
      bond_sum_[edge.u] -= extra;
      bond_sum_[edge.v] -= extra;
    }
    mult_[e] = 1;
  }

  // --- fringe trees --------------------------------------------------------

  struct Option {
    int tree = 0;
    double local = 0;
    int element = 0;
    int degree = 0;
  };

  void fringe_setup() {
    const auto& table = ElementTable::standard();
    const int n = sk_.order();
    degree_.assign(n, 0);
    for (const auto& e : sk_.edges) ++degree_[e.u], ++degree_[e.v];
    options_.assign(n, {});
    for (int v = 0; v < n; ++v) {
      for (int c : base_[v]) {
        const auto& t = infos_[c];
        if (table[t.root_element].valence - t.child_bonds != bond_sum_[v]) continue;
        const int deg = degree_[v] + t.heavy_children;
        if (opt_.require_vocabulary && !in_vocabulary(t, deg)) continue;
        const double local =
            tree_local_[c] + lin_.coef(DescriptorKind::degree_symbol, degree_symbol(t.root_element, deg));
        options_[v].push_back({c, local, t.root_element, deg});
      }
      if (options_[v].empty()) return;
    }
    ++result_.stats.skeletons;

    // Pair terms of interior edges.
    pair_.assign(sk_.edges.size(), {});
    pair_lo_.assign(sk_.edges.size(), 0);
    pair_hi_.assign(sk_.edges.size(), 0);
    for (std::size_t e = 0; e < sk_.edges.size(); ++e) {
      const auto& edge = sk_.edges[e];
      const auto& ou = options_[edge.u];
      const auto& ov = options_[edge.v];
      auto& table_e = pair_[e];
      table_e.resize(ou.size() * ov.size());
      for (std::size_t a = 0; a < ou.size(); ++a)
        for (std::size_t b = 0; b < ov.size(); ++b)
          table_e[a * ov.size() + b] = pair_value(ou[a].element, ou[a].degree, ov[b].element, ov[b].degree, mult_[e], edge.link);
      pair_lo_[e] = *std::min_element(table_e.begin(), table_e.end());
      pair_hi_[e] = *std::max_element(table_e.begin(), table_e.end());
    }
    local_lo_.assign(n, 0);
    local_hi_.assign(n, 0);
    heavy_lo_.assign(n, 0);
    heavy_hi_.assign(n, 0);
    mass_lo_.assign(n, 0);
    mass_hi_.assign(n, 0);
    for (int v = 0; v < n; ++v) {
      local_lo_[v] = local_hi_[v] = options_[v][0].local;
      heavy_lo_[v] = heavy_hi_[v] = infos_[options_[v][0].tree].heavy;
      mass_lo_[v] = mass_hi_[v] = infos_[options_[v][0].tree].heavy_mass;
      for (const auto& o : options_[v]) {
        local_lo_[v] = std::min(local_lo_[v], o.local);
        local_hi_[v] = std::max(local_hi_[v], o.local);
        heavy_lo_[v] = std::min(heavy_lo_[v], infos_[o.tree].heavy);
        heavy_hi_[v] = std::max(heavy_hi_[v], infos_[o.tree].heavy);
        mass_lo_[v] = std::min(mass_lo_[v], infos_[o.tree].heavy_mass);
        mass_hi_[v] = std::max(mass_hi_[v], infos_[o.tree].heavy_mass);
      }
    }
    int link_edges = 0;
    for (const auto& e : sk_.edges) link_edges += e.link;
    fixed_ = lin_.c0() + lin_.coef(DescriptorKind::scalar, "n_int") * n +
             lin_.coef(DescriptorKind::scalar, "rank") * (static_cast<int>(sk_.edges.size()) - n + 1) +
             lin_.coef(DescriptorKind::scalar, "n_lnk_edges") * link_edges;
    // Suffix sums of heavy-atom ranges for the n bounds.
    suffix_heavy_lo_.assign(n + 1, 0);
    suffix_heavy_hi_.assign(n + 1, 0);
    for (int v = n - 1; v >= 0; --v) {
      suffix_heavy_lo_[v] = suffix_heavy_lo_[v + 1] + heavy_lo_[v];
      suffix_heavy_hi_[v] = suffix_heavy_hi_[v + 1] + heavy_hi_[v];
    }
    if (suffix_heavy_hi_[0] < spec_.n.lo || suffix_heavy_lo_[0] > spec_.n.hi) return;
    choice_.assign(n, -1);
    fc_count_.assign(infos_.size(), 0);
    na_count_.assign(ElementTable::standard().size(), 0);
    na_int_count_.assign(ElementTable::standard().size(), 0);
    heavy_now_ = 0;
    if (opt_.prune_by_prediction && !window_reachable(0)) {
      ++result_.stats.pruned;
      return;
    }
    assign(0);
  }

  bool in_vocabulary(const TreeInfo& t, int degree) const {
    const auto& table = ElementTable::standard();
    if (!reg_.find(DescriptorKind::fringe_tree, t.code)) return false;
    if (!reg_.find(DescriptorKind::degree_symbol, degree_symbol(t.root_element, degree))) return false;
    for (int el : t.elements)
      if (!reg_.find(DescriptorKind::element_count, table[el].symbol)) return false;
    for (const auto& k : t.leaf_keys)
      if (!reg_.find(DescriptorKind::leaf_adjacency_config, k)) return false;
    return true;
  }

  double pair_value(int ea, int da, int eb, int db, int m, bool link) {
    const auto key_tuple = std::make_tuple(ea, da, eb, db, m, link);
    auto it = pair_cache_.find(key_tuple);
    if (it != pair_cache_.end()) return it->second;
    const auto ec = make_edge_config(ea, da, eb, db, m);
    const auto ec_key = key(ec), ac_key = key(reduce(ec));
    double v = lin_.coef(DescriptorKind::interior_edge_config, ec_key) +
               lin_.coef(DescriptorKind::interior_adjacency_config, ac_key);
    if (link)
      v += lin_.coef(DescriptorKind::link_edge_config, ec_key) + lin_.coef(DescriptorKind::link_adjacency_config, ac_key);
    pair_cache_.emplace(key_tuple, v);
    return v;
  }

  // Range of reachable predictions once vertices [0, k) are fixed.
  bool window_reachable(int k) const {
    double lo = fixed_, hi = fixed_;
    double mass_lo = 0, mass_hi = 0, n_lo = 0, n_hi = 0;
    for (int v = 0; v < sk_.order(); ++v) {
      if (v < k) {
        const auto& o = options_[v][choice_[v]];
        lo += o.local;
        hi += o.local;
        mass_lo += infos_[o.tree].heavy_mass;
        mass_hi += infos_[o.tree].heavy_mass;
        n_lo += infos_[o.tree].heavy;
        n_hi += infos_[o.tree].heavy;
      } else {
        lo += local_lo_[v];
        hi += local_hi_[v];
        mass_lo += mass_lo_[v];
        mass_hi += mass_hi_[v];
        n_lo += heavy_lo_[v];
        n_hi += heavy_hi_[v];
      }
    }
    for (std::size_t e = 0; e < sk_.edges.size(); ++e) {
      const int u = sk_.edges[e].u, v = sk_.edges[e].v;
      const std::size_t width = options_[v].size();
      const auto& t = pair_[e];
      if (u < k && v < k) {
        const double x = t[choice_[u] * width + choice_[v]];
        lo += x;
        hi += x;
      } else if (u < k) {
        double a = t[choice_[u] * width], b = a;
        for (std::size_t j = 1; j < width; ++j) a = std::min(a, t[choice_[u] * width + j]), b = std::max(b, t[choice_[u] * width + j]);
        lo += a;
        hi += b;
      } else if (v < k) {
        double a = t[choice_[v]], b = a;
        for (std::size_t i = 1; i < options_[u].size(); ++i)
          a = std::min(a, t[i * width + choice_[v]]), b = std::max(b, t[i * width + choice_[v]]);
        lo += a;
        hi += b;
      } else {
        lo += pair_lo_[e];
        hi += pair_hi_[e];
      }
    }
    if (c_ms_ != 0) {
      n_lo = std::max(n_lo, static_cast<double>(std::max(spec_.n.lo, 1)));
      n_hi = std::min(n_hi, static_cast<double>(spec_.n.hi));
      if (n_lo > n_hi) return false;
      const double ms_lo = mass_lo / n_hi, ms_hi = mass_hi / n_lo;
      lo += std::min(c_ms_ * ms_lo, c_ms_ * ms_hi);
      hi += std::max(c_ms_ * ms_lo, c_ms_ * ms_hi);
    }
    const double raw_lo = lin_.to_raw(lo), raw_hi = lin_.to_raw(hi);
    const double slack = 1e-9 * (1 + std::abs(raw_lo) + std::abs(raw_hi));
    return raw_hi >= opt_.window_lo - slack && raw_lo <= opt_.window_hi + slack;
  }

  bool apply(int v, const TreeInfo& t, int sign) {
    bool ok = true;
    const int c = static_cast<int>(&t - infos_.data());
    fc_count_[c] += sign;
    ok &= fc_count_[c] <= fc_cap_[c];
    for (int el : t.elements) {
      na_count_[el] += sign;
      ok &= na_count_[el] <= na_cap_[el];
    }
    na_int_count_[t.root_element] += sign;
    ok &= na_int_count_[t.root_element] <= na_int_cap_[t.root_element];
    heavy_now_ += sign * t.heavy;
    ok &= heavy_now_ + suffix_heavy_lo_[v + 1] <= spec_.n.hi;
    ok &= heavy_now_ + suffix_heavy_hi_[v + 1] >= spec_.n.lo;
    return ok;
  }

  void assign(int v) {
    if (stopped_) return;
    if ((++ticks_ & 1023) == 0 && out_of_time()) return;
    if (v == sk_.order()) {
      leaf();
      return;
    }
    for (std::size_t i = 0; i < options_[v].size() && !stopped_; ++i) {
      const auto& t = infos_[options_[v][i].tree];
      choice_[v] = static_cast<int>(i);
      const bool ok = apply(v, t, +1);
      if (ok) {
        if (opt_.prune_by_prediction && !window_reachable(v + 1))
          ++result_.stats.pruned;
        else
          assign(v + 1);
      }
      apply(v, t, -1);
    }
    choice_[v] = -1;
  }

  void leaf() {
    if (++result_.stats.leaves > opt_.limits.max_leaves) {
      stop(GenerateStatus::leaf_limit);
      return;
    }
    if (out_of_time()) return;
    std::vector<int> tree_of(sk_.order());
    for (int v = 0; v < sk_.order(); ++v) tree_of[v] = options_[v][choice_[v]].tree;
    ChemicalGraph g;
    try {
      g = assemble(expand(sk_, mult_, infos_, tree_of));
    } catch (const GraphError&) {
      ++result_.stats.rejected;
      return;
    }
    if (!check_satisfies(g, spec_, rho_).pass) {
      ++result_.stats.rejected;
      return;
    }
    const auto p = profile(g, rho_);
    const auto f = featurize(p, reg_);
    if (opt_.require_vocabulary && !f.oov.empty()) {
      ++result_.stats.rejected;
      return;
    }
    const double y = model_.predict_raw(f.values);
    if (!(y >= opt_.window_lo && y <= opt_.window_hi)) {
      ++result_.stats.rejected;
      return;
    }
    auto cert = canonical_certificate(g);
    if (!seen_.insert(cert).second) {
      ++result_.stats.duplicates;
      return;
    }
    Candidate c{std::move(g), hex64(fnv1a(cert)), y, counters_of(p)};
    const bool more = !sink_ || sink_(c);
    result_.candidates.push_back(std::move(c));
    if (!more || static_cast<long>(result_.candidates.size()) >= opt_.limits.max_candidates)
      stop(GenerateStatus::candidate_limit);
  }

  const TopologicalSpec& spec_;
  const Model& model_;
  const DescriptorRegistry& reg_;
  const GenerateOptions& opt_;
  const CandidateSink& sink_;
  Linearized lin_;
  int rho_;
  std::vector<TreeInfo> infos_;
  std::vector<double> tree_local_;
  std::vector<int> fc_cap_, na_cap_, na_int_cap_;
  double c_n_ = 0, c_ms_ = 0;
  Clock::time_point start_;
  GenerateResult result_;
  GenerateStatus status_ = GenerateStatus::exhausted;
  bool stopped_ = false;
  unsigned long ticks_ = 0;

  std::vector<int> lengths_;
  std::vector<Slot> slots_;
  std::vector<int> q_;
  Skeleton sk_;
  std::vector<std::vector<int>> base_;
  std::vector<int> room_lo_, room_hi_;
  std::vector<int> mult_, bond_sum_, group_count2_, group_count3_;

  std::vector<int> degree_;
  std::vector<std::vector<Option>> options_;
  std::vector<std::vector<double>> pair_;
  std::vector<double> pair_lo_, pair_hi_;
  std::vector<double> local_lo_, local_hi_, mass_lo_, mass_hi_;
  std::vector<int> heavy_lo_, heavy_hi_, suffix_heavy_lo_, suffix_heavy_hi_;
  double fixed_ = 0;
  std::vector<int> choice_, fc_count_, na_count_, na_int_count_;
  int heavy_now_ = 0;
  std::map<std::tuple<int, int, int, int, int, bool>, double> pair_cache_;
  std::set<std::string> seen_;
};

}  // namespace

GenerateResult generate(const TopologicalSpec& spec, const Model& model, const DescriptorRegistry& registry,
                        const GenerateOptions& options, const CandidateSink& sink) {
  spec.validate();
  if (registry.size() != model.h.w.size() || registry.size() != model.standardizer.size())
    throw std::invalid_argument("model and registry dimensions differ");
  if (!model.registry_hash.empty() && model.registry_hash != registry.hash())
    throw std::invalid_argument("model was trained on a different descriptor registry");
  if (!registry.extras().empty()) throw std::invalid_argument("generation does not support covariate descriptors");
  if (model.rho != registry.rho()) throw std::invalid_argument("model and registry use different branch parameters");
  return Search(spec, model, registry, options, sink).run();
}

// ---------------------------------------------------------------------------
// Random expansions

std::optional<ChemicalGraph> sample_expansion(const TopologicalSpec& spec, int rho, std::mt19937_64& rng) {
  spec.validate();
  const auto& table = ElementTable::standard();
  const auto infos = tree_infos(spec);
  auto uniform = [&](int lo, int hi) { return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1))); };

  // Path lengths are drawn among the combinations whose bare skeleton meets
  // the n_int and n_lnk bounds; attached paths add neither link vertices nor
  // fewer vertices.
  std::vector<std::vector<int>> feasible;
  std::vector<int> lengths(spec.edges.size(), 1);
  std::function<void(std::size_t)> each_length = [&](std::size_t i) {
    if (feasible.size() >= 100000) return;
    if (i == spec.edges.size()) {
      const auto bare = build_skeleton(spec, lengths, {}, {});
      if (bare.order() <= spec.n_int.hi && spec.n_lnk.contains(link_vertex_count(bare)) &&
          empty_owners_ok(spec, lengths))
        feasible.push_back(lengths);
      return;
    }
    if (spec.edges[i].cls != SeedEdgeClass::t) return each_length(i + 1);
    for (int len = spec.edges[i].length.lo; len <= spec.edges[i].length.hi; ++len) {
      lengths[i] = len;
      each_length(i + 1);
    }
    lengths[i] = 1;
  };
  each_length(0);
  if (feasible.empty()) return std::nullopt;
  lengths = feasible[uniform(0, static_cast<int>(feasible.size()) - 1)];
  const auto slots = make_slots(spec, lengths);
  std::vector<int> q(slots.size(), 0);
  std::map<std::pair<int, int>, std::pair<int, int>> owners;  // (edge, seed) -> (count, longest)
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& s = slots[k];
    const auto& bl = s.edge >= 0 ? spec.edges[s.edge].bl : spec.vertices[s.seed].bl;
    const auto& ch = s.edge >= 0 ? spec.edges[s.edge].ch : spec.vertices[s.seed].ch;
    auto& [count, longest] = owners[{s.edge, s.seed}];
    if (count < bl.hi && ch.hi > 0 && uniform(0, 3) == 0) {
      q[k] = uniform(std::max(1, ch.lo), ch.hi);
      ++count;
      longest = std::max(longest, q[k]);
    }
  }
  for (const auto& [owner, stats] : owners) {
    const auto& bl = owner.first >= 0 ? spec.edges[owner.first].bl : spec.vertices[owner.second].bl;
    const auto& ch = owner.first >= 0 ? spec.edges[owner.first].ch : spec.vertices[owner.second].ch;
    if (!owner_ok(bl, ch, stats.first, stats.second)) return std::nullopt;
  }
  const auto sk = build_skeleton(spec, lengths, slots, q);
  const auto base = base_candidates(spec, sk, infos, rho);
  for (const auto& b : base)
    if (b.empty()) return std::nullopt;

  // Bond orders: mostly single, within each group's limits.
  std::vector<int> mult(sk.edges.size(), 1);
  std::vector<int> count2(sk.bd2.size(), 0), count3(sk.bd2.size(), 0);
  std::vector<int> order(sk.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int e : order) {
    const int g = sk.edges[e].group;
    const int roll = uniform(0, 9);
    int m = roll < 7 ? 1 : roll < 9 ? 2 : 3;
    if (m == 2 && count2[g] >= sk.bd2[g].hi) m = 1;
    if (m == 3 && count3[g] >= sk.bd3[g].hi) m = 1;
    mult[e] = m;
    count2[g] += m == 2;
    count3[g] += m == 3;
  }
  // Raise counts to the lower limits on the first eligible edges.
  for (std::size_t e = 0; e < sk.edges.size(); ++e) {
    const int g = sk.edges[e].group;
    if (mult[e] == 1 && count2[g] < sk.bd2[g].lo) mult[e] = 2, ++count2[g];
    else if (mult[e] == 1 && count3[g] < sk.bd3[g].lo) mult[e] = 3, ++count3[g];
  }
  for (std::size_t g = 0; g < sk.bd2.size(); ++g)
    if (!sk.bd2[g].contains(count2[g]) || !sk.bd3[g].contains(count3[g])) return std::nullopt;
  std::vector<int> bond_sum(sk.order(), 0);
  for (std::size_t e = 0; e < sk.edges.size(); ++e) bond_sum[sk.edges[e].u] += mult[e], bond_sum[sk.edges[e].v] += mult[e];

  std::vector<std::vector<int>> fits(sk.order());
  for (int v = 0; v < sk.order(); ++v) {
    for (int c : base[v])
      if (table[infos[c].root_element].valence - infos[c].child_bonds == bond_sum[v]) fits[v].push_back(c);
    if (fits[v].empty()) return std::nullopt;
  }
  // Fringe trees are redrawn on the same skeleton a few times; most misses
  // come from the atom-count bounds.
  std::vector<int> tree_of(sk.order());
  for (int attempt = 0; attempt < 64; ++attempt) {
    int heavy = 0;
    for (int v = 0; v < sk.order(); ++v) {
      tree_of[v] = fits[v][uniform(0, static_cast<int>(fits[v].size()) - 1)];
      heavy += infos[tree_of[v]].heavy;
    }
    if (!spec.n.contains(heavy)) continue;
    try {
      auto g = assemble(expand(sk, mult, infos, tree_of));
      if (check_satisfies(g, spec, rho).pass) return g;
    } catch (const GraphError&) {
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Verification

std::string VerifyReport::to_json() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& [name, ok] : checks) checks_json.push_back({{"check", name}, {"pass", ok}});
  nlohmann::json doc{{"pass", pass}, {"checks", checks_json}, {"oov", oov}, {"prediction", prediction}};
  doc["specification"] = nlohmann::json::parse(spec_report.to_json());
  return doc.dump(2) + "\n";
}

VerifyReport verify_roundtrip(const ChemicalGraph& g, const TopologicalSpec& spec, const Model& model,
                              const DescriptorRegistry& registry, double window_lo, double window_hi) {
  VerifyReport r;
  auto record = [&](const std::string& name, bool ok) {
    r.checks.push_back({name, ok});
    r.pass = r.pass && ok;
  };
  record("registry_matches_model", model.registry_hash.empty() || model.registry_hash == registry.hash());
  record("pmg_roundtrip", parse_pmg(serialize_pmg(g)) == g);
  const int rho = registry.rho();
  r.spec_report = check_satisfies(g, spec, rho);
  record("specification", r.spec_report.pass);
  const auto f = featurize(g, registry);
  r.oov = f.oov;
  record("features_in_vocabulary", f.oov.empty());
  r.prediction = model.predict_raw(f.values);
  record("prediction_in_window", r.prediction >= window_lo && r.prediction <= window_hi);
  return r;
}

}  // namespace polyinfer
