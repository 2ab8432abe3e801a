#include "polyinfer/topospec.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "polyinfer/features.hpp"
#include "polyinfer/util.hpp"

namespace polyinfer {

using nlohmann::json;

Interval KeyBounds::of(const std::string& key) const {
  auto it = overrides.find(key);
  return it != overrides.end() ? it->second : each;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_interval(const Interval& i, const std::string& what) {
  if (i.lo < 0 || i.lo > i.hi) throw std::invalid_argument("bad bounds for " + what);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

void TopologicalSpec::validate() const {
  const auto& table = ElementTable::standard();
  for (const auto& el : elements)
    if (!table.find(el)) throw std::invalid_argument("unknown element " + el);
  const int nv = static_cast<int>(vertices.size());
  if (nv == 0) throw std::invalid_argument("seed graph has no vertices");
  for (const auto& v : vertices) {
    for (const auto& el : v.elements)
      if (!contains(elements, el)) throw std::invalid_argument("seed vertex " + v.name + " allows element " + el + " outside the element set");
    check_interval(v.bl, "bl[" + v.name + "]");
    check_interval(v.ch, "ch[" + v.name + "]");
    if (v.bl.hi > 1) throw std::invalid_argument("at most one attached path per seed vertex");
    if (v.fringe)
      for (const auto& c : *v.fringe)
        if (!contains(fringe_catalog, c)) throw std::invalid_argument("fringe code " + c + " of " + v.name + " is not in the catalog");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= nv || e.v >= nv || e.u == e.v)
      throw std::invalid_argument("seed edge " + e.name + " has bad end-vertices");
    if (!seen.insert({std::min(e.u, e.v), std::max(e.u, e.v)}).second)
      throw std::invalid_argument("parallel seed edge " + e.name);
    for (const auto* i : {&e.length, &e.bl, &e.ch, &e.bd2, &e.bd3}) check_interval(*i, e.name);
    if (e.length.lo < 1) throw std::invalid_argument("seed edge " + e.name + " needs length >= 1");
    if (e.cls == SeedEdgeClass::ew && (e.length != Interval{1, 1} || e.bl.hi > 0 || e.ch.hi > 0))
      throw std::invalid_argument("seed edge " + e.name + " of class ew cannot be expanded");
  }
  for (const auto& c : fringe_catalog)
    if (normalize_code(c) != c) throw std::invalid_argument("catalog code " + c + " is not canonical");
  if (edge_fringe)
    for (const auto& c : *edge_fringe)
      if (!contains(fringe_catalog, c)) throw std::invalid_argument("edge fringe code " + c + " is not in the catalog");
  for (const auto& [code, i] : fc) {
    if (!contains(fringe_catalog, code)) throw std::invalid_argument("fc bound for unknown code " + code);
    check_interval(i, "fc[" + code + "]");
  }
  // Global size bounds may be empty: small n_LB makes n* fall below n_int's
  // fixed lower bound, and such a specification is satisfied by no graph.
  for (const auto* i : {&n, &n_int, &n_lnk})
    if (i->lo < 0) throw std::invalid_argument("negative size bound");
  for (const auto* m : {&na, &na_int})
    for (const auto& [el, i] : *m) {
      if (!table.find(el)) throw std::invalid_argument("bound for unknown element " + el);
      check_interval(i, "na[" + el + "]");
    }
  for (const auto* k : {&ns_int, &ns_cnt, &ec_int, &ec_lnk, &ac_int, &ac_lnk, &ac_lf}) {
    check_interval(k->each, "key bounds");
    for (const auto& [key, i] : k->overrides) check_interval(i, key);
  }
}

const std::vector<std::string>& TopologicalSpec::fringe_for(int v) const {
  if (v >= 0 && vertices.at(v).fringe) return *vertices[v].fringe;
  if (v < 0 && edge_fringe) return *edge_fringe;
  return fringe_catalog;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json interval_json(const Interval& i) {
  return json::array({i.lo, i.hi == kUnbounded ? json(nullptr) : json(i.hi)});
}

Interval interval_from(const json& j) {
  Interval i;
  i.lo = j.at(0).get<int>();
  i.hi = j.at(1).is_null() ? kUnbounded : j.at(1).get<int>();
  return i;
}

json interval_map_json(const std::map<std::string, Interval>& m) {
  json out = json::object();
  for (const auto& [k, i] : m) out[k] = interval_json(i);
  return out;
}

std::map<std::string, Interval> interval_map_from(const json& j) {
  std::map<std::string, Interval> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = interval_from(it.value());
  return out;
}

json key_bounds_json(const KeyBounds& k) {
  json out{{"each", interval_json(k.each)}, {"overrides", interval_map_json(k.overrides)}};
  out["allowed"] = k.allowed ? json(std::vector<std::string>(k.allowed->begin(), k.allowed->end())) : json(nullptr);
  return out;
}

KeyBounds key_bounds_from(const json& j) {
  KeyBounds k;
  k.each = interval_from(j.at("each"));
  k.overrides = interval_map_from(j.at("overrides"));
  if (!j.at("allowed").is_null()) {
    const auto v = j.at("allowed").get<std::vector<std::string>>();
    k.allowed = std::set<std::string>(v.begin(), v.end());
  }
  return k;
}

const char* class_name(SeedEdgeClass c) { return c == SeedEdgeClass::t ? "t" : "ew"; }

SeedEdgeClass class_from(const std::string& s) {
  if (s == "t") return SeedEdgeClass::t;
  if (s == "ew") return SeedEdgeClass::ew;
  throw std::invalid_argument("unknown seed edge class " + s);
}

}  // namespace

std::string TopologicalSpec::to_json() const {
  json seed_vertices = json::array();
  for (const auto& v : vertices) {
    json jv{{"name", v.name}, {"elements", v.elements}, {"bl", interval_json(v.bl)}, {"ch", interval_json(v.ch)}};
    jv["fringe"] = v.fringe ? json(*v.fringe) : json(nullptr);
    seed_vertices.push_back(jv);
  }
  json seed_edges = json::array();
  for (const auto& e : edges)
    seed_edges.push_back({{"name", e.name},
                          {"u", e.u},
                          {"v", e.v},
                          {"class", class_name(e.cls)},
                          {"link", e.link},
                          {"length", interval_json(e.length)},
                          {"bl", interval_json(e.bl)},
                          {"ch", interval_json(e.ch)},
                          {"bd2", interval_json(e.bd2)},
                          {"bd3", interval_json(e.bd3)}});
  json doc{{"name", name},
           {"elements", elements},
           {"seed", {{"vertices", seed_vertices}, {"edges", seed_edges}}},
           {"fringe_catalog", fringe_catalog},
           {"fc", interval_map_json(fc)},
           {"n", interval_json(n)},
           {"n_int", interval_json(n_int)},
           {"n_lnk", interval_json(n_lnk)},
           {"na", interval_map_json(na)},
           {"na_int", interval_map_json(na_int)},
           {"ns_int", key_bounds_json(ns_int)},
           {"ns_cnt", key_bounds_json(ns_cnt)},
           {"ec_int", key_bounds_json(ec_int)},
           {"ec_lnk", key_bounds_json(ec_lnk)},
           {"ac_int", key_bounds_json(ac_int)},
           {"ac_lnk", key_bounds_json(ac_lnk)},
           {"ac_lf", key_bounds_json(ac_lf)}};
  doc["edge_fringe"] = edge_fringe ? json(*edge_fringe) : json(nullptr);
  return doc.dump(2) + "\n";
}

TopologicalSpec TopologicalSpec::from_json(const std::string& text) {
  const json doc = json::parse(text);
  TopologicalSpec s;
  s.name = doc.at("name").get<std::string>();
  s.elements = doc.at("elements").get<std::vector<std::string>>();
  for (const auto& jv : doc.at("seed").at("vertices")) {
    SeedVertex v;
    v.name = jv.at("name").get<std::string>();
    v.elements = jv.at("elements").get<std::vector<std::string>>();
    v.bl = interval_from(jv.at("bl"));
    v.ch = interval_from(jv.at("ch"));
    if (!jv.at("fringe").is_null()) v.fringe = jv.at("fringe").get<std::vector<std::string>>();
    s.vertices.push_back(std::move(v));
  }
  for (const auto& je : doc.at("seed").at("edges")) {
    SeedEdge e;
    e.name = je.at("name").get<std::string>();
    e.u = je.at("u").get<int>();
    e.v = je.at("v").get<int>();
    e.cls = class_from(je.at("class").get<std::string>());
    e.link = je.at("link").get<bool>();
    e.length = interval_from(je.at("length"));
    e.bl = interval_from(je.at("bl"));
    e.ch = interval_from(je.at("ch"));
    e.bd2 = interval_from(je.at("bd2"));
    e.bd3 = interval_from(je.at("bd3"));
    s.edges.push_back(std::move(e));
  }
  s.fringe_catalog = doc.at("fringe_catalog").get<std::vector<std::string>>();
  if (!doc.at("edge_fringe").is_null()) s.edge_fringe = doc.at("edge_fringe").get<std::vector<std::string>>();
  s.fc = interval_map_from(doc.at("fc"));
  s.n = interval_from(doc.at("n"));
  s.n_int = interval_from(doc.at("n_int"));
  s.n_lnk = interval_from(doc.at("n_lnk"));
  s.na = interval_map_from(doc.at("na"));
  s.na_int = interval_map_from(doc.at("na_int"));
  s.ns_int = key_bounds_from(doc.at("ns_int"));
  s.ns_cnt = key_bounds_from(doc.at("ns_cnt"));
  s.ec_int = key_bounds_from(doc.at("ec_int"));
  s.ec_lnk = key_bounds_from(doc.at("ec_lnk"));
  s.ac_int = key_bounds_from(doc.at("ac_int"));
  s.ac_lnk = key_bounds_from(doc.at("ac_lnk"));
  s.ac_lf = key_bounds_from(doc.at("ac_lf"));
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Instances

std::vector<std::string> element_set(const std::string& property) {
  if (property == "AmD") return {"H", "C", "N", "O", "Cl", "S(2)"};
  if (property == "HcL" || property == "Tg") return {"H", "C", "O", "N", "Cl", "S(2)", "S(6)"};
  if (property == "RfId") return {"H", "C", "O(1)", "O(2)", "N", "Cl", "Si(4)", "F"};
  if (property == "Prm") return {"H", "C", "O", "N", "Cl"};
  throw std::invalid_argument("unknown property tag '" + property + "'");
}

const std::vector<std::string>& placeholder_catalog() {
  static const std::vector<std::string> codes = [] {
    const char* raw[] = {
        "C", "C[H]", "C[H][H]", "O",                                       // psi 1-4
        "C[=O]", "N[H]", "C[Cl]", "C[C[H][H][H]]",                         // psi 5-8
        "C[H][C[H][H][H]]", "C[C[H][H][H]][C[H][H][H]]", "C[O[H]]", "N",   // psi 9-12
        "C[O[C[H][H][H]]]", "C[H][H][C[H][H][C[H][H][H]]]",                // psi 13-14
        "C[H][O[C[H][H][H]]]", "C[H][H][O[C[H][H][H]]]", "C[C[=O][O[H]]]",  // psi 15-17
    };
    std::vector<std::string> out;
    for (const char* c : raw) out.push_back(normalize_code(c));
    return out;
  }();
  return codes;
}

std::vector<std::string> read_catalog(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    try {
      out.push_back(normalize_code(line.substr(b, e - b + 1)));
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return out;
}

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

TopologicalSpec build_instance_ib(const std::string& property, int n_lb, std::vector<std::string> catalog) {
  if (n_lb < 1) throw std::invalid_argument("n_LB must be at least 1");
  if (catalog.empty()) catalog = placeholder_catalog();
  const auto& table = ElementTable::standard();
  TopologicalSpec s;
  s.name = "I_b(" + property + "," + std::to_string(n_lb) + ")";
  s.elements = element_set(property);
  const int n_star = n_lb + 10;
  const int grow = std::max(n_lb - 15, 0);
  const int grow2 = std::max(floor_div(n_lb - 15, 2), 0);
  const int grow4 = std::max(floor_div(n_lb - 15, 4), 0);
  const int l_lb = 2 + grow4;

  for (int i = 1; i <= 12; ++i) s.vertices.push_back({"v" + std::to_string(i), {"C"}, {0, 0}, {0, 0}, std::nullopt});
  auto link = [&](const std::string& name, int u, int v) {
    SeedEdge e{name, u, v, SeedEdgeClass::t, true, {l_lb, l_lb + 5}, {0, 3}, {0, 5}, {0, l_lb / 3}, {0, 0}};
    s.edges.push_back(e);
  };
  link("a1", 0, 6);
  link("a2", 3, 9);
  // Rings v1..v6 and v7..v12; a3, a5, ... single and a4, a6, ... double.
  for (int i = 3; i <= 14; ++i) {
    const int ring = i <= 8 ? 0 : 6;
    const int k = (i - 3) % 6;
    const int fixed = i % 2 == 0 ? 1 : 0;
    s.edges.push_back({"a" + std::to_string(i), ring + k, ring + (k + 1) % 6, SeedEdgeClass::ew, false, {1, 1},
                       {0, 0}, {0, 0}, {fixed, fixed}, {0, 0}});
  }

  s.fringe_catalog = std::move(catalog);
  for (std::size_t i = 0; i < s.fringe_catalog.size(); ++i) {
    const int index = static_cast<int>(i) + 1;
    const int ub = index <= 4 ? 12 + grow : index <= 12 ? 8 + grow2 : 5 + grow4;
    s.fc[s.fringe_catalog[i]] = {0, ub};
  }

  s.n = {n_lb, n_star};
  s.n_int = {14, n_star};
  s.n_lnk = {2, 2 + grow};
  for (const auto& el : s.elements) {
    const std::string base = table[table.id(el)].base;
    const int ub = base == "H" || base == "C" ? n_star : base == "O" || base == "N" ? 5 + grow : 2 + grow4;
    s.na[el] = {0, ub};
    if (base != "H") s.na_int[el] = {0, n_star};
  }
  std::set<std::string> symbols;
  for (const auto& el : s.elements)
    if (el != "H")
      for (int deg = 1; deg <= 4; ++deg) symbols.insert(el + ":" + std::to_string(deg));
  s.ns_int.allowed = symbols;
  s.ns_int.each = {0, n_star};
  s.ns_cnt.allowed = symbols;
  s.ns_cnt.each = {0, 2};
  for (auto* k : {&s.ec_int, &s.ec_lnk, &s.ac_int, &s.ac_lnk, &s.ac_lf}) k->each = {0, n_star};
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Checking

std::vector<CheckItem> CheckReport::failures() const {
  std::vector<CheckItem> out;
  for (const auto& i : items)
    if (!i.pass) out.push_back(i);
  return out;
}

std::string CheckReport::to_json() const {
  json items_json = json::array();
  for (const auto& i : items) {
    json j{{"name", i.name}, {"measured", i.measured}, {"bound", interval_json(i.bound)}, {"pass", i.pass}};
    if (!i.note.empty()) j["note"] = i.note;
    items_json.push_back(j);
  }
  return json{{"pass", pass}, {"items", items_json}}.dump(2) + "\n";
}

namespace {

class Checker {
 public:
  Checker(const TwoLayeredDecomposition& d, const TopologicalSpec& spec) : d_(d), spec_(spec) {
    const auto& hs = d.hs;
    code_.assign(hs.order(), "");
    for (const auto& ft : d.fringe_trees) code_[ft.root] = ft.code;
    used_vertex_.assign(hs.order(), false);
    used_edge_.assign(hs.topology.size(), false);
    image_.assign(spec.vertices.size(), -1);
    paths_.assign(spec.edges.size(), {});
    order_ = seed_order();
  }

  std::optional<SeedWitness> search() {
    if (map_vertex(0)) return witness_;
    return std::nullopt;
  }

  std::string why_not() const { return reason_; }

 private:
  std::vector<int> seed_order() const {
    const int nv = static_cast<int>(spec_.vertices.size());
    std::vector<bool> seen(nv, false);
    std::vector<int> order;
    for (int start = 0; start < nv; ++start) {
      if (seen[start]) continue;
      seen[start] = true;
      std::vector<int> queue{start};
      for (std::size_t i = 0; i < queue.size(); ++i) {
        order.push_back(queue[i]);
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& e : spec_.edges) {
            if ((e.cls == SeedEdgeClass::ew) != (pass == 0)) continue;
            const int other = e.u == queue[i] ? e.v : e.v == queue[i] ? e.u : -1;
            if (other >= 0 && !seen[other]) {
              seen[other] = true;
              queue.push_back(other);
            }
          }
      }
    }
    return order;
  }

  bool vertex_fits(int seed_vertex, int v) const {
    if (!d_.is_interior_vertex[v] || used_vertex_[v]) return false;
    const auto& sv = spec_.vertices[seed_vertex];
    const auto& symbol = ElementTable::standard()[d_.hs.element[v]].symbol;
    if (!sv.elements.empty() && !contains(sv.elements, symbol)) return false;
    return contains(spec_.fringe_for(seed_vertex), code_[v]);
  }

  static bool multiplicity_fits(const SeedEdge& e, int m) {
    return e.bd2.contains(m == 2 ? 1 : 0) && e.bd3.contains(m == 3 ? 1 : 0);
  }

  // Interior edge joining the images of the end-vertices of a mapped ew edge.
  std::optional<int> ew_edge(const SeedEdge& e) const {
    const auto found = d_.hs.topology.find_edge(image_[e.u], image_[e.v]);
    if (!found || !d_.is_interior_edge[*found] || used_edge_[*found]) return std::nullopt;
    if (d_.hs.link[*found] != e.link || !multiplicity_fits(e, d_.hs.multiplicity[*found])) return std::nullopt;
    return found;
  }

  bool map_vertex(std::size_t k) {
    if (k == order_.size()) return map_path(0);
    const int s = order_[k];
    for (int v = 0; v < d_.hs.order(); ++v) {
      if (!vertex_fits(s, v)) continue;
      image_[s] = v;
      std::vector<int> taken;
      bool ok = true;
      for (const auto& e : spec_.edges) {
        if (e.cls != SeedEdgeClass::ew || (e.u != s && e.v != s)) continue;
        const int other = e.u == s ? e.v : e.u;
        if (image_[other] < 0) continue;
        auto edge = ew_edge(e);
        if (!edge) {
          ok = false;
          break;
        }
        used_edge_[*edge] = true;
        taken.push_back(*edge);
      }
      if (ok) {
        used_vertex_[v] = true;
        if (map_vertex(k + 1)) return true;
        used_vertex_[v] = false;
      }
      for (int e : taken) used_edge_[e] = false;
      image_[s] = -1;
    }
    return false;
  }

  bool map_path(std::size_t i) {
    while (i < spec_.edges.size() && spec_.edges[i].cls != SeedEdgeClass::t) ++i;
    if (i == spec_.edges.size()) return finish();
    const auto& e = spec_.edges[i];
    std::vector<int> path{image_[e.u]};
    return extend(i, path);
  }

  bool extend(std::size_t i, std::vector<int>& path) {
    const auto& e = spec_.edges[i];
    const int target = image_[e.v];
    const int length = static_cast<int>(path.size()) - 1;
    if (length >= e.length.hi) return false;
    for (const auto& inc : d_.hs.topology.incident(path.back())) {
      if (!d_.is_interior_edge[inc.edge] || used_edge_[inc.edge] || d_.hs.link[inc.edge] != e.link) continue;
      if (inc.vertex == target) {
        if (!e.length.contains(length + 1)) continue;
        path.push_back(target);
        used_edge_[inc.edge] = true;
        paths_[i] = path;
        if (map_path(i + 1)) return true;
        used_edge_[inc.edge] = false;
        path.pop_back();
        continue;
      }
      if (used_vertex_[inc.vertex] || !d_.is_interior_vertex[inc.vertex]) continue;
      used_vertex_[inc.vertex] = true;
      used_edge_[inc.edge] = true;
      path.push_back(inc.vertex);
      if (extend(i, path)) return true;
      path.pop_back();
      used_edge_[inc.edge] = false;
      used_vertex_[inc.vertex] = false;
    }
    return false;
  }

  bool fail(std::string why) {
    if (reason_.empty()) reason_ = std::move(why);
    return false;
  }

  // Remaining interior structure must be paths hanging from the skeleton.
  bool finish() {
    const auto& hs = d_.hs;
    const auto& g = hs.topology;
    // Anchor role of every skeleton vertex: seed vertex or inner vertex of a t path.
    std::vector<int> seed_of(hs.order(), -1), edge_of(hs.order(), -1);
    for (std::size_t s = 0; s < image_.size(); ++s) seed_of[image_[s]] = static_cast<int>(s);
    for (std::size_t i = 0; i < paths_.size(); ++i)
      for (std::size_t k = 1; k + 1 < paths_[i].size(); ++k) edge_of[paths_[i][k]] = static_cast<int>(i);
    for (int e : d_.interior_edges)
      if (!used_edge_[e] && used_vertex_[g.edge(e).u] && used_vertex_[g.edge(e).v])
        return fail("interior edge outside the seed expansion");

    std::vector<SeedWitness::Branch> branches;
    std::vector<bool> visited(hs.order(), false);
    std::vector<int> anchored(hs.order(), 0);
    for (int start : d_.interior_vertices) {
      if (used_vertex_[start] || visited[start]) continue;
      // Collect the component of unused interior vertices.
      std::vector<int> comp{start};
      visited[start] = true;
      std::vector<std::pair<int, int>> attachments;  // (anchor, component vertex)
      int inner_edges = 0;
      bool link_seen = false;
      for (std::size_t q = 0; q < comp.size(); ++q) {
        for (const auto& inc : g.incident(comp[q])) {
          if (!d_.is_interior_edge[inc.edge]) continue;
          link_seen |= hs.link[inc.edge];
          if (used_vertex_[inc.vertex]) {
            attachments.push_back({inc.vertex, comp[q]});
            continue;
          }
          ++inner_edges;
          if (!visited[inc.vertex]) {
            visited[inc.vertex] = true;
            comp.push_back(inc.vertex);
          }
        }
      }
      inner_edges /= 2;
      if (link_seen) return fail("link-edge on an attached path");
      if (attachments.size() != 1) return fail("attached structure touches the skeleton more than once");
      if (inner_edges != static_cast<int>(comp.size()) - 1) return fail("attached structure is not a path");
      // Walk the path from the attachment point; every step must be unique.
      const auto [anchor, first] = attachments.front();
      SeedWitness::Branch b;
      b.anchor = anchor;
      int prev = anchor, cur = first;
      while (cur >= 0) {
        b.path.push_back(cur);
        int next = -1, options = 0;
        for (const auto& inc : g.incident(cur))
          if (d_.is_interior_edge[inc.edge] && inc.vertex != prev && !used_vertex_[inc.vertex]) next = inc.vertex, ++options;
        if (options > 1) return fail("attached structure branches");
        prev = cur;
        cur = next;
      }
      if (b.path.size() != comp.size()) return fail("attached structure is not a path");
      if (seed_of[anchor] < 0 && edge_of[anchor] < 0) return fail("path attached to an end-vertex of a path");
      b.seed_edge = seed_of[anchor] >= 0 ? -1 : edge_of[anchor];
      if (++anchored[anchor] > 1) return fail("two paths attached at one vertex");
      branches.push_back(std::move(b));
    }

    auto bond_counts = [&](int a, int b, int& bd2, int& bd3) {
      const int m = hs.multiplicity[*g.find_edge(a, b)];
      bd2 += m == 2;
      bd3 += m == 3;
    };
    const auto& off_seed = spec_.fringe_for(-1);
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      if (spec_.edges[i].cls != SeedEdgeClass::t) continue;
      const auto& e = spec_.edges[i];
      const auto& p = paths_[i];
      int bd2 = 0, bd3 = 0, bl = 0, ch = 0;
      for (std::size_t k = 0; k + 1 < p.size(); ++k) bond_counts(p[k], p[k + 1], bd2, bd3);
      for (std::size_t k = 1; k + 1 < p.size(); ++k)
        if (!contains(off_seed, code_[p[k]])) return fail("fringe tree outside the allowed catalog on " + e.name);
      for (const auto& b : branches) {
        if (b.seed_edge != static_cast<int>(i)) continue;
        ++bl;
        ch = std::max(ch, static_cast<int>(b.path.size()));
        bond_counts(b.anchor, b.path[0], bd2, bd3);
        for (std::size_t k = 0; k + 1 < b.path.size(); ++k) bond_counts(b.path[k], b.path[k + 1], bd2, bd3);
      }
      if (!e.bl.contains(bl) || !e.ch.contains(ch) || !e.bd2.contains(bd2) || !e.bd3.contains(bd3))
        return fail("branch or bond bounds of " + e.name);
    }
    for (std::size_t s = 0; s < image_.size(); ++s) {
      int bl = 0, ch = 0;
      for (const auto& b : branches) {
        if (b.anchor != image_[s]) continue;
        ++bl;
        ch = std::max(ch, static_cast<int>(b.path.size()));
        int bd2 = 0, bd3 = 0;
        bond_counts(b.anchor, b.path[0], bd2, bd3);
        for (std::size_t k = 0; k + 1 < b.path.size(); ++k) bond_counts(b.path[k], b.path[k + 1], bd2, bd3);
        if (bd2 + bd3 > 0) return fail("multiple bond on a path attached to a seed vertex");
      }
      const auto& sv = spec_.vertices[s];
      if (!sv.bl.contains(bl) || !sv.ch.contains(ch)) return fail("branch bounds of " + sv.name);
    }
    for (const auto& b : branches)
      for (int v : b.path)
        if (!contains(off_seed, code_[v])) return fail("fringe tree outside the allowed catalog on an attached path");

    witness_.image = image_;
    witness_.paths = paths_;
    for (std::size_t i = 0; i < spec_.edges.size(); ++i)
      if (spec_.edges[i].cls == SeedEdgeClass::ew) witness_.paths[i] = {image_[spec_.edges[i].u], image_[spec_.edges[i].v]};
    witness_.branches = std::move(branches);
    return true;
  }

  const TwoLayeredDecomposition& d_;
  const TopologicalSpec& spec_;
  std::vector<std::string> code_;
  std::vector<bool> used_vertex_, used_edge_;
  std::vector<int> image_;
  std::vector<std::vector<int>> paths_;
  std::vector<int> order_;
  SeedWitness witness_;
  std::string reason_;
};

void add(CheckReport& r, std::string name, long measured, Interval bound, std::string note = {}) {
  const bool pass = bound.contains(measured);
  r.items.push_back({std::move(name), measured, bound, pass, std::move(note)});
  r.pass = r.pass && pass;
}

void add_keys(CheckReport& r, const std::string& family, const std::map<std::string, int>& counts, const KeyBounds& kb) {
  for (const auto& [key, count] : counts) {
    if (count == 0) continue;
    if (kb.allowed && !kb.allowed->count(key)) {
      add(r, family + "[" + key + "]", count, {0, 0}, "not in the declared set");
      continue;
    }
    add(r, family + "[" + key + "]", count, kb.of(key));
  }
  // Keys with a positive lower bound must be present.
  for (const auto& [key, bound] : kb.overrides)
    if (bound.lo > 0 && !counts.count(key)) add(r, family + "[" + key + "]", 0, bound);
  if (kb.each.lo > 0 && kb.allowed)
    for (const auto& key : *kb.allowed)
      if (!counts.count(key) && !kb.overrides.count(key)) add(r, family + "[" + key + "]", 0, kb.each);
}

}  // namespace

CheckReport check_satisfies(const ChemicalGraph& g, const TopologicalSpec& spec, int rho) {
  CheckReport r;
  const auto d = decompose(g, rho);
  const auto p = profile(d, g);
  const auto& hs = d.hs;
  const auto& table = ElementTable::standard();

  for (const auto& [el, count] : p.elements)
    if (!contains(spec.elements, el)) add(r, "element[" + el + "]", count, {0, 0}, "outside the element set");

  add(r, "n", p.n, spec.n);
  add(r, "n_int", p.n_int, spec.n_int);
  int n_lnk = 0;
  for (int v = 0; v < hs.order(); ++v) {
    int links = 0;
    for (const auto& inc : hs.topology.incident(v)) links += hs.link[inc.edge];
    n_lnk += links >= 2;
  }
  add(r, "n_lnk", n_lnk, spec.n_lnk);

  for (const auto& [el, bound] : spec.na) {
    auto it = p.elements.find(el);
    add(r, "na[" + el + "]", it == p.elements.end() ? 0 : it->second, bound);
  }
  std::map<std::string, int> interior_elements;
  for (int v : d.interior_vertices) ++interior_elements[table[hs.element[v]].symbol];
  for (const auto& [el, bound] : spec.na_int) {
    auto it = interior_elements.find(el);
    add(r, "na_int[" + el + "]", it == interior_elements.end() ? 0 : it->second, bound);
  }

  add_keys(r, "ns_int", p.degree_symbols, spec.ns_int);
  std::map<std::string, int> connecting;
  if (hs.connecting)
    for (int v : {hs.connecting->first, hs.connecting->second}) ++connecting[degree_symbol(hs.element[v], d.degree(v))];
  add_keys(r, "ns_cnt", connecting, spec.ns_cnt);
  add_keys(r, "ec_int", p.ec_int, spec.ec_int);
  add_keys(r, "ec_lnk", p.ec_lnk, spec.ec_lnk);
  add_keys(r, "ac_int", p.ac_int, spec.ac_int);
  add_keys(r, "ac_lnk", p.ac_lnk, spec.ac_lnk);
  add_keys(r, "ac_lf", p.ac_lf, spec.ac_lf);

  for (const auto& [code, count] : p.fringe)
    if (!contains(spec.fringe_catalog, code)) add(r, "fc[" + code + "]", count, {0, 0}, "not in the catalog");
  for (const auto& [code, bound] : spec.fc) {
    auto it = p.fringe.find(code);
    add(r, "fc[" + code + "]", it == p.fringe.end() ? 0 : it->second, bound);
  }

  Checker checker(d, spec);
  r.witness = checker.search();
  if (!r.witness) {
    r.items.push_back({"seed_expansion", 0, {1, 1}, false,
                       checker.why_not().empty() ? "no mapping of the seed graph" : checker.why_not()});
    r.pass = false;
  }
  return r;
}

}  // namespace polyinfer
