#include "polyinfer/chemgraph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace polyinfer {

// ---------------------------------------------------------------------------
// ElementTable

ElementTable::ElementTable(std::vector<Element> entries) : entries_(std::move(entries)) {
  for (int i = 0; i < size(); ++i) {
    auto& e = entries_[i];
    if (e.valence < 1 || e.valence > 6)
      throw std::invalid_argument("valence out of [1,6] for " + e.symbol);
    const auto open = e.symbol.find('(');
    e.base = e.symbol.substr(0, open);
    if (open != std::string::npos) {
      const int suffix = std::stoi(e.symbol.substr(open + 1));
      if (suffix != e.valence)
        throw std::invalid_argument("suffix does not match valence for " + e.symbol);
    }
    if (e.symbol == "H") hydrogen_ = i;
    for (int j = 0; j < i; ++j)
      if (entries_[j].symbol == e.symbol)
        throw std::invalid_argument("duplicate element symbol " + e.symbol);
  }
}

const ElementTable& ElementTable::standard() {
  static const ElementTable table({
      {"H", "", 1, 1.008},    {"C", "", 4, 12.011},     {"N", "", 3, 14.007},
      {"O", "", 2, 15.999},   {"F", "", 1, 18.998},     {"Cl", "", 1, 35.45},
      {"Br", "", 1, 79.904},  {"I", "", 1, 126.904},    {"P", "", 5, 30.974},
      {"O(1)", "", 1, 15.999}, {"O(2)", "", 2, 15.999}, {"N(3)", "", 3, 14.007},
      {"Si(4)", "", 4, 28.085}, {"P(3)", "", 3, 30.974}, {"P(5)", "", 5, 30.974},
      {"S(2)", "", 2, 32.06}, {"S(4)", "", 4, 32.06},    {"S(6)", "", 6, 32.06},
  });
  return table;
}

std::optional<int> ElementTable::find(std::string_view symbol) const {
  for (int i = 0; i < size(); ++i)
    if (entries_[i].symbol == symbol) return i;
  return std::nullopt;
}

int ElementTable::id(std::string_view symbol) const {
  if (auto found = find(symbol)) return *found;
  throw std::out_of_range("unknown element symbol '" + std::string(symbol) + "'");
}

bool ElementTable::less(int a, int b) const {
  const auto& x = entries_[a];
  const auto& y = entries_[b];
  return std::tie(x.base, x.valence, x.symbol) < std::tie(y.base, y.valence, y.symbol);
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(int order, std::vector<Edge> edges) : edges_(std::move(edges)), adjacency_(order) {
  for (int e = 0; e < size(); ++e) {
    const auto [u, v] = edges_[e];
    if (u < 0 || v < 0 || u >= order || v >= order)
      throw std::invalid_argument("edge endpoint out of range");
    adjacency_[u].push_back({v, e});
    adjacency_[v].push_back({u, e});
  }
}

std::optional<int> Graph::find_edge(int u, int v) const {
  for (const auto& inc : adjacency_[u])
    if (inc.vertex == v) return inc.edge;
  return std::nullopt;
}

namespace {

// Component labels, ignoring edge `skip` when it is >= 0.
std::vector<int> components(const Graph& g, int skip, int* count) {
  std::vector<int> label(g.order(), -1);
  int c = 0;
  std::vector<int> stack;
  for (int s = 0; s < g.order(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& inc : g.incident(u)) {
        if (inc.edge == skip || label[inc.vertex] >= 0) continue;
        label[inc.vertex] = c;
        stack.push_back(inc.vertex);
      }
    }
    ++c;
  }
  if (count) *count = c;
  return label;
}

std::vector<bool> bridges_excluding(const Graph& g, int excluded) {
  const int n = g.order();
  std::vector<bool> result(g.size(), false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_edge) {
    disc[u] = low[u] = timer++;
    for (const auto& inc : g.incident(u)) {
      if (inc.edge == excluded || inc.edge == parent_edge) continue;
      const int v = inc.vertex;
      if (disc[v] < 0) {
        dfs(v, inc.edge);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u]) result[inc.edge] = true;
      } else {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (int s = 0; s < n; ++s)
    if (disc[s] < 0) dfs(s, -1);
  return result;
}

}  // namespace

bool is_connected(const Graph& g) { return component_count(g) <= 1; }

int component_count(const Graph& g) {
  int count = 0;
  components(g, -1, &count);
  return count;
}

int rank(const Graph& g) {
  if (!is_connected(g)) throw std::invalid_argument("rank: graph is disconnected");
  return g.size() - g.order() + 1;
}

std::vector<bool> bridges(const Graph& g) { return bridges_excluding(g, -1); }

CoreSet core_edges(const Graph& g) {
  if (!is_connected(g)) throw std::invalid_argument("core_edges: graph is disconnected");
  if (rank(g) == 0) throw std::invalid_argument("core_edges: graph is acyclic");
  // 2-core by peeling vertices of degree <= 1.
  std::vector<int> deg(g.order());
  std::vector<bool> gone(g.order(), false);
  std::vector<int> queue;
  for (int v = 0; v < g.order(); ++v) {
    deg[v] = g.degree(v);
    if (deg[v] <= 1) queue.push_back(v);
  }
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    if (gone[v]) continue;
    gone[v] = true;
    for (const auto& inc : g.incident(v))
      if (!gone[inc.vertex] && --deg[inc.vertex] <= 1) queue.push_back(inc.vertex);
  }
  CoreSet core;
  for (int e = 0; e < g.size(); ++e)
    if (!gone[g.edge(e).u] && !gone[g.edge(e).v]) core.edges.push_back(e);
  for (int v = 0; v < g.order(); ++v)
    if (!gone[v]) core.vertices.push_back(v);
  return core;
}

std::vector<std::optional<int>> heights(const Graph& g, std::optional<int> root) {
  const int n = g.order();
  std::vector<std::optional<int>> h(n);
  std::vector<int> deg(n);
  std::vector<bool> removed(n, false), queued(n, false);
  std::vector<int> current;
  for (int v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    if (deg[v] == 1 && v != root) {
      current.push_back(v);
      queued[v] = true;
    }
  }
  for (int round = 0; !current.empty(); ++round) {
    for (int v : current) {
      removed[v] = true;
      h[v] = round;
    }
    std::vector<int> next;
    for (int v : current) {
      for (const auto& inc : g.incident(v)) {
        const int w = inc.vertex;
        if (removed[w]) continue;
        if (--deg[w] == 1 && w != root && !queued[w]) {
          queued[w] = true;
          next.push_back(w);
        }
      }
    }
    current = std::move(next);
  }
  for (int v = 0; v < n; ++v) {
    if (removed[v]) continue;
    for (const auto& inc : g.incident(v))
      if (removed[inc.vertex]) h[v] = std::max(h[v].value_or(0), *h[inc.vertex] + 1);
  }
  return h;
}

std::vector<bool> stripped_vertices(const Graph& g, int rounds) {
  std::vector<bool> out(g.order(), false);
  std::vector<int> deg(g.order());
  std::vector<int> current;
  for (int v = 0; v < g.order(); ++v) {
    deg[v] = g.degree(v);
    if (deg[v] == 1) current.push_back(v);
  }
  for (int round = 0; round < rounds && !current.empty(); ++round) {
    for (int v : current) out[v] = true;
    std::vector<int> next;
    for (int v : current)
      for (const auto& inc : g.incident(v)) {
        const int w = inc.vertex;
        if (out[w]) continue;
        if (--deg[w] == 1) next.push_back(w);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    current = std::move(next);
  }
  return out;
}

bool k_lean(const Graph& g, int k, std::optional<int> root) {
  if (!is_connected(g)) throw std::invalid_argument("k_lean: graph is disconnected");
  auto count_height = [k](const std::vector<std::optional<int>>& h, const std::vector<int>& members) {
    int c = 0;
    for (int v : members)
      if (h[v] == k) ++c;
    return c;
  };
  if (g.order() == 0) return true;
  if (rank(g) == 0) {
    const auto h = heights(g, root.value_or(0));
    std::vector<int> all(g.order());
    std::iota(all.begin(), all.end(), 0);
    return count_height(h, all) <= 1;
  }
  const auto core = core_edges(g);
  std::vector<bool> is_core_edge(g.size(), false), is_core_vertex(g.order(), false);
  for (int e : core.edges) is_core_edge[e] = true;
  for (int v : core.vertices) is_core_vertex[v] = true;
  // Each core vertex roots the tree of non-core edges hanging from it.
  for (int r : core.vertices) {
    std::vector<int> members{r};
    std::vector<int> local(g.order(), -1);
    local[r] = 0;
    std::vector<Edge> tree_edges;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int u = members[i];
      for (const auto& inc : g.incident(u)) {
        if (is_core_edge[inc.edge] || local[inc.vertex] >= 0) continue;
        local[inc.vertex] = static_cast<int>(members.size());
        members.push_back(inc.vertex);
        tree_edges.push_back({local[u], local[inc.vertex]});
      }
    }
    if (members.size() == 1) continue;
    const Graph tree(static_cast<int>(members.size()), tree_edges);
    const auto h = heights(tree, 0);
    std::vector<int> all(members.size());
    std::iota(all.begin(), all.end(), 0);
    if (count_height(h, all) > 1) return false;
  }
  return true;
}

bool is_circular_set(const Graph& g, std::span<const int> edge_set) {
  if (edge_set.empty()) return true;
  const auto base = bridges(g);
  for (int e : edge_set)
    if (base[e]) return false;  // not on any cycle
  for (int e : edge_set) {
    const auto without = bridges_excluding(g, e);
    for (int f : edge_set)
      if (f != e && !without[f]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Errors

std::string_view to_string(GraphErrorKind kind) {
  switch (kind) {
    case GraphErrorKind::syntax: return "syntax";
    case GraphErrorKind::unknown_element: return "unknown element";
    case GraphErrorKind::duplicate_atom: return "duplicate atom";
    case GraphErrorKind::unknown_atom: return "unknown atom";
    case GraphErrorKind::self_loop: return "self-loop";
    case GraphErrorKind::duplicate_edge: return "duplicate edge";
    case GraphErrorKind::bad_multiplicity: return "bad multiplicity";
    case GraphErrorKind::disconnected: return "disconnected graph";
    case GraphErrorKind::valence: return "valence violation";
    case GraphErrorKind::link_not_bond: return "link is not a bond";
    case GraphErrorKind::link_not_circular: return "link-edge set not circular";
    case GraphErrorKind::connect_not_link: return "connecting pair is not a link-edge";
    case GraphErrorKind::hydrogen_only: return "hydrogen-only graph";
    case GraphErrorKind::empty: return "empty graph";
  }
  return "unknown";
}

namespace {
std::string error_text(GraphErrorKind kind, const std::string& what, int line) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << to_string(kind);
  if (!what.empty()) os << ": " << what;
  return os.str();
}
}  // namespace

GraphError::GraphError(GraphErrorKind kind, const std::string& what, int line)
    : std::runtime_error(error_text(kind, what, line)), kind_(kind), line_(line) {}

// ---------------------------------------------------------------------------
// ChemicalGraph

int ChemicalGraph::bond_sum(int v) const {
  int sum = 0;
  for (const auto& inc : topology_.incident(v)) sum += bonds_[inc.edge].multiplicity;
  return sum;
}

bool ChemicalGraph::is_hydrogen(int v) const {
  return element_[v] == ElementTable::standard().hydrogen();
}

int ChemicalGraph::hydrogen_count() const {
  int c = 0;
  for (int v = 0; v < vertex_count(); ++v)
    if (is_hydrogen(v)) ++c;
  return c;
}

std::vector<int> ChemicalGraph::link_edges() const {
  std::vector<int> out;
  for (int e = 0; e < bond_count(); ++e)
    if (bonds_[e].link) out.push_back(e);
  return out;
}

bool ChemicalGraph::operator==(const ChemicalGraph& o) const {
  return element_ == o.element_ && atom_id_ == o.atom_id_ && bonds_ == o.bonds_ &&
         connecting_ == o.connecting_;
}

// ---------------------------------------------------------------------------
// GraphBuilder

int GraphBuilder::add_atom(int atom_id, int element) {
  atoms_.emplace_back(atom_id, element);
  next_id_ = std::max(next_id_, atom_id + 1);
  return atom_id;
}

int GraphBuilder::add_atom(int element) { return add_atom(next_id_, element); }

void GraphBuilder::add_bond(int id1, int id2, int multiplicity) {
  bonds_.push_back({id1, id2, multiplicity});
}

void GraphBuilder::mark_link(int id1, int id2) { links_.emplace_back(id1, id2); }

void GraphBuilder::set_connecting(int id1, int id2) { connecting_ = std::pair{id1, id2}; }

ChemicalGraph GraphBuilder::build(const ValidationOptions& options) const {
  const auto& table = ElementTable::standard();
  if (atoms_.empty()) throw GraphError(GraphErrorKind::empty, "no atoms");
  auto atoms = atoms_;
  std::sort(atoms.begin(), atoms.end());
  std::map<int, int> index;  // atom id -> vertex
  ChemicalGraph g;
  for (const auto& [id, element] : atoms) {
    if (index.count(id)) throw GraphError(GraphErrorKind::duplicate_atom, "atom " + std::to_string(id));
    if (element < 0 || element >= table.size())
      throw GraphError(GraphErrorKind::unknown_element, "element index " + std::to_string(element));
    index[id] = g.vertex_count();
    g.element_.push_back(element);
    g.atom_id_.push_back(id);
  }
  auto vertex_of = [&](int id) {
    auto it = index.find(id);
    if (it == index.end()) throw GraphError(GraphErrorKind::unknown_atom, "atom " + std::to_string(id));
    return it->second;
  };
  std::map<std::pair<int, int>, int> bond_index;
  std::vector<Bond> bonds;
  for (const auto& b : bonds_) {
    int u = vertex_of(b.a), v = vertex_of(b.b);
    if (u == v) throw GraphError(GraphErrorKind::self_loop, "atom " + std::to_string(b.a));
    if (b.multiplicity < 1 || b.multiplicity > 3)
      throw GraphError(GraphErrorKind::bad_multiplicity, std::to_string(b.multiplicity));
    if (u > v) std::swap(u, v);
    if (!bond_index.emplace(std::pair{u, v}, 0).second)
      throw GraphError(GraphErrorKind::duplicate_edge,
                       std::to_string(b.a) + "-" + std::to_string(b.b));
    bonds.push_back({u, v, b.multiplicity, false});
  }
  std::sort(bonds.begin(), bonds.end());
  for (std::size_t e = 0; e < bonds.size(); ++e) bond_index[{bonds[e].u, bonds[e].v}] = static_cast<int>(e);
  for (const auto& [a, b] : links_) {
    int u = vertex_of(a), v = vertex_of(b);
    if (u > v) std::swap(u, v);
    auto it = bond_index.find({u, v});
    if (it == bond_index.end())
      throw GraphError(GraphErrorKind::link_not_bond, std::to_string(a) + "-" + std::to_string(b));
    if (bonds[it->second].link)
      throw GraphError(GraphErrorKind::duplicate_edge, "link " + std::to_string(a) + "-" + std::to_string(b));
    bonds[it->second].link = true;
  }
  if (connecting_) {
    int u = vertex_of(connecting_->first), v = vertex_of(connecting_->second);
    if (u > v) std::swap(u, v);
    auto it = bond_index.find({u, v});
    if (it == bond_index.end() || !bonds[it->second].link)
      throw GraphError(GraphErrorKind::connect_not_link,
                       std::to_string(connecting_->first) + "-" + std::to_string(connecting_->second));
    g.connecting_ = std::pair{u, v};
  }
  std::vector<Edge> edges;
  for (const auto& b : bonds) edges.push_back({b.u, b.v});
  g.bonds_ = std::move(bonds);
  g.topology_ = Graph(g.vertex_count(), std::move(edges));

  if (g.hydrogen_count() == g.vertex_count())
    throw GraphError(GraphErrorKind::hydrogen_only, "");
  if (options.require_connected && !is_connected(g.topology_))
    throw GraphError(GraphErrorKind::disconnected,
                     std::to_string(component_count(g.topology_)) + " components");
  for (int v = 0; v < g.vertex_count(); ++v) {
    const int charge = g.bond_sum(v) - table[g.element_[v]].valence;
    if (std::abs(charge) > options.allow_charge)
      throw GraphError(GraphErrorKind::valence,
                       "atom " + std::to_string(g.atom_id_[v]) + " (" + table[g.element_[v]].symbol +
                           ") has bond sum " + std::to_string(g.bond_sum(v)));
  }
  if (!validate_link_edges(g))
    throw GraphError(GraphErrorKind::link_not_circular, "");
  return g;
}

bool validate_link_edges(const ChemicalGraph& g) {
  const auto links = g.link_edges();
  return is_circular_set(g.topology(), links);
}

// ---------------------------------------------------------------------------
// Hydrogen suppression

HydrogenSuppressedGraph hydrogen_suppress(const ChemicalGraph& g) {
  HydrogenSuppressedGraph h;
  std::vector<int> local(g.vertex_count(), -1);
  for (int v = 0; v < g.vertex_count(); ++v) {
    if (g.is_hydrogen(v)) continue;
    local[v] = static_cast<int>(h.element.size());
    h.element.push_back(g.element(v));
    h.original.push_back(v);
    h.hydrogens.push_back(0);
  }
  std::vector<Edge> edges;
  for (const auto& b : g.bonds()) {
    const int u = local[b.u], v = local[b.v];
    if (u >= 0 && v >= 0) {
      edges.push_back({u, v});
      h.multiplicity.push_back(b.multiplicity);
      h.link.push_back(b.link);
    } else if (u >= 0) {
      ++h.hydrogens[u];
    } else if (v >= 0) {
      ++h.hydrogens[v];
    }
  }
  h.topology = Graph(static_cast<int>(h.element.size()), std::move(edges));
  if (g.connecting()) h.connecting = std::pair{local[g.connecting()->first], local[g.connecting()->second]};
  return h;
}

ChemicalGraph reattach_hydrogens(const HydrogenSuppressedGraph& h) {
  const int hydrogen = ElementTable::standard().hydrogen();
  GraphBuilder b;
  for (int v = 0; v < h.order(); ++v) b.add_atom(v + 1, h.element[v]);
  for (int e = 0; e < h.topology.size(); ++e) {
    const auto& edge = h.topology.edge(e);
    b.add_bond(edge.u + 1, edge.v + 1, h.multiplicity[e]);
    if (h.link[e]) b.mark_link(edge.u + 1, edge.v + 1);
  }
  for (int v = 0; v < h.order(); ++v)
    for (int i = 0; i < h.hydrogens[v]; ++i) b.add_bond(v + 1, b.add_atom(hydrogen), 1);
  if (h.connecting) b.set_connecting(h.connecting->first + 1, h.connecting->second + 1);
  return b.build();
}

}  // namespace polyinfer
