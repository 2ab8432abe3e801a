#include "polyinfer/twolayer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace polyinfer {

int RootedTree::add(int element_id, int parent_vertex, int bond) {
  element.push_back(element_id);
  parent.push_back(parent_vertex);
  multiplicity.push_back(bond);
  return size() - 1;
}

int RootedTree::heavy_height() const {
  const int hydrogen = ElementTable::standard().hydrogen();
  std::vector<int> depth(size(), 0);
  int best = 0;
  for (int v = 1; v < size(); ++v) {
    depth[v] = depth[parent[v]] + 1;  // parents precede children
    if (element[v] != hydrogen) best = std::max(best, depth[v]);
  }
  return best;
}

std::vector<std::vector<int>> RootedTree::children() const {
  std::vector<std::vector<int>> out(size());
  for (int v = 1; v < size(); ++v) out[parent[v]].push_back(v);
  return out;
}

namespace {

std::string encode(const RootedTree& t, const std::vector<std::vector<int>>& kids, int v) {
  std::vector<std::string> parts;
  parts.reserve(kids[v].size());
  for (int c : kids[v]) {
    std::string part = "[";
    if (t.multiplicity[c] == 2) part += '=';
    if (t.multiplicity[c] == 3) part += '#';
    part += encode(t, kids, c);
    part += ']';
    parts.push_back(std::move(part));
  }
  std::sort(parts.begin(), parts.end());
  std::string out = ElementTable::standard()[t.element[v]].symbol;
  for (const auto& p : parts) out += p;
  return out;
}

class CodeParser {
 public:
  explicit CodeParser(std::string_view text) : text_(text) {}

  RootedTree run() {
    RootedTree t;
    parse_tree(t, -1, 1);
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("bad tree code '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " +
                                why);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void parse_tree(RootedTree& t, int parent, int bond) {
    const std::size_t start = pos_;
    if (!std::isupper(static_cast<unsigned char>(peek()))) fail("expected element");
    ++pos_;
    while (std::islower(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '(') {
      while (pos_ < text_.size() && text_[pos_] != ')') ++pos_;
      if (peek() != ')') fail("unterminated valence suffix");
      ++pos_;
    }
    const auto element = ElementTable::standard().find(text_.substr(start, pos_ - start));
    if (!element) fail("unknown element '" + std::string(text_.substr(start, pos_ - start)) + "'");
    const int v = t.add(*element, parent, parent < 0 ? 0 : bond);
    while (peek() == '[') {
      ++pos_;
      int m = 1;
      if (peek() == '=') m = 2, ++pos_;
      else if (peek() == '#') m = 3, ++pos_;
      parse_tree(t, v, m);
      if (peek() != ']') fail("expected ']'");
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string canonical_code(const RootedTree& t) {
  if (t.size() == 0) throw std::invalid_argument("empty rooted tree");
  return encode(t, t.children(), 0);
}

RootedTree parse_tree_code(std::string_view code) { return CodeParser(code).run(); }

TwoLayeredDecomposition decompose(const ChemicalGraph& g, int rho) {
  if (rho < 1) throw std::invalid_argument("branch parameter must be >= 1");
  TwoLayeredDecomposition d;
  d.rho = rho;
  d.hs = hydrogen_suppress(g);
  const Graph& topo = d.hs.topology;
  const int n = topo.order();
  const auto stripped = stripped_vertices(topo, rho);
  d.is_interior_vertex.assign(n, false);
  for (int v = 0; v < n; ++v) {
    d.is_interior_vertex[v] = !stripped[v];
    (stripped[v] ? d.exterior_vertices : d.interior_vertices).push_back(v);
  }
  d.is_interior_edge.assign(topo.size(), false);
  for (int e = 0; e < topo.size(); ++e) {
    const bool interior = d.is_interior_vertex[topo.edge(e).u] && d.is_interior_vertex[topo.edge(e).v];
    d.is_interior_edge[e] = interior;
    (interior ? d.interior_edges : d.exterior_edges).push_back(e);
  }

  const int hydrogen = ElementTable::standard().hydrogen();
  d.owner.assign(n, -1);
  for (int u : d.interior_vertices) {
    FringeTree ft;
    ft.root = u;
    // Breadth-first over exterior vertices; parents are added before children.
    std::vector<std::pair<int, int>> queue{{u, ft.tree.add(d.hs.element[u], -1, 0)}};
    d.owner[u] = u;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const auto [v, tv] = queue[i];
      for (int k = 0; k < d.hs.hydrogens[v]; ++k) ft.tree.add(hydrogen, tv, 1);
      for (const auto& inc : topo.incident(v)) {
        const int w = inc.vertex;
        if (d.is_interior_vertex[w] || d.owner[w] >= 0) continue;
        d.owner[w] = u;
        queue.emplace_back(w, ft.tree.add(d.hs.element[w], tv, d.hs.multiplicity[inc.edge]));
      }
    }
    ft.code = canonical_code(ft.tree);
    d.fringe_trees.push_back(std::move(ft));
  }
  return d;
}

EdgeConfig make_edge_config(int a, int da, int b, int db, int m) {
  const auto& table = ElementTable::standard();
  if (table.less(b, a) || (a == b && db < da)) {
    std::swap(a, b);
    std::swap(da, db);
  }
  return {a, da, b, db, m};
}

AdjacencyConfig make_adjacency_config(int a, int b, int m) {
  if (ElementTable::standard().less(b, a)) std::swap(a, b);
  return {a, b, m};
}

EdgeConfig edge_config(const TwoLayeredDecomposition& d, int e) {
  if (e < 0 || e >= d.hs.topology.size() || !d.is_interior_edge[e])
    throw std::invalid_argument("edge " + std::to_string(e) + " is not an interior edge");
  const auto& edge = d.hs.topology.edge(e);
  return make_edge_config(d.hs.element[edge.u], d.degree(edge.u), d.hs.element[edge.v], d.degree(edge.v),
                          d.hs.multiplicity[e]);
}

std::string degree_symbol(int element, int degree) {
  return ElementTable::standard()[element].symbol + ":" + std::to_string(degree);
}

std::string key(const EdgeConfig& c) {
  return degree_symbol(c.a, c.da) + "," + degree_symbol(c.b, c.db) + "," + std::to_string(c.m);
}

std::string key(const AdjacencyConfig& c) {
  const auto& table = ElementTable::standard();
  return table[c.a].symbol + "," + table[c.b].symbol + "," + std::to_string(c.m);
}

namespace {

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_multiplicity(const std::string& s, std::string_view text) {
  if (s != "1" && s != "2" && s != "3") throw std::invalid_argument("bad multiplicity in '" + std::string(text) + "'");
  return s[0] - '0';
}

std::pair<int, int> parse_degree_symbol(const std::string& s, std::string_view text) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("expected element:degree in '" + std::string(text) + "'");
  const auto element = ElementTable::standard().find(s.substr(0, colon));
  const std::string degree = s.substr(colon + 1);
  if (!element || degree.size() != 1 || degree[0] < '1' || degree[0] > '6')
    throw std::invalid_argument("bad degree symbol in '" + std::string(text) + "'");
  return {*element, degree[0] - '0'};
}

}  // namespace

EdgeConfig parse_edge_config(std::string_view text) {
  const auto parts = split_commas(text);
  if (parts.size() != 3) throw std::invalid_argument("bad edge configuration '" + std::string(text) + "'");
  const auto [a, da] = parse_degree_symbol(parts[0], text);
  const auto [b, db] = parse_degree_symbol(parts[1], text);
  return make_edge_config(a, da, b, db, parse_multiplicity(parts[2], text));
}

AdjacencyConfig parse_adjacency_config(std::string_view text) {
  const auto parts = split_commas(text);
  if (parts.size() != 3) throw std::invalid_argument("bad adjacency configuration '" + std::string(text) + "'");
  const auto& table = ElementTable::standard();
  const auto a = table.find(parts[0]);
  const auto b = table.find(parts[1]);
  if (!a || !b) throw std::invalid_argument("unknown element in '" + std::string(text) + "'");
  return make_adjacency_config(*a, *b, parse_multiplicity(parts[2], text));
}

}  // namespace polyinfer
