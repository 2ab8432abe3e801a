#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "polyinfer/chemgraph.hpp"

namespace polyinfer {

/// Rooted chemical tree. Vertex 0 is the root; parent[0] == -1 and
/// multiplicity[v] is the bond order of the edge from v to its parent.
struct RootedTree {
  std::vector<int> element;
  std::vector<int> parent;
  std::vector<int> multiplicity;

  int size() const { return static_cast<int>(element.size()); }
  int add(int element_id, int parent_vertex, int bond);
  /// Largest depth of a non-hydrogen vertex.
  int heavy_height() const;
  std::vector<std::vector<int>> children() const;
};

/// Canonical code of a rooted tree.
///
/// Grammar: `tree := atom child*`, `child := '[' bond? tree ']'`, where
/// `atom` is an element token such as `C` or `S(2)` and `bond` is `=` for a
/// double and `#` for a triple bond. Children are sorted by their bracketed
/// text, so two trees share a code iff they are rooted-isomorphic.
/// Example: formaldehyde rooted at carbon is `C[=O][H][H]`.
std::string canonical_code(const RootedTree& t);

/// Parses a code produced by canonical_code (or any child order) back into a
/// tree. Throws std::invalid_argument on malformed input.
RootedTree parse_tree_code(std::string_view code);

/// Re-canonicalizes a code written with arbitrary child order.
inline std::string normalize_code(std::string_view code) { return canonical_code(parse_tree_code(code)); }

struct FringeTree {
  int root = -1;      // vertex of the hydrogen-suppressed graph
  RootedTree tree;    // root at index 0, hydrogens re-attached
  std::string code;
};

struct TwoLayeredDecomposition {
  int rho = 2;
  HydrogenSuppressedGraph hs;
  std::vector<bool> is_interior_vertex;  // per vertex of hs
  std::vector<bool> is_interior_edge;    // per edge of hs
  std::vector<int> interior_vertices;
  std::vector<int> exterior_vertices;
  std::vector<int> interior_edges;
  std::vector<int> exterior_edges;
  std::vector<int> owner;  // fringe-tree root owning each vertex, -1 if none
  std::vector<FringeTree> fringe_trees;  // one per interior vertex, ascending

  int degree(int v) const { return hs.topology.degree(v); }
};

/// Splits the hydrogen-suppressed graph into the vertices that survive `rho`
/// rounds of leaf stripping (interior) and the rest (exterior). Vertices on or
/// between cycles never become leaves and are always interior.
TwoLayeredDecomposition decompose(const ChemicalGraph& g, int rho);

struct EdgeConfig {
  int a = 0, da = 0, b = 0, db = 0, m = 1;
  auto operator<=>(const EdgeConfig&) const = default;
};

struct AdjacencyConfig {
  int a = 0, b = 0, m = 1;
  auto operator<=>(const AdjacencyConfig&) const = default;
};

/// Orientation-canonical edge configuration: (a,da) <= (b,db) under
/// (element order, degree).
EdgeConfig make_edge_config(int a, int da, int b, int db, int m);
AdjacencyConfig make_adjacency_config(int a, int b, int m);
inline AdjacencyConfig reduce(const EdgeConfig& c) { return {c.a, c.b, c.m}; }

/// Configuration of an interior edge; throws std::invalid_argument otherwise.
EdgeConfig edge_config(const TwoLayeredDecomposition& d, int e);

/// Keys used in registries and specifications, e.g. `C:3,N:2,1` and `C,N,1`.
std::string key(const EdgeConfig& c);
std::string key(const AdjacencyConfig& c);
EdgeConfig parse_edge_config(std::string_view text);
AdjacencyConfig parse_adjacency_config(std::string_view text);

/// Degree symbol `C:3` of an element and a degree.
std::string degree_symbol(int element, int degree);

}  // namespace polyinfer
