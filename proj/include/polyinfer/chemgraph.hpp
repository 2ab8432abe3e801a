#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace polyinfer {

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

struct Element {
  std::string symbol;  // token as written, e.g. "C", "S(2)"
  std::string base;    // symbol without the valence suffix
  int valence = 0;
  double mass = 0.0;
};

/// Catalog of element tokens. A suffixed token such as `S(6)` denotes the
/// element with exactly that valence; unsuffixed tokens carry the element's
/// only (or conventional) valence.
class ElementTable {
 public:
  explicit ElementTable(std::vector<Element> entries);

  static const ElementTable& standard();

  std::optional<int> find(std::string_view symbol) const;
  int id(std::string_view symbol) const;  // throws std::out_of_range
  const Element& operator[](int id) const { return entries_.at(id); }
  int size() const { return static_cast<int>(entries_.size()); }
  int hydrogen() const { return hydrogen_; }

  /// Total order used for canonical orientation: (base symbol, valence), with
  /// the token itself breaking ties such as `O` against `O(2)`.
  bool less(int a, int b) const;

 private:
  std::vector<Element> entries_;
  int hydrogen_ = -1;
};

inline const Element& element_of(int id) { return ElementTable::standard()[id]; }

// ---------------------------------------------------------------------------
// Plain undirected graphs
// ---------------------------------------------------------------------------

struct Edge {
  int u = 0;
  int v = 0;
  int other(int w) const { return w == u ? v : u; }
};

struct Incidence {
  int vertex;  // neighbour
  int edge;    // edge index
};

/// Simple undirected graph with stable edge indices.
class Graph {
 public:
  Graph() = default;
  Graph(int order, std::vector<Edge> edges);

  int order() const { return static_cast<int>(adjacency_.size()); }
  int size() const { return static_cast<int>(edges_.size()); }
  const Edge& edge(int e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Incidence> incident(int v) const { return adjacency_[v]; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  std::optional<int> find_edge(int u, int v) const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

bool is_connected(const Graph& g);

/// Number of connected components.
int component_count(const Graph& g);

/// r(G) = |E| - |V| + 1. Throws std::invalid_argument for disconnected graphs.
int rank(const Graph& g);

/// Per-edge bridge flags (Tarjan lowlink).
std::vector<bool> bridges(const Graph& g);

struct CoreSet {
  std::vector<int> edges;     // ascending edge indices
  std::vector<int> vertices;  // ascending vertex indices
};

/// Edges lying on a cycle or bridging two cyclic parts. Throws
/// std::invalid_argument when the graph is disconnected or acyclic.
CoreSet core_edges(const Graph& g);

/// Heights from iterated leaf removal. A leaf is a non-root vertex of degree 1.
/// Tree vertices get the round in which they are removed; a non-tree vertex
/// adjacent to tree vertices gets 1 + the largest neighbouring tree height;
/// any other vertex has no height.
std::vector<std::optional<int>> heights(const Graph& g, std::optional<int> root = {});

/// Vertices removed by the first `rounds` leaf-removal passes.
std::vector<bool> stripped_vertices(const Graph& g, int rounds);

/// k-lean test. For a cyclic graph every tree hanging from a core vertex must
/// contain at most one vertex of height k. An acyclic graph is treated as a
/// tree rooted at `root` (vertex 0 when not given).
bool k_lean(const Graph& g, int k, std::optional<int> root = {});

/// True iff some cycle contains every edge in `edge_set` and, for each member
/// e, every other member is a bridge of G - e. The empty set is circular.
bool is_circular_set(const Graph& g, std::span<const int> edge_set);

// ---------------------------------------------------------------------------
// Chemical graphs
// ---------------------------------------------------------------------------

enum class GraphErrorKind {
  syntax,
  unknown_element,
  duplicate_atom,
  unknown_atom,
  self_loop,
  duplicate_edge,
  bad_multiplicity,
  disconnected,
  valence,
  link_not_bond,
  link_not_circular,
  connect_not_link,
  hydrogen_only,
  empty,
};

std::string_view to_string(GraphErrorKind kind);

class GraphError : public std::runtime_error {
 public:
  GraphError(GraphErrorKind kind, const std::string& what, int line = 0);
  GraphErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  GraphErrorKind kind_;
  int line_;
};

struct Bond {
  int u = 0;  // vertex index, u < v
  int v = 0;
  int multiplicity = 1;
  bool link = false;
  auto operator<=>(const Bond&) const = default;
};

struct ValidationOptions {
  int allow_charge = 0;          // |beta_C(u) - val(alpha(u))| bound
  bool require_connected = true;
};

class GraphBuilder;

/// Atoms, bonds, link-edges and optional connecting vertices. Valid instances
/// are produced by GraphBuilder::build and are immutable afterwards.
class ChemicalGraph {
 public:
  ChemicalGraph() = default;  // empty placeholder; not a valid molecule
  int vertex_count() const { return static_cast<int>(element_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  int element(int v) const { return element_[v]; }
  int atom_id(int v) const { return atom_id_[v]; }
  const Bond& bond(int e) const { return bonds_[e]; }
  std::span<const Bond> bonds() const { return bonds_; }
  const Graph& topology() const { return topology_; }
  const std::optional<std::pair<int, int>>& connecting() const { return connecting_; }

  int bond_sum(int v) const;
  bool is_hydrogen(int v) const;
  int hydrogen_count() const;
  int heavy_count() const { return vertex_count() - hydrogen_count(); }
  std::vector<int> link_edges() const;

  bool operator==(const ChemicalGraph&) const;

 private:
  friend class GraphBuilder;

  std::vector<int> element_;
  std::vector<int> atom_id_;
  std::vector<Bond> bonds_;
  Graph topology_;
  std::optional<std::pair<int, int>> connecting_;
};

/// Mutable assembly of a chemical graph. Atom ids are arbitrary integers;
/// build() orders vertices by ascending id and bonds lexicographically.
class GraphBuilder {
 public:
  int add_atom(int atom_id, int element);
  int add_atom(int element);  // next free id
  void add_bond(int id1, int id2, int multiplicity);
  void mark_link(int id1, int id2);
  void set_connecting(int id1, int id2);

  ChemicalGraph build(const ValidationOptions& options = {}) const;

 private:
  struct PendingBond {
    int a, b, multiplicity;
  };
  std::vector<std::pair<int, int>> atoms_;  // (id, element)
  std::vector<PendingBond> bonds_;
  std::vector<std::pair<int, int>> links_;
  std::optional<std::pair<int, int>> connecting_;
  int next_id_ = 1;
};

bool validate_link_edges(const ChemicalGraph& g);

/// Hydrogen-suppressed view of a chemical graph.
struct HydrogenSuppressedGraph {
  Graph topology;
  std::vector<int> element;       // per vertex
  std::vector<int> hydrogens;     // attached hydrogen count per vertex
  std::vector<int> original;      // vertex -> vertex of the source graph
  std::vector<int> multiplicity;  // per edge
  std::vector<bool> link;         // per edge
  std::optional<std::pair<int, int>> connecting;

  int order() const { return topology.order(); }
};

HydrogenSuppressedGraph hydrogen_suppress(const ChemicalGraph& g);

/// Inverse of hydrogen_suppress up to atom numbering.
ChemicalGraph reattach_hydrogens(const HydrogenSuppressedGraph& h);

/// Isomorphism-invariant certificate of a chemical graph (elements, hydrogen
/// counts, bond multiplicities, link flags, connecting vertices). Two graphs
/// have equal certificates iff they are isomorphic.
std::string canonical_certificate(const HydrogenSuppressedGraph& h);
std::string canonical_certificate(const ChemicalGraph& g);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

// PMG text format ------------------------------------------------------------

ChemicalGraph parse_pmg(std::string_view text, const ValidationOptions& options = {});
ChemicalGraph read_pmg_file(const std::string& path, const ValidationOptions& options = {});
std::string serialize_pmg(const ChemicalGraph& g);

}  // namespace polyinfer
