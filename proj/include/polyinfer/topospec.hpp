#pragma once

#include <climits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polyinfer/chemgraph.hpp"
#include "polyinfer/twolayer.hpp"

namespace polyinfer {

inline constexpr int kUnbounded = INT_MAX;

struct Interval {
  int lo = 0;
  int hi = kUnbounded;
  bool contains(long v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Edge classes of a seed graph. `t` edges are replaced by paths whose
/// length lies in the edge's length interval; `ew` edges stay single edges.
enum class SeedEdgeClass { t, ew };

struct SeedVertex {
  std::string name;
  std::vector<std::string> elements;  // allowed root elements; empty = any in the spec's element set
  Interval bl{0, 0};                  // number of attached paths Q (at most one per vertex)
  Interval ch{0, 0};                  // length of the attached path Q, 0 if none
  std::optional<std::vector<std::string>> fringe;  // allowed fringe codes; nullopt = catalog
  bool operator==(const SeedVertex&) const = default;
};

/// For a `t` edge: `length` bounds the number of edges of the replacing path
/// P, `bl` the number of inner vertices of P that carry an attached path Q,
/// `ch` the length of the longest such Q, and `bd2`/`bd3` the double and
/// triple bonds on P and its Q paths together. For an `ew` edge the length is
/// 1 and `bd2`/`bd3` bound whether the edge itself is double or triple.
struct SeedEdge {
  std::string name;
  int u = 0, v = 0;
  SeedEdgeClass cls = SeedEdgeClass::ew;
  bool link = false;
  Interval length{1, 1};
  Interval bl{0, 0};
  Interval ch{0, 0};
  Interval bd2{0, 0};
  Interval bd3{0, 0};
  bool operator==(const SeedEdge&) const = default;
};

/// Bounds on a family of counted keys (configurations, degree symbols).
/// When `allowed` is set, keys outside it may not occur at all.
struct KeyBounds {
  std::optional<std::set<std::string>> allowed;
  Interval each{0, kUnbounded};
  std::map<std::string, Interval> overrides;

  Interval of(const std::string& key) const;
  bool operator==(const KeyBounds&) const = default;
};

struct TopologicalSpec {
  std::string name;
  std::vector<std::string> elements;  // element set Lambda
  std::vector<SeedVertex> vertices;
  std::vector<SeedEdge> edges;
  std::vector<std::string> fringe_catalog;                // F, canonical codes
  std::optional<std::vector<std::string>> edge_fringe;  // codes allowed off the seed vertices; nullopt = F
  std::map<std::string, Interval> fc;                     // per catalog code

  Interval n;      // non-hydrogen atoms
  Interval n_int;  // interior vertices
  Interval n_lnk;  // vertices incident to at least two link-edges
  std::map<std::string, Interval> na;      // all atoms of an element, hydrogens included
  std::map<std::string, Interval> na_int;  // interior atoms of an element
  KeyBounds ns_int;  // degree symbols of interior vertices
  KeyBounds ns_cnt;  // degree symbols of the connecting vertices
  KeyBounds ec_int, ec_lnk, ac_int, ac_lnk, ac_lf;

  /// Throws std::invalid_argument on dangling references, LB > UB, unknown
  /// elements or codes, and malformed edges. The size bounds n, n_int and
  /// n_lnk may be empty intervals; no graph satisfies such a specification.
  void validate() const;

  /// Fringe codes allowed at seed vertex `v`, or off the seed when v < 0.
  const std::vector<std::string>& fringe_for(int v) const;

  /// Pretty-printed JSON with sorted keys; identical specs serialize to
  /// identical bytes.
  std::string to_json() const;
  static TopologicalSpec from_json(const std::string& text);

  bool operator==(const TopologicalSpec&) const = default;
};

/// Element set for a property tag: AmD, HcL, RfId, Tg or Prm.
std::vector<std::string> element_set(const std::string& property);

/// The 17 placeholder fringe trees used for instance I_b.
const std::vector<std::string>& placeholder_catalog();

/// Reads one code per line; blank lines and `#` comments are ignored. Codes
/// are normalized. Throws std::invalid_argument on a malformed code.
std::vector<std::string> read_catalog(const std::string& path);

/// Instance I_b: two benzene rings joined by two link paths, with every
/// bound evaluated for the given n_LB. An empty catalog selects the
/// placeholder catalog.
TopologicalSpec build_instance_ib(const std::string& property, int n_lb, std::vector<std::string> catalog = {});

// --- checking ---------------------------------------------------------------

struct CheckItem {
  std::string name;  // e.g. "na[O]" or "length[a1]"
  long measured = 0;
  Interval bound;
  bool pass = true;
  std::string note;
};

/// How the interior of a graph expands the seed graph. Vertex indices refer
/// to the hydrogen-suppressed graph.
struct SeedWitness {
  std::vector<int> image;               // seed vertex -> vertex
  std::vector<std::vector<int>> paths;  // seed edge -> vertices of its path, u side first
  struct Branch {
    int anchor = -1;         // vertex the path hangs from
    std::vector<int> path;   // new vertices, anchor side first
    int seed_edge = -1;      // owning t edge, or -1 when anchored at a seed vertex
  };
  std::vector<Branch> branches;
};

struct CheckReport {
  bool pass = true;
  std::vector<CheckItem> items;
  std::optional<SeedWitness> witness;

  std::vector<CheckItem> failures() const;
  std::string to_json() const;
};

/// Evaluates every bound of the specification on `g` decomposed at `rho`,
/// and searches for a seed expansion witnessing the interior structure.
CheckReport check_satisfies(const ChemicalGraph& g, const TopologicalSpec& spec, int rho);

}  // namespace polyinfer
