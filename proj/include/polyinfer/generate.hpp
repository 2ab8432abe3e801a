#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polyinfer/chemgraph.hpp"
#include "polyinfer/features.hpp"
#include "polyinfer/regress.hpp"
#include "polyinfer/topospec.hpp"

namespace polyinfer {

struct GenerateLimits {
  long max_candidates = 100;    // stop after this many emitted graphs
  double max_seconds = 60.0;
  long max_leaves = 50'000'000;  // complete assignments examined
};

enum class GenerateStatus { exhausted, candidate_limit, time_limit, leaf_limit };
std::string_view to_string(GenerateStatus s);

struct GenerateOptions {
  /// Target window in the property's original units.
  double window_lo = -std::numeric_limits<double>::infinity();
  double window_hi = std::numeric_limits<double>::infinity();
  GenerateLimits limits;
  /// Discard partial assignments whose reachable predictions miss the
  /// window. Turning it off leaves only the structural counters as pruning.
  bool prune_by_prediction = true;
  /// Reject graphs with counts that have no coordinate in the registry; the
  /// model says nothing about such descriptors.
  bool require_vocabulary = true;
};

struct Candidate {
  ChemicalGraph graph;
  std::string hash;  // FNV-1a of the canonical certificate
  double prediction = 0.0;
  std::map<std::string, long> counters;
};

struct GenerateStats {
  long skeletons = 0;      // seed expansions with bond orders fixed
  long leaves = 0;         // complete fringe assignments
  long pruned = 0;         // subtrees cut by prediction bounds
  long rejected = 0;       // leaves failing the full check, the vocabulary or the window
  long duplicates = 0;
};

struct GenerateResult {
  GenerateStatus status = GenerateStatus::exhausted;
  std::vector<Candidate> candidates;
  GenerateStats stats;
};

/// Called for each emitted graph; returning false stops the search.
using CandidateSink = std::function<bool(const Candidate&)>;

/// Enumerates graphs that expand the seed graph of `spec`, pass
/// check_satisfies at the model's branch parameter, and whose prediction lies
/// in the window. Search order: path lengths (ascending, first seed edge
/// outermost), attached paths, bond orders, then fringe trees in catalog
/// order. Emission order is deterministic. Throws std::invalid_argument when
/// the model and registry disagree or the registry needs covariates.
GenerateResult generate(const TopologicalSpec& spec, const Model& model, const DescriptorRegistry& registry,
                        const GenerateOptions& options = {}, const CandidateSink& sink = {});

/// One random expansion of the seed graph that passes check_satisfies, or
/// nullopt when the random choices led to a dead end.
std::optional<ChemicalGraph> sample_expansion(const TopologicalSpec& spec, int rho, std::mt19937_64& rng);

/// Atom-level construction used by the generator: every vertex of the
/// expanded seed graph with its fringe tree, and the expanded edges. The
/// connecting pair is the first link-edge in edge order.
struct ExpandedGraph {
  struct Vertex {
    RootedTree tree;  // root element is the atom's element
  };
  struct Bond {
    int u = 0, v = 0, multiplicity = 1;
    bool link = false;
  };
  std::vector<Vertex> vertices;
  std::vector<Bond> bonds;
};

/// Builds and validates the chemical graph; throws GraphError when invalid.
ChemicalGraph assemble(const ExpandedGraph& x);

struct VerifyReport {
  bool pass = true;
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::string> oov;
  double prediction = 0.0;
  CheckReport spec_report;

  std::string to_json() const;
};

/// Recomputes decomposition, specification check, features and prediction.
/// Out-of-vocabulary descriptors fail the "features_in_vocabulary" check.
VerifyReport verify_roundtrip(const ChemicalGraph& g, const TopologicalSpec& spec, const Model& model,
                              const DescriptorRegistry& registry, double window_lo, double window_hi);

}  // namespace polyinfer
