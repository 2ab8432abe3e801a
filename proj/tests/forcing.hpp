#pragma once

// A small specification whose whole candidate space is enumerated directly:
// a benzene ring v1..v6 whose vertices v1 and v4 are joined by a link path of
// two or three edges.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "polyinfer/features.hpp"
#include "polyinfer/regress.hpp"
#include "polyinfer/synthetic.hpp"
#include "polyinfer/topospec.hpp"

namespace polyinfer::testing {

inline TopologicalSpec forcing_spec() {
  TopologicalSpec s;
  s.name = "forcing";
  s.elements = element_set("Prm");
  const std::vector<std::string> ring_codes{normalize_code("C[H]"), normalize_code("C[Cl]")};
  for (int i = 0; i < 6; ++i) {
    SeedVertex v{"v" + std::to_string(i + 1), {"C"}, {0, 0}, {0, 0}, ring_codes};
    if (i == 0 || i == 3) v.fringe = std::vector<std::string>{"C"};
    s.vertices.push_back(v);
  }
  s.edges.push_back({"a1", 0, 3, SeedEdgeClass::t, true, {2, 3}, {0, 0}, {0, 0}, {0, 2}, {0, 0}});
  for (int k = 0; k < 6; ++k)
    s.edges.push_back({"r" + std::to_string(k + 1), k, (k + 1) % 6, SeedEdgeClass::ew, false, {1, 1}, {0, 0}, {0, 0},
                       {k % 2, k % 2}, {0, 0}});
  for (const char* c : {"C", "C[H]", "C[Cl]", "C[H][H]", "O", "N[H]"}) s.fringe_catalog.push_back(normalize_code(c));
  s.edge_fringe = std::vector<std::string>{normalize_code("C[H][H]"), normalize_code("C[H]"), "O", normalize_code("N[H]")};
  for (const auto& c : s.fringe_catalog) s.fc[c] = {0, kUnbounded};
  s.fc[normalize_code("C[Cl]")] = {0, 2};
  s.n = {1, 100};
  s.n_int = {0, 100};
  s.n_lnk = {0, 10};
  s.na["N"] = {0, 1};
  s.validate();
  return s;
}

struct ForcingEnumeration {
  long candidates = 0;                // assignments examined
  std::vector<ChemicalGraph> graphs;  // distinct satisfying graphs
};

// Builds every assignment of path length, path bond orders in {1, 2} and
// fringe trees from the per-vertex catalogs directly as PMG text, and keeps
// the distinct graphs that parse and pass check_satisfies.
inline ForcingEnumeration enumerate_forcing_all(const TopologicalSpec& spec) {
  const auto& table = ElementTable::standard();
  ForcingEnumeration out;
  std::set<std::string> seen;
  const auto& path = spec.edges[0];
  for (int len = path.length.lo; len <= path.length.hi; ++len) {
    const int inner = len - 1;
    std::vector<std::vector<std::string>> choices;
    for (int v = 0; v < 6; ++v) choices.push_back(spec.fringe_for(v));
    for (int k = 0; k < inner; ++k) choices.push_back(spec.fringe_for(-1));
    std::vector<int> mult(len, 1);
    std::vector<std::size_t> pick(choices.size(), 0);
    std::function<void(std::size_t)> bonds, trees;
    auto emit = [&] {
      ++out.candidates;
      std::string atoms, edges;
      int next = 7 + inner;
      for (std::size_t v = 0; v < choices.size(); ++v) {
        const auto t = parse_tree_code(choices[v][pick[v]]);
        std::vector<int> id(t.size());
        id[0] = static_cast<int>(v) + 1;
        atoms += "ATOM " + std::to_string(id[0]) + " " + table[t.element[0]].symbol + "\n";
        for (int k = 1; k < t.size(); ++k) {
          id[k] = next++;
          atoms += "ATOM " + std::to_string(id[k]) + " " + table[t.element[k]].symbol + "\n";
          edges += "BOND " + std::to_string(id[t.parent[k]]) + " " + std::to_string(id[k]) + " " +
                   std::to_string(t.multiplicity[k]) + "\n";
        }
      }
      for (int k = 0; k < 6; ++k)
        edges += "BOND " + std::to_string(k + 1) + " " + std::to_string((k + 1) % 6 + 1) + " " +
                 std::to_string(1 + k % 2) + "\n";
      std::vector<int> chain{1};
      for (int k = 0; k < inner; ++k) chain.push_back(7 + k);
      chain.push_back(4);
      for (int k = 0; k < len; ++k) {
        const auto a = std::to_string(chain[k]), b = std::to_string(chain[k + 1]);
        edges += "BOND " + a + " " + b + " " + std::to_string(mult[k]) + "\nLINK " + a + " " + b + "\n";
      }
      const std::string text = "PMG 1\n" + atoms + edges + "CONNECT 1 7\n";
      ChemicalGraph g;
      try {
        g = parse_pmg(text);
      } catch (const GraphError&) {
        return;
      }
      if (!check_satisfies(g, spec, 2).pass) return;
      if (seen.insert(canonical_certificate(g)).second) out.graphs.push_back(std::move(g));
    };
    trees = [&](std::size_t v) {
      if (v == choices.size()) return emit();
      for (pick[v] = 0; pick[v] < choices[v].size(); ++pick[v]) trees(v + 1);
    };
    bonds = [&](std::size_t k) {
      if (k == mult.size()) return trees(0);
      for (mult[k] = 1; mult[k] <= 2; ++mult[k]) bonds(k + 1);
    };
    bonds(0);
  }
  return out;
}

inline std::vector<ChemicalGraph> enumerate_forcing(const TopologicalSpec& spec) {
  return enumerate_forcing_all(spec).graphs;
}

inline long forcing_candidate_count() { return enumerate_forcing_all(forcing_spec()).candidates; }

struct ForcingModel {
  DescriptorRegistry registry;
  Model model;
};

// Registry and model trained on the given graphs labelled by the synthetic
// hidden property, so every graph of the space is in vocabulary.
inline ForcingModel forcing_model(const std::vector<ChemicalGraph>& graphs) {
  Dataset d;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    add_record(d, {"g" + std::to_string(i), graphs[i], hidden_property(profile(graphs[i], 2)) + 0.1 * (i % 7), {}});
  ForcingModel m;
  m.registry = build_registry(d, 2);
  m.model = train_model(d, m.registry, 1e-4);
  return m;
}

}  // namespace polyinfer::testing
