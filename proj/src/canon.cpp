// Canonical certificates by colour refinement with individualization.

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "polyinfer/chemgraph.hpp"

namespace polyinfer {

namespace {

struct LabelledGraph {
  const Graph* g;
  std::vector<std::string> vertex_label;
  std::vector<int> edge_label;
};

using Colouring = std::vector<int>;

// Assign dense ranks so that equal signatures share a colour and colours
// follow the signature order.
template <typename Sig>
Colouring dense_ranks(const std::vector<Sig>& sig) {
  const int n = static_cast<int>(sig.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return sig[a] < sig[b]; });
  Colouring c(n);
  int colour = -1;
  for (int i = 0; i < n; ++i) {
    if (i == 0 || sig[idx[i - 1]] < sig[idx[i]]) ++colour;
    c[idx[i]] = colour;
  }
  return c;
}

int class_count(const Colouring& c) {
  return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
}

Colouring refine(const LabelledGraph& lg, Colouring c) {
  const Graph& g = *lg.g;
  int classes = class_count(c);
  for (;;) {
    std::vector<std::pair<int, std::vector<std::pair<int, int>>>> sig(g.order());
    for (int v = 0; v < g.order(); ++v) {
      sig[v].first = c[v];
      for (const auto& inc : g.incident(v)) sig[v].second.emplace_back(lg.edge_label[inc.edge], c[inc.vertex]);
      std::sort(sig[v].second.begin(), sig[v].second.end());
    }
    Colouring next = dense_ranks(sig);
    const int next_classes = class_count(next);
    c = std::move(next);
    if (next_classes == classes) return c;
    classes = next_classes;
  }
}

Colouring individualize(const LabelledGraph& lg, const Colouring& c, int v) {
  std::vector<int> key(c.size());
  for (std::size_t w = 0; w < c.size(); ++w)
    key[w] = 2 * c[w] + (static_cast<int>(w) != v && c[w] == c[v] ? 1 : 0);
  return refine(lg, dense_ranks(key));
}

// Vertices of the first colour class with more than one member.
std::vector<int> target_cell(const Colouring& c) {
  std::vector<int> size(class_count(c), 0);
  for (int x : c) ++size[x];
  for (int colour = 0; colour < static_cast<int>(size.size()); ++colour) {
    if (size[colour] < 2) continue;
    std::vector<int> cell;
    for (int v = 0; v < static_cast<int>(c.size()); ++v)
      if (c[v] == colour) cell.push_back(v);
    return cell;
  }
  return {};
}

std::string leaf_certificate(const LabelledGraph& lg, const Colouring& c) {
  const Graph& g = *lg.g;
  std::vector<int> at(g.order());
  for (int v = 0; v < g.order(); ++v) at[c[v]] = v;
  std::string out = std::to_string(g.order()) + ";";
  for (int i = 0; i < g.order(); ++i) {
    out += lg.vertex_label[at[i]];
    out += ',';
  }
  std::vector<std::tuple<int, int, int>> edges;
  for (int e = 0; e < g.size(); ++e) {
    int a = c[g.edge(e).u], b = c[g.edge(e).v];
    if (a > b) std::swap(a, b);
    edges.emplace_back(a, b, lg.edge_label[e]);
  }
  std::sort(edges.begin(), edges.end());
  out += ';';
  for (const auto& [a, b, l] : edges) {
    out += std::to_string(a) + '-' + std::to_string(b) + ':' + std::to_string(l) + ',';
  }
  return out;
}

std::string first_leaf(const LabelledGraph& lg, Colouring c) {
  for (auto cell = target_cell(c); !cell.empty(); cell = target_cell(c)) c = individualize(lg, c, cell.front());
  return leaf_certificate(lg, c);
}

std::string search(const LabelledGraph& lg, const Colouring& c) {
  const auto cell = target_cell(c);
  if (cell.empty()) return leaf_certificate(lg, c);
  std::string best;
  std::set<std::string> seen;
  for (int v : cell) {
    const Colouring child = individualize(lg, c, v);
    // Equal first leaves under two siblings expose an automorphism mapping one
    // subtree onto the other, so the later sibling can be skipped.
    if (!seen.insert(first_leaf(lg, child)).second) continue;
    std::string cert = search(lg, child);
    if (best.empty() || cert < best) best = std::move(cert);
  }
  return best;
}

}  // namespace

std::string canonical_certificate(const HydrogenSuppressedGraph& h) {
  const auto& table = ElementTable::standard();
  LabelledGraph lg{&h.topology, {}, {}};
  for (int v = 0; v < h.order(); ++v) {
    std::string label = table[h.element[v]].symbol + "H" + std::to_string(h.hydrogens[v]);
    if (h.connecting && (h.connecting->first == v || h.connecting->second == v)) label += '*';
    lg.vertex_label.push_back(std::move(label));
  }
  for (int e = 0; e < h.topology.size(); ++e)
    lg.edge_label.push_back(h.multiplicity[e] * 2 + (h.link[e] ? 1 : 0));
  const Colouring initial = refine(lg, dense_ranks(lg.vertex_label));
  return search(lg, initial);
}

std::string canonical_certificate(const ChemicalGraph& g) {
  return canonical_certificate(hydrogen_suppress(g));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace polyinfer
