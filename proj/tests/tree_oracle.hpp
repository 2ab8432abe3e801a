#pragma once

// Brute-force rooted-tree isomorphism, independent of the canonical codes.

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "polyinfer/twolayer.hpp"

namespace polyinfer::testing {

// Rooted trees with up to `max_size` vertices over the given elements and
// bond orders, generated by attaching one new leaf at a time. Trees are not
// deduplicated; that is the point of comparing them.
inline void grow(RootedTree t, int max_size, const std::vector<int>& elements, std::vector<RootedTree>& out) {
  out.push_back(t);
  if (t.size() == max_size) return;
  for (int p = 0; p < t.size(); ++p)
    for (int el : elements)
      for (int m : {1, 2}) {
        RootedTree next = t;
        next.add(el, p, m);
        grow(next, max_size, elements, out);
      }
}

// Rooted isomorphism by trying every bijection between child lists.
inline bool rooted_isomorphic(const RootedTree& a, int u, const RootedTree& b, int v,
                              const std::vector<std::vector<int>>& ca, const std::vector<std::vector<int>>& cb) {
  if (a.element[u] != b.element[v]) return false;
  if (u != 0 && a.multiplicity[u] != b.multiplicity[v]) return false;
  if (ca[u].size() != cb[v].size()) return false;
  std::vector<int> perm(cb[v].size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) ok = rooted_isomorphic(a, ca[u][i], b, cb[v][perm[i]], ca, cb);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Sorted (element, bond order, depth, child count) per vertex; equal for
// isomorphic trees.
inline std::vector<std::array<int, 4>> tree_invariant(const RootedTree& t, const std::vector<std::vector<int>>& kids) {
  std::vector<int> depth(t.size(), 0);
  for (int v = 1; v < t.size(); ++v) depth[v] = depth[t.parent[v]] + 1;  // parents precede children
  std::vector<std::array<int, 4>> out;
  for (int v = 0; v < t.size(); ++v)
    out.push_back({t.element[v], v == 0 ? 0 : t.multiplicity[v], depth[v], static_cast<int>(kids[v].size())});
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace polyinfer::testing
