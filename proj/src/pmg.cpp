#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "polyinfer/chemgraph.hpp"

namespace polyinfer {

namespace {

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

int parse_int(std::string_view word, int line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc{} || ptr != word.data() + word.size())
    throw GraphError(GraphErrorKind::syntax, "expected integer, got '" + std::string(word) + "'", line);
  return value;
}

}  // namespace

ChemicalGraph parse_pmg(std::string_view text, const ValidationOptions& options) {
  const auto& table = ElementTable::standard();
  GraphBuilder builder;
  std::map<int, int> atom_line;
  std::set<std::pair<int, int>> bond_seen;
  bool header = false;
  bool connect_seen = false;
  int line_no = 0;

  // Atom references are resolved after the whole document is read, so records
  // may appear in any order.
  std::vector<std::pair<int, int>> references;  // (atom id, line)
  auto check_atom = [&](int id, int line) { references.emplace_back(id, line); };
  struct LinkRecord {
    int a, b, line;
  };
  std::vector<LinkRecord> link_lines;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto words = split_words(line);
    if (words.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header) {
      if (words.size() != 2 || words[0] != "PMG" || words[1] != "1")
        throw GraphError(GraphErrorKind::syntax, "expected header 'PMG 1'", line_no);
      header = true;
      continue;
    }
    const auto keyword = words[0];
    auto expect_arity = [&](std::size_t n) {
      if (words.size() != n)
        throw GraphError(GraphErrorKind::syntax,
                         std::string(keyword) + " takes " + std::to_string(n - 1) + " fields", line_no);
    };
    if (keyword == "ATOM") {
      expect_arity(3);
      const int id = parse_int(words[1], line_no);
      const auto element = table.find(words[2]);
      if (!element)
        throw GraphError(GraphErrorKind::unknown_element, "'" + std::string(words[2]) + "'", line_no);
      if (!atom_line.emplace(id, line_no).second)
        throw GraphError(GraphErrorKind::duplicate_atom, "atom " + std::to_string(id), line_no);
      builder.add_atom(id, *element);
    } else if (keyword == "BOND") {
      expect_arity(4);
      const int a = parse_int(words[1], line_no);
      const int b = parse_int(words[2], line_no);
      const int m = parse_int(words[3], line_no);
      check_atom(a, line_no);
      check_atom(b, line_no);
      if (a == b) throw GraphError(GraphErrorKind::self_loop, "atom " + std::to_string(a), line_no);
      if (m < 1 || m > 3) throw GraphError(GraphErrorKind::bad_multiplicity, std::to_string(m), line_no);
      if (!bond_seen.emplace(std::min(a, b), std::max(a, b)).second)
        throw GraphError(GraphErrorKind::duplicate_edge, std::to_string(a) + "-" + std::to_string(b), line_no);
      builder.add_bond(a, b, m);
    } else if (keyword == "LINK") {
      expect_arity(3);
      const int a = parse_int(words[1], line_no);
      const int b = parse_int(words[2], line_no);
      link_lines.push_back({a, b, line_no});
      builder.mark_link(a, b);
    } else if (keyword == "CONNECT") {
      expect_arity(3);
      if (connect_seen) throw GraphError(GraphErrorKind::syntax, "more than one CONNECT line", line_no);
      connect_seen = true;
      const int a = parse_int(words[1], line_no);
      const int b = parse_int(words[2], line_no);
      check_atom(a, line_no);
      check_atom(b, line_no);
      builder.set_connecting(a, b);
    } else {
      throw GraphError(GraphErrorKind::syntax, "unknown record '" + std::string(keyword) + "'", line_no);
    }
    if (end == text.size()) break;
  }
  if (!header) throw GraphError(GraphErrorKind::syntax, "missing header 'PMG 1'", 1);
  for (const auto& [id, line] : references)
    if (!atom_line.count(id))
      throw GraphError(GraphErrorKind::unknown_atom, "atom " + std::to_string(id), line);
  for (const auto& [a, b, line] : link_lines)
    if (!bond_seen.count({std::min(a, b), std::max(a, b)}))
      throw GraphError(GraphErrorKind::link_not_bond, std::to_string(a) + "-" + std::to_string(b), line);
  return builder.build(options);
}

ChemicalGraph read_pmg_file(const std::string& path, const ValidationOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pmg(buffer.str(), options);
}

std::string serialize_pmg(const ChemicalGraph& g) {
  const auto& table = ElementTable::standard();
  std::ostringstream os;
  os << "PMG 1\n";
  for (int v = 0; v < g.vertex_count(); ++v) os << "ATOM " << g.atom_id(v) << ' ' << table[g.element(v)].symbol << '\n';
  for (const auto& b : g.bonds()) os << "BOND " << g.atom_id(b.u) << ' ' << g.atom_id(b.v) << ' ' << b.multiplicity << '\n';
  for (const auto& b : g.bonds())
    if (b.link) os << "LINK " << g.atom_id(b.u) << ' ' << g.atom_id(b.v) << '\n';
  if (g.connecting())
    os << "CONNECT " << g.atom_id(g.connecting()->first) << ' ' << g.atom_id(g.connecting()->second) << '\n';
  return os.str();
}

}  // namespace polyinfer
