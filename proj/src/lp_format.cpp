// CPLEX LP writer and a reader for the same subset.

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

#include "polyinfer/milp.hpp"
#include "polyinfer/util.hpp"

namespace polyinfer {

namespace {

constexpr int kTermsPerLine = 6;

std::string bound_text(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  return format_double(v);
}

void write_terms(std::ostringstream& os, const MilpModel& m, const std::vector<Term>& terms) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0 && i % kTermsPerLine == 0) os << "\n   ";
    const double c = terms[i].coef;
    const bool negative = std::signbit(c);
    if (i == 0)
      os << (negative ? " - " : " ");
    else
      os << (negative ? " - " : " + ");
    os << format_double(std::abs(c)) << ' ' << m.variable(terms[i].var).name;
  }
}

}  // namespace

std::string emit_lp(const MilpModel& m, const std::string& comment) {
  m.validate();
  std::ostringstream os;
  std::istringstream comment_lines(comment);
  for (std::string line; std::getline(comment_lines, line);) os << "\\ " << line << '\n';
  const bool maximize = m.objective() && !m.objective()->minimize;
  os << (maximize ? "Maximize" : "Minimize") << "\n obj:";
  if (m.objective()) write_terms(os, m, m.objective()->terms);
  os << '\n';
  if (!m.constraints().empty()) {
    os << "Subject To\n";
    for (const auto& c : m.constraints()) {
      os << ' ' << c.name << ':';
      write_terms(os, m, c.terms);
      os << (c.rel == Relation::le ? " <= " : c.rel == Relation::ge ? " >= " : " = ") << format_double(c.rhs) << '\n';
    }
  }
  os << "Bounds\n";
  for (const auto& v : m.variables()) {
    if (v.lower == v.upper)
      os << ' ' << v.name << " = " << format_double(v.lower) << '\n';
    else if (v.lower == -kInf && v.upper == kInf)
      os << ' ' << v.name << " free\n";
    else
      os << ' ' << bound_text(v.lower) << " <= " << v.name << " <= " << bound_text(v.upper) << '\n';
  }
  bool any_integer = false;
  for (const auto& v : m.variables()) any_integer |= v.type == VarType::integer;
  if (any_integer) {
    os << "Generals\n";
    for (const auto& v : m.variables())
      if (v.type == VarType::integer) os << ' ' << v.name << '\n';
  }
  os << "End\n";
  return os.str();
}

namespace {

enum class Section { none, objective, constraints, bounds, generals, end };

struct Token {
  std::string text;
  int line;
};

bool is_number(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "-inf" || s == "infinity" || s == "+infinity" || s == "-infinity") return true;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' ||
                                                        s[0] == '-' || s[0] == '+');
}

double number_of(const Token& t) {
  const std::string& s = t.text;
  if (s == "inf" || s == "+inf" || s == "infinity" || s == "+infinity") return kInf;
  if (s == "-inf" || s == "-infinity") return -kInf;
  if (!is_number(s)) throw std::invalid_argument("line " + std::to_string(t.line) + ": expected number, got '" + s + "'");
  return std::strtod(s.c_str(), nullptr);
}

[[noreturn]] void fail(const Token& t, const std::string& why) {
  throw std::invalid_argument("line " + std::to_string(t.line) + ": " + why + " near '" + t.text + "'");
}

// Splits on whitespace; relations and the row label colon become tokens.
std::vector<Token> tokenize(const std::string& line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      if (i + 1 < line.size() && line[i + 1] == '=' && c != '=') op += '=', ++i;
      if (op == "<") op = "<=";
      if (op == ">") op = ">=";
      out.push_back({op, line_no});
      ++i;
      continue;
    }
    if (c == ':') {
      out.push_back({":", line_no});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != ':' && line[j] != '<' &&
           line[j] != '>' && line[j] != '=')
      ++j;
    out.push_back({line.substr(i, j - i), line_no});
    i = j;
  }
  return out;
}

class LpReader {
 public:
  explicit LpReader(const std::string& text) {
    std::istringstream in(text);
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '\\') continue;
      std::string lowered = line.substr(first);
      while (!lowered.empty() && std::isspace(static_cast<unsigned char>(lowered.back()))) lowered.pop_back();
      for (auto& ch : lowered) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      Section next = Section::none;
      if (lowered == "minimize" || lowered == "minimise" || lowered == "min") next = Section::objective, minimize_ = true;
      else if (lowered == "maximize" || lowered == "maximise" || lowered == "max") next = Section::objective, minimize_ = false;
      else if (lowered == "subject to" || lowered == "st" || lowered == "s.t.") next = Section::constraints;
      else if (lowered == "bounds") next = Section::bounds;
      else if (lowered == "generals" || lowered == "general") next = Section::generals;
      else if (lowered == "end") next = Section::end;
      if (next != Section::none) {
        order_.push_back(next);
        continue;
      }
      if (order_.empty() || order_.back() == Section::end)
        throw std::invalid_argument("line " + std::to_string(line_no) + ": text outside any section");
      auto toks = tokenize(line, line_no);
      auto& bucket = tokens_[order_.back()];
      bucket.insert(bucket.end(), toks.begin(), toks.end());
    }
    if (order_.empty() || order_.back() != Section::end) throw std::invalid_argument("missing End");
  }

  MilpModel run() {
    // Variables are declared in Bounds order, which emit_lp writes for every
    // variable; names seen only in rows are appended afterwards.
    parse_bounds();
    auto objective = parse_rows(tokens_[Section::objective], true);
    auto rows = parse_rows(tokens_[Section::constraints], false);
    for (const auto& t : tokens_[Section::generals]) {
      const int j = variable(t.text);
      var_[j].type = VarType::integer;
    }
    MilpModel m;
    for (auto& v : var_) m.add_variable(v);
    for (auto& r : rows) m.add_constraint(std::move(r));
    if (!objective.empty() && !objective.front().terms.empty())
      m.set_objective({minimize_, std::move(objective.front().terms)});
    return m;
  }

 private:
  int variable(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    var_.push_back({name, 0.0, kInf, VarType::continuous});
    index_[name] = static_cast<int>(var_.size()) - 1;
    return static_cast<int>(var_.size()) - 1;
  }

  void parse_bounds() {
    const auto& t = tokens_[Section::bounds];
    std::size_t i = 0;
    auto at = [&](std::size_t k) -> const Token& {
      if (k >= t.size()) fail(t.empty() ? Token{"", 0} : t.back(), "truncated bound");
      return t[k];
    };
    while (i < t.size()) {
      if (is_number(at(i).text)) {  // lo <= x [<= up]
        const double lo = number_of(at(i));
        if (at(i + 1).text != "<=") fail(at(i + 1), "expected <=");
        const int j = variable(at(i + 2).text);
        var_[j].lower = lo;
        i += 3;
        if (i < t.size() && t[i].text == "<=") {
          var_[j].upper = number_of(at(i + 1));
          i += 2;
        }
        continue;
      }
      const int j = variable(at(i).text);
      if (i + 1 < t.size() && (t[i + 1].text == "free" || t[i + 1].text == "Free")) {
        var_[j].lower = -kInf;
        var_[j].upper = kInf;
        i += 2;
        continue;
      }
      const std::string op = at(i + 1).text;
      const double v = number_of(at(i + 2));
      if (op == "=") var_[j].lower = var_[j].upper = v;
      else if (op == "<=") var_[j].upper = v;
      else if (op == ">=") var_[j].lower = v;
      else fail(at(i + 1), "expected relation");
      i += 3;
    }
  }

  std::vector<Constraint> parse_rows(const std::vector<Token>& t, bool objective) {
    std::vector<Constraint> rows;
    std::size_t i = 0;
    while (i < t.size()) {
      Constraint c;
      if (i + 1 < t.size() && t[i + 1].text == ":") {
        c.name = t[i].text;
        i += 2;
      } else {
        fail(t[i], "expected row label");
      }
      double sign = 1.0;
      double coef = 1.0;
      bool has_sign = false;
      bool closed = false;
      while (i < t.size()) {
        const Token& tok = t[i];
        if (i + 1 < t.size() && t[i + 1].text == ":") break;  // next row
        if (tok.text == "+" || tok.text == "-") {
          if (has_sign) fail(tok, "repeated sign");
          sign = tok.text == "-" ? -1.0 : 1.0;
          has_sign = true;
          ++i;
          continue;
        }
        if (tok.text == "<=" || tok.text == ">=" || tok.text == "=") {
          if (objective) fail(tok, "relation in objective");
          c.rel = tok.text == "<=" ? Relation::le : tok.text == ">=" ? Relation::ge : Relation::eq;
          if (i + 1 >= t.size()) fail(tok, "missing right-hand side");
          c.rhs = number_of(t[i + 1]);
          i += 2;
          closed = true;
          break;
        }
        if (is_number(tok.text)) {
          coef = number_of(tok);
          ++i;
          continue;
        }
        if (!c.terms.empty() && !has_sign) fail(tok, "expected + or - between terms");
        const double value = sign * coef;
        c.terms.push_back({variable(tok.text), value});
        sign = 1.0;
        has_sign = false;
        coef = 1.0;
        ++i;
      }
      if (!objective && !closed) fail(t.empty() ? Token{"", 0} : t[std::min(i, t.size() - 1)], "row without relation");
      rows.push_back(std::move(c));
    }
    return rows;
  }

  std::vector<Section> order_;
  std::map<Section, std::vector<Token>> tokens_;
  bool minimize_ = true;
  std::vector<Variable> var_;
  std::map<std::string, int> index_;
};

}  // namespace

MilpModel parse_lp(const std::string& text) { return LpReader(text).run(); }

}  // namespace polyinfer
