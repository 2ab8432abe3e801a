#include "polyinfer/milp.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace polyinfer {

namespace {

bool valid_name(const std::string& name) {
  if (name.empty() || name.size() > 255) return false;
  const unsigned char first = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(first) || first == '_')) return false;
  for (unsigned char c : name)
    if (!(std::isalnum(c) || c == '_' || c == '.' || c == '(' || c == ')' || c == '[' || c == ']')) return false;
  return true;
}

}  // namespace

int MilpModel::add_variable(Variable v) {
  if (!valid_name(v.name)) throw std::invalid_argument("invalid variable name '" + v.name + "'");
  if (find_variable(v.name)) throw std::invalid_argument("duplicate variable '" + v.name + "'");
  if (std::isnan(v.lower) || std::isnan(v.upper)) throw std::invalid_argument("NaN bound on '" + v.name + "'");
  variables_.push_back(std::move(v));
  return variable_count() - 1;
}

int MilpModel::add_constraint(Constraint c) {
  if (!valid_name(c.name)) throw std::invalid_argument("invalid constraint name '" + c.name + "'");
  if (c.terms.empty()) throw std::invalid_argument("constraint '" + c.name + "' has no terms");
  for (const auto& t : c.terms)
    if (t.var < 0 || t.var >= variable_count())
      throw std::invalid_argument("constraint '" + c.name + "' references an undeclared variable");
  if (!std::isfinite(c.rhs)) throw std::invalid_argument("constraint '" + c.name + "' has a non-finite rhs");
  constraints_.push_back(std::move(c));
  return constraint_count() - 1;
}

std::optional<int> MilpModel::find_variable(const std::string& name) const {
  for (int j = 0; j < variable_count(); ++j)
    if (variables_[j].name == name) return j;
  return std::nullopt;
}

void MilpModel::validate() const {
  for (const auto& v : variables_) {
    if (std::isnan(v.lower) || std::isnan(v.upper)) throw std::invalid_argument("NaN bound on '" + v.name + "'");
    if (v.type == VarType::integer && (!std::isfinite(v.lower) || !std::isfinite(v.upper)))
      throw std::invalid_argument("integer variable '" + v.name + "' must have finite bounds");
  }
  for (const auto& c : constraints_)
    for (const auto& t : c.terms)
      if (t.var < 0 || t.var >= variable_count() || !std::isfinite(t.coef))
        throw std::invalid_argument("constraint '" + c.name + "' is malformed");
}

bool MilpModel::operator==(const MilpModel& o) const {
  auto same_terms = [](const std::vector<Term>& a, const std::vector<Term>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].var != b[i].var || a[i].coef != b[i].coef) return false;
    return true;
  };
  if (variables_.size() != o.variables_.size() || constraints_.size() != o.constraints_.size()) return false;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto &a = variables_[j], &b = o.variables_[j];
    if (a.name != b.name || a.lower != b.lower || a.upper != b.upper || a.type != b.type) return false;
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto &a = constraints_[i], &b = o.constraints_[i];
    if (a.name != b.name || a.rel != b.rel || a.rhs != b.rhs || !same_terms(a.terms, b.terms)) return false;
  }
  if (objective_.has_value() != o.objective_.has_value()) return false;
  if (objective_ && (objective_->minimize != o.objective_->minimize || !same_terms(objective_->terms, o.objective_->terms)))
    return false;
  return true;
}

// ---------------------------------------------------------------------------
// Inverse problem

InverseProblemSpec InverseProblemSpec::from_model(const Model& model, const DescriptorRegistry& reg, double y_lo,
                                                  double y_hi, double epsilon) {
  if (reg.size() != model.h.w.size()) throw std::invalid_argument("model and registry dimensions differ");
  InverseProblemSpec s;
  s.h = model.h;
  s.y_lo = y_lo;
  s.y_hi = y_hi;
  s.standardizer = model.standardizer;
  s.epsilon = epsilon;
  for (int j = 0; j < reg.size(); ++j) {
    s.integer.push_back(reg[j].integer);
    s.nonneg.push_back(reg[j].integer);
    s.lower.push_back(model.standardizer.min(j));
    s.upper.push_back(model.standardizer.max(j));
    s.names.push_back(std::string(to_string(reg[j].kind)) + ":" + reg[j].key);
  }
  return s;
}

MilpModel build_inverse_milp(const InverseProblemSpec& spec) {
  const int k = static_cast<int>(spec.h.w.size());
  if (!(spec.epsilon > 0)) throw std::invalid_argument("tolerance epsilon must be positive");
  if (!(spec.y_lo < spec.y_hi)) throw std::invalid_argument("target window must satisfy y_lo < y_hi");
  if (spec.standardizer.size() != k || static_cast<int>(spec.integer.size()) != k ||
      static_cast<int>(spec.nonneg.size()) != k || static_cast<int>(spec.lower.size()) != k ||
      static_cast<int>(spec.upper.size()) != k)
    throw std::invalid_argument("inverse problem arrays must all have length K");

  MilpModel m;
  for (int j = 0; j < k; ++j) {
    double lo = spec.lower[j], up = spec.upper[j];
    if (spec.nonneg[j]) lo = std::max(lo, 0.0);
    if (lo > up) throw std::invalid_argument("descriptor " + std::to_string(j + 1) + " has lower > upper");
    m.add_variable({"x_" + std::to_string(j + 1), lo, up, spec.integer[j] ? VarType::integer : VarType::continuous});
  }
  for (int j = 0; j < k; ++j) {
    if (spec.standardizer.constant(j))
      m.add_variable({"xh_" + std::to_string(j + 1), 0.0, 0.0, VarType::continuous});
    else
      m.add_variable({"xh_" + std::to_string(j + 1), -kInf, kInf, VarType::continuous});
  }
  const double eps = spec.epsilon;
  for (int j = 0; j < k; ++j) {
    if (spec.standardizer.constant(j)) continue;
    const double range = spec.standardizer.range(j);
    const double mn = spec.standardizer.min(j);
    const std::string id = std::to_string(j + 1);
    // (1-eps)(x - min)/R <= x_hat <= (1+eps)(x - min)/R
    m.add_constraint({"nlo_" + id, {{j, (1 - eps) / range}, {k + j, -1.0}}, Relation::le, (1 - eps) * mn / range});
    m.add_constraint({"nhi_" + id, {{k + j, 1.0}, {j, -(1 + eps) / range}}, Relation::le, -(1 + eps) * mn / range});
  }
  std::vector<Term> window;
  for (int j = 0; j < k; ++j) window.push_back({k + j, spec.h.w(j)});
  m.add_constraint({"win_lo", window, Relation::ge, spec.y_lo - spec.h.b});
  m.add_constraint({"win_hi", window, Relation::le, spec.y_hi - spec.h.b});
  return m;
}

InverseSolution solve_inverse(const InverseProblemSpec& spec, const SolveLimits& limits) {
  const MilpModel m = build_inverse_milp(spec);
  InverseSolution out;
  out.solution = solve(m, limits);
  if (out.solution.status != SolveStatus::feasible) return out;
  const int k = static_cast<int>(spec.h.w.size());
  mpq_class y = mpq_class(spec.h.b);
  for (int j = 0; j < k; ++j) {
    out.x.push_back(out.solution.values[j]);
    out.x_hat.push_back(out.solution.values[k + j]);
    y += mpq_class(spec.h.w(j)) * out.solution.exact[k + j];
  }
  out.y_hat = y.get_d();
  return out;
}

}  // namespace polyinfer
