#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "polyinfer/features.hpp"
#include "polyinfer/regress.hpp"

namespace polyinfer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { continuous, integer };
enum class Relation { le, eq, ge };

struct Variable {
  std::string name;
  double lower = 0.0;  // may be -kInf
  double upper = kInf;
  VarType type = VarType::continuous;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation rel = Relation::le;
  double rhs = 0.0;
};

struct Objective {
  bool minimize = true;
  std::vector<Term> terms;
};

/// Linear model with integrality marks. Names must be valid LP-file
/// identifiers (letters, digits and `_.()[]`, not starting with a digit).
class MilpModel {
 public:
  int add_variable(Variable v);
  int add_constraint(Constraint c);
  void set_objective(Objective o) { objective_ = std::move(o); }

  int variable_count() const { return static_cast<int>(variables_.size()); }
  int constraint_count() const { return static_cast<int>(constraints_.size()); }
  const Variable& variable(int j) const { return variables_.at(j); }
  Variable& variable(int j) { return variables_.at(j); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::optional<Objective>& objective() const { return objective_; }
  std::optional<int> find_variable(const std::string& name) const;

  /// Throws std::invalid_argument if a constraint names an unknown variable,
  /// a bound is NaN, or an integer variable has an infinite bound.
  void validate() const;

  bool operator==(const MilpModel&) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::optional<Objective> objective_;
};

enum class SolveStatus { feasible, infeasible, bound_limit };
std::string_view to_string(SolveStatus s);

struct SolveLimits {
  long max_nodes = 1'000'000;
  double max_seconds = 60.0;
  /// Models with at most this many variables are solved in exact rational
  /// arithmetic throughout; larger ones branch in floating point and
  /// confirm leaves exactly.
  int exact_variable_limit = 64;
};

struct MilpSolution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<mpq_class> exact;  // assignment, exact
  std::vector<double> values;    // same assignment rounded to double
  long nodes = 0;
};

/// Feasibility search: branch-and-bound over a bounded-variable primal
/// simplex (phase 1 only, Bland's rule). Any objective is ignored.
MilpSolution solve(const MilpModel& m, const SolveLimits& limits = {});

/// True iff `x` satisfies every bound, constraint and integrality mark in
/// exact rational arithmetic.
bool check_exact(const MilpModel& m, const std::vector<mpq_class>& x);

/// Exact rational value of a double.
inline mpq_class to_rational(double v) { return mpq_class(v); }

// --- inverse problem --------------------------------------------------------

struct InverseProblemSpec {
  Hyperplane h;               // acts on standardized descriptors
  double y_lo = 0, y_hi = 1;  // target window for w.x_hat + b
  Standardizer standardizer;
  std::vector<bool> integer;   // I_Z membership per descriptor
  std::vector<bool> nonneg;    // I_+ membership per descriptor
  std::vector<double> lower;   // l(j)
  std::vector<double> upper;   // u(j)
  std::vector<std::string> names;  // optional descriptor labels for comments
  double epsilon = 1e-5;

  /// Bounds default to the data range; integrality and sign follow the
  /// registry's count descriptors.
  static InverseProblemSpec from_model(const Model& model, const DescriptorRegistry& reg, double y_lo, double y_hi,
                                       double epsilon = 1e-5);
};

/// Variable layout of the inverse model: x(j) is variable j, x_hat(j) is
/// variable K + j.
MilpModel build_inverse_milp(const InverseProblemSpec& spec);

struct InverseSolution {
  MilpSolution solution;
  std::vector<double> x;      // raw descriptors
  std::vector<double> x_hat;  // standardized descriptors from the solver
  double y_hat = 0.0;         // w.x_hat + b
};

InverseSolution solve_inverse(const InverseProblemSpec& spec, const SolveLimits& limits = {});

// --- LP files ---------------------------------------------------------------

/// CPLEX LP text. Sections: optional `\` comment lines, `Minimize`/`Maximize`
/// with an `obj:` row (empty when the model has none), `Subject To` (omitted
/// when there are no constraints), `Bounds`, `Generals` (omitted when there
/// are no integer variables), `End`.
std::string emit_lp(const MilpModel& m, const std::string& comment = "");

/// Parser for the subset written by emit_lp. Throws std::invalid_argument.
MilpModel parse_lp(const std::string& text);

}  // namespace polyinfer
