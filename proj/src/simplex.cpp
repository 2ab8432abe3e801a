// Feasibility branch-and-bound over a bounded-variable primal simplex.
//
// The LP routine is templated on the scalar: `double` with a fixed tolerance
// for large models, `mpq_class` (exact, zero tolerance) for small ones and for
// confirming integer leaves found in floating point.

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "polyinfer/milp.hpp"

namespace polyinfer {

namespace {

using Clock = std::chrono::steady_clock;

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static double tol() { return 1e-9; }
  static double from(double v) { return v; }
  static double floor(double v) { return std::floor(v); }
  static double ceil(double v) { return std::ceil(v); }
  static double to_double(double v) { return v; }
};

template <>
struct ScalarTraits<mpq_class> {
  static mpq_class tol() { return 0; }
  static mpq_class from(double v) { return mpq_class(v); }
  static mpq_class floor(const mpq_class& v) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
    return mpq_class(q);
  }
  static mpq_class ceil(const mpq_class& v) {
    mpz_class q;
    mpz_cdiv_q(q.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
    return mpq_class(q);
  }
  static double to_double(const mpq_class& v) { return v.get_d(); }
};

template <class T>
T abs_of(const T& v) {
  return v < 0 ? T(-v) : v;
}

/// Per-variable box; a missing side is infinite.
template <class T>
struct Box {
  std::vector<T> lo, up;
  std::vector<char> has_lo, has_up;
};

template <class T>
struct LpRow {
  std::vector<std::pair<int, T>> terms;
  Relation rel;
  T rhs;
};

enum class LpStatus { feasible, infeasible, timeout };

template <class T>
struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  std::vector<T> x;
};

template <class T>
class BoundedSimplex {
  using S = ScalarTraits<T>;

 public:
  BoundedSimplex(std::vector<LpRow<T>> rows, Box<T> box, Clock::time_point deadline)
      : rows_(std::move(rows)), box_(std::move(box)), deadline_(deadline) {}

  LpOutcome<T> run() {
    LpOutcome<T> out;
    const int n = static_cast<int>(box_.lo.size());
    if (!presolve()) return out;

    // Map each free-standing variable x onto non-negative columns y.
    //   lower finite: x = lo + y, y <= up - lo
    //   only upper:   x = up - y
    //   free:         x = y1 - y2
    struct Map {
      int col = -1, col2 = -1;
      T offset;
      int sign = 1;
    };
    std::vector<Map> map(n);
    std::vector<T> cap;        // column upper bounds (valid where has_cap)
    std::vector<char> has_cap;
    std::vector<char> active(n, 1);
    for (int j = 0; j < n; ++j) {
      if (box_.has_lo[j] && box_.has_up[j] && box_.lo[j] == box_.up[j]) {
        active[j] = 0;  // fixed, already substituted by presolve
        continue;
      }
      Map& m = map[j];
      m.col = static_cast<int>(cap.size());
      if (box_.has_lo[j]) {
        m.offset = box_.lo[j];
        cap.push_back(box_.has_up[j] ? T(box_.up[j] - box_.lo[j]) : T(0));
        has_cap.push_back(box_.has_up[j]);
      } else if (box_.has_up[j]) {
        m.offset = box_.up[j];
        m.sign = -1;
        cap.push_back(0);
        has_cap.push_back(0);
      } else {
        m.offset = 0;
        cap.push_back(0);
        has_cap.push_back(0);
        m.col2 = static_cast<int>(cap.size());
        cap.push_back(0);
        has_cap.push_back(0);
      }
    }
    const int structural = static_cast<int>(cap.size());
    const int m_rows = static_cast<int>(rows_.size());
    int slacks = 0;
    for (const auto& r : rows_)
      if (r.rel != Relation::eq) ++slacks;
    const int art0 = structural + slacks;
    ncols_ = art0 + m_rows;
    art0_ = art0;
    cap.resize(ncols_, T(0));
    has_cap.resize(ncols_, 0);
    cap_ = std::move(cap);
    has_cap_ = std::move(has_cap);

    tab_.assign(m_rows, std::vector<T>(ncols_, T(0)));
    beta_.assign(m_rows, T(0));
    basis_.assign(m_rows, 0);
    at_upper_.assign(ncols_, 0);
    is_basic_.assign(ncols_, 0);
    int slack = structural;
    for (int i = 0; i < m_rows; ++i) {
      auto& row = tab_[i];
      T rhs = rows_[i].rhs;
      for (const auto& [j, a] : rows_[i].terms) {
        const Map& mp = map[j];
        // a*x = a*(offset + sign*y) (or a*(y1 - y2))
        rhs -= a * mp.offset;
        if (mp.col2 >= 0) {
          row[mp.col] += a;
          row[mp.col2] -= a;
        } else {
          row[mp.col] += mp.sign > 0 ? a : T(-a);
        }
      }
      if (rows_[i].rel == Relation::le) row[slack++] = 1;
      if (rows_[i].rel == Relation::ge) row[slack++] = -1;
      if (rhs < 0) {
        for (auto& v : row) v = -v;
        rhs = -rhs;
      }
      row[art0 + i] = 1;
      basis_[i] = art0 + i;
      is_basic_[art0 + i] = 1;
      beta_[i] = rhs;
    }

    const LpStatus status = phase_one();
    out.status = status;
    if (status != LpStatus::feasible) return out;

    std::vector<T> y(ncols_, T(0));
    for (int j = 0; j < ncols_; ++j)
      if (!is_basic_[j] && at_upper_[j]) y[j] = cap_[j];
    for (int i = 0; i < m_rows; ++i) y[basis_[i]] = beta_[i];
    out.x.assign(n, T(0));
    for (int j = 0; j < n; ++j) {
      if (!active[j]) {
        out.x[j] = box_.lo[j];
        continue;
      }
      const Map& mp = map[j];
      if (mp.col2 >= 0)
        out.x[j] = y[mp.col] - y[mp.col2];
      else
        out.x[j] = mp.sign > 0 ? T(mp.offset + y[mp.col]) : T(mp.offset - y[mp.col]);
    }
    return out;
  }

 private:
  // Substitutes fixed variables and turns single-variable rows into bounds
  // until nothing changes. Returns false when infeasibility is detected.
  bool presolve() {
    const T tol = S::tol();
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<LpRow<T>> kept;
      for (auto& r : rows_) {
        LpRow<T> nr{{}, r.rel, r.rhs};
        for (const auto& [j, a] : r.terms) {
          if (a == 0) continue;
          if (box_.has_lo[j] && box_.has_up[j] && box_.lo[j] == box_.up[j])
            nr.rhs -= a * box_.lo[j];
          else
            nr.terms.emplace_back(j, a);
        }
        if (nr.terms.size() != r.terms.size()) changed = true;
        if (nr.terms.empty()) {
          const bool ok = (nr.rel == Relation::le && nr.rhs >= -tol) || (nr.rel == Relation::ge && nr.rhs <= tol) ||
                          (nr.rel == Relation::eq && abs_of(nr.rhs) <= tol);
          if (!ok) return false;
          continue;
        }
        if (nr.terms.size() == 1) {
          const auto [j, a] = nr.terms.front();
          const T bound = nr.rhs / a;
          const bool upper_side = (nr.rel == Relation::le) == (a > 0);
          if (nr.rel == Relation::eq || upper_side) tighten_up(j, bound);
          if (nr.rel == Relation::eq || !upper_side) tighten_lo(j, bound);
          if (!box_ok(j)) return false;
          changed = true;
          continue;
        }
        kept.push_back(std::move(nr));
      }
      rows_ = std::move(kept);
    }
    for (std::size_t j = 0; j < box_.lo.size(); ++j)
      if (!box_ok(static_cast<int>(j))) return false;
    return true;
  }

  void tighten_up(int j, const T& v) {
    if (!box_.has_up[j] || v < box_.up[j]) {
      box_.up[j] = v;
      box_.has_up[j] = 1;
    }
  }
  void tighten_lo(int j, const T& v) {
    if (!box_.has_lo[j] || v > box_.lo[j]) {
      box_.lo[j] = v;
      box_.has_lo[j] = 1;
    }
  }
  bool box_ok(int j) {
    if (!box_.has_lo[j] || !box_.has_up[j]) return true;
    if (box_.lo[j] <= box_.up[j]) return true;
    if (box_.lo[j] - box_.up[j] <= S::tol()) {  // floating-point crossing
      box_.up[j] = box_.lo[j];
      return true;
    }
    return false;
  }

  LpStatus phase_one() {
    const T tol = S::tol();
    const int m = static_cast<int>(tab_.size());
    std::vector<T> d(ncols_);
    for (long iter = 0;; ++iter) {
      if ((iter & 63) == 0 && Clock::now() > deadline_) return LpStatus::timeout;
      // Reduced costs of the phase-one objective (sum of artificials).
      for (int j = 0; j < ncols_; ++j) d[j] = j >= art0_ ? T(1) : T(0);
      for (int i = 0; i < m; ++i) {
        if (basis_[i] < art0_) continue;
        const auto& row = tab_[i];
        for (int j = 0; j < ncols_; ++j)
          if (row[j] != 0) d[j] -= row[j];
      }
      int q = -1;
      int dir = 0;
      for (int j = 0; j < art0_; ++j) {  // artificials never re-enter
        if (is_basic_[j]) continue;
        if (!at_upper_[j] && d[j] < -tol) {
          q = j, dir = 1;
          break;
        }
        if (at_upper_[j] && d[j] > tol) {
          q = j, dir = -1;
          break;
        }
      }
      if (q < 0) {
        T infeas = 0;
        for (int i = 0; i < m; ++i)
          if (basis_[i] >= art0_) infeas += beta_[i];
        return infeas <= (tol == 0 ? T(0) : T(1e-7)) ? LpStatus::feasible : LpStatus::infeasible;
      }

      // Ratio test; Bland: smallest basic index among ties.
      bool bounded = false;
      T best = 0;
      int leave = -1;  // row, or -1 for a bound flip of q
      bool leave_to_upper = false;
      if (has_cap_[q]) {
        bounded = true;
        best = cap_[q];
      }
      for (int i = 0; i < m; ++i) {
        const T a = dir > 0 ? tab_[i][q] : T(-tab_[i][q]);
        T t;
        bool to_upper;
        if (a > tol) {
          t = beta_[i] / a;
          to_upper = false;
        } else if (a < -tol && has_cap_[basis_[i]]) {
          t = (cap_[basis_[i]] - beta_[i]) / (-a);
          to_upper = true;
        } else {
          continue;
        }
        if (t < 0) t = 0;
        if (!bounded || t < best || (t == best && leave >= 0 && basis_[i] < basis_[leave])) {
          bounded = true;
          best = t;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (!bounded) return LpStatus::infeasible;  // cannot happen in phase one

      const T step = dir > 0 ? best : T(-best);
      for (int i = 0; i < m; ++i)
        if (tab_[i][q] != 0) beta_[i] -= step * tab_[i][q];
      if (leave < 0) {
        at_upper_[q] = !at_upper_[q];
        continue;
      }
      const T entering_value = (at_upper_[q] ? cap_[q] : T(0)) + step;
      const int out_col = basis_[leave];
      is_basic_[out_col] = 0;
      at_upper_[out_col] = leave_to_upper;
      pivot(leave, q);
      basis_[leave] = q;
      is_basic_[q] = 1;
      at_upper_[q] = 0;
      beta_[leave] = entering_value;
    }
  }

  void pivot(int r, int q) {
    auto& prow = tab_[r];
    const T inv = T(1) / prow[q];
    for (auto& v : prow)
      if (v != 0) v *= inv;
    for (int i = 0; i < static_cast<int>(tab_.size()); ++i) {
      if (i == r) continue;
      auto& row = tab_[i];
      if (row[q] == 0) continue;
      const T f = row[q];
      for (int j = 0; j < ncols_; ++j)
        if (prow[j] != 0) row[j] -= f * prow[j];
      row[q] = 0;
    }
  }

  std::vector<LpRow<T>> rows_;
  Box<T> box_;
  Clock::time_point deadline_;
  int ncols_ = 0, art0_ = 0;
  std::vector<T> cap_;
  std::vector<char> has_cap_;
  std::vector<std::vector<T>> tab_;
  std::vector<T> beta_;
  std::vector<int> basis_;
  std::vector<char> at_upper_, is_basic_;
};

template <class T>
std::vector<LpRow<T>> convert_rows(const MilpModel& m) {
  std::vector<LpRow<T>> rows;
  for (const auto& c : m.constraints()) {
    LpRow<T> r{{}, c.rel, ScalarTraits<T>::from(c.rhs)};
    for (const auto& t : c.terms) r.terms.emplace_back(t.var, ScalarTraits<T>::from(t.coef));
    rows.push_back(std::move(r));
  }
  return rows;
}

template <class T>
Box<T> model_box(const MilpModel& m) {
  Box<T> b;
  for (const auto& v : m.variables()) {
    double lo = v.lower, up = v.upper;
    if (v.type == VarType::integer) {  // integer bounds snap inwards
      lo = std::ceil(lo);
      up = std::floor(up);
    }
    b.has_lo.push_back(std::isfinite(lo));
    b.has_up.push_back(std::isfinite(up));
    b.lo.push_back(std::isfinite(lo) ? ScalarTraits<T>::from(lo) : T(0));
    b.up.push_back(std::isfinite(up) ? ScalarTraits<T>::from(up) : T(0));
  }
  return b;
}

struct SearchResult {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<mpq_class> x;
  long nodes = 0;
};

std::vector<mpq_class> to_exact(const std::vector<mpq_class>& x) { return x; }
std::vector<mpq_class> to_exact(const std::vector<double>& x) {
  std::vector<mpq_class> out;
  for (double v : x) out.emplace_back(v);
  return out;
}

// Exact LP over the continuous variables with every integer variable fixed.
LpOutcome<mpq_class> confirm_leaf(const MilpModel& m, const std::vector<double>& ints, Clock::time_point deadline) {
  Box<mpq_class> box = model_box<mpq_class>(m);
  for (int j = 0; j < m.variable_count(); ++j) {
    if (m.variable(j).type != VarType::integer) continue;
    box.lo[j] = box.up[j] = mpq_class(ints[j]);
    box.has_lo[j] = box.has_up[j] = 1;
  }
  return BoundedSimplex<mpq_class>(convert_rows<mpq_class>(m), std::move(box), deadline).run();
}

template <class T>
SearchResult branch_and_bound(const MilpModel& m, const SolveLimits& limits) {
  using S = ScalarTraits<T>;
  const bool exact = std::is_same_v<T, mpq_class>;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(limits.max_seconds));
  const auto rows = convert_rows<T>(m);
  const T frac_tol = exact ? T(0) : T(1e-6);
  SearchResult result;
  std::vector<Box<T>> stack{model_box<T>(m)};
  while (!stack.empty()) {
    if (result.nodes >= limits.max_nodes || Clock::now() > deadline) {
      result.status = SolveStatus::bound_limit;
      return result;
    }
    Box<T> node = std::move(stack.back());
    stack.pop_back();
    ++result.nodes;
    const auto lp = BoundedSimplex<T>(rows, node, deadline).run();
    if (lp.status == LpStatus::timeout) {
      result.status = SolveStatus::bound_limit;
      return result;
    }
    if (lp.status == LpStatus::infeasible) continue;

    int branch = -1;
    T best_frac = 0;
    for (int j = 0; j < m.variable_count(); ++j) {
      if (m.variable(j).type != VarType::integer) continue;
      const T down = lp.x[j] - S::floor(lp.x[j]);
      const T frac = down < T(1) - down ? down : T(T(1) - down);
      if (frac > frac_tol && (branch < 0 || frac > best_frac)) {
        branch = j;
        best_frac = frac;
      }
    }
    if (branch >= 0) {
      const T v = lp.x[branch];
      Box<T> lower_child = node, upper_child = node;
      lower_child.up[branch] = S::floor(v);
      upper_child.lo[branch] = S::ceil(v);
      const bool down_first = v - S::floor(v) <= T(0.5);
      // The stack pops the last pushed child first.
      if (down_first) {
        stack.push_back(std::move(upper_child));
        stack.push_back(std::move(lower_child));
      } else {
        stack.push_back(std::move(lower_child));
        stack.push_back(std::move(upper_child));
      }
      continue;
    }
    if (exact) {
      result.status = SolveStatus::feasible;
      result.x = to_exact(lp.x);
      return result;
    }
    // Floating-point leaf: round the integers and confirm exactly.
    std::vector<double> ints(m.variable_count(), 0.0);
    for (int j = 0; j < m.variable_count(); ++j) {
      if (m.variable(j).type != VarType::integer) continue;
      double r = std::round(S::to_double(lp.x[j]));
      r = std::max(r, S::to_double(node.lo[j]));
      r = std::min(r, S::to_double(node.up[j]));
      ints[j] = r;
    }
    const auto confirmed = confirm_leaf(m, ints, deadline);
    if (confirmed.status == LpStatus::timeout) {
      result.status = SolveStatus::bound_limit;
      return result;
    }
    if (confirmed.status == LpStatus::feasible) {
      result.status = SolveStatus::feasible;
      result.x = confirmed.x;
      return result;
    }
    // Split off the rounded value of the first unfixed integer variable so
    // the exact check is never repeated on the same assignment.
    for (int j = 0; j < m.variable_count(); ++j) {
      if (m.variable(j).type != VarType::integer || !(node.lo[j] < node.up[j])) continue;
      const T v = S::from(ints[j]);
      Box<T> below = node, above = node, at = node;
      below.up[j] = v - T(1);
      above.lo[j] = v + T(1);
      at.lo[j] = at.up[j] = v;
      if (!(above.lo[j] > above.up[j])) stack.push_back(std::move(above));
      if (!(below.up[j] < below.lo[j])) stack.push_back(std::move(below));
      stack.push_back(std::move(at));
      break;
    }
  }
  result.status = SolveStatus::infeasible;
  return result;
}

}  // namespace

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::bound_limit: return "bound-limit";
  }
  return "unknown";
}

bool check_exact(const MilpModel& m, const std::vector<mpq_class>& x) {
  if (static_cast<int>(x.size()) != m.variable_count()) return false;
  for (int j = 0; j < m.variable_count(); ++j) {
    const auto& v = m.variable(j);
    if (std::isfinite(v.lower) && x[j] < mpq_class(v.lower)) return false;
    if (std::isfinite(v.upper) && x[j] > mpq_class(v.upper)) return false;
    if (v.type == VarType::integer && x[j].get_den() != 1) return false;
  }
  for (const auto& c : m.constraints()) {
    mpq_class lhs = 0;
    for (const auto& t : c.terms) lhs += mpq_class(t.coef) * x[t.var];
    const mpq_class rhs(c.rhs);
    if (c.rel == Relation::le && lhs > rhs) return false;
    if (c.rel == Relation::ge && lhs < rhs) return false;
    if (c.rel == Relation::eq && lhs != rhs) return false;
  }
  return true;
}

MilpSolution solve(const MilpModel& m, const SolveLimits& limits) {
  m.validate();
  const SearchResult r = m.variable_count() <= limits.exact_variable_limit
                             ? branch_and_bound<mpq_class>(m, limits)
                             : branch_and_bound<double>(m, limits);
  MilpSolution s;
  s.status = r.status;
  s.nodes = r.nodes;
  if (r.status == SolveStatus::feasible) {
    if (!check_exact(m, r.x)) throw std::logic_error("solver produced an assignment that fails the exact check");
    s.exact = r.x;
    for (const auto& v : r.x) s.values.push_back(v.get_d());
  }
  return s;
}

}  // namespace polyinfer
