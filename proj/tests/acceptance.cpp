// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "polyinfer/features.hpp"
#include "polyinfer/generate.hpp"
#include "polyinfer/milp.hpp"
#include "polyinfer/regress.hpp"
#include "polyinfer/synthetic.hpp"
#include "polyinfer/topospec.hpp"
#include "polyinfer/twolayer.hpp"
#include "polyinfer/util.hpp"

#include "forcing.hpp"
#include "tree_oracle.hpp"

using namespace polyinfer;
using namespace polyinfer::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// 1. Decomposition of the reference monomer.
Outcome reference_decomposition() {
  const auto t0 = Clock::now();
  const auto g = read_pmg_file(std::string(POLYINFER_DATA_DIR) + "/reference_monomer.pmg");
  const auto d = decompose(g, 2);
  const int interior = static_cast<int>(std::count(d.is_interior_vertex.begin(), d.is_interior_vertex.end(), true));
  const int exterior = d.hs.order() - interior;
  const int links = static_cast<int>(std::count(d.hs.link.begin(), d.hs.link.end(), true));
  const double t = seconds_since(t0);
  return {interior == 29 && exterior == 26 && links == 6 && t < 0.1,
          "interior " + std::to_string(interior) + ", exterior " + std::to_string(exterior) + ", link-edges " +
              std::to_string(links) + ", " + fmt(t) + " s (limit 0.1 s)"};
}

// 2. Canonical codes against brute-force rooted isomorphism.
Outcome tree_codes() {
  const auto t0 = Clock::now();
  const auto& table = ElementTable::standard();
  const std::vector<int> alphabet{table.id("C"), table.id("O")};
  std::vector<RootedTree> trees;
  for (int root : alphabet) {
    RootedTree r;
    r.add(root, -1, 0);
    grow(r, 6, alphabet, trees);
  }
  std::vector<std::vector<std::vector<int>>> kids;
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    kids.push_back(trees[i].children());
    groups[canonical_code(trees[i])].push_back(static_cast<int>(i));
  }
  long disagreements = 0;
  for (const auto& [code, members] : groups)
    for (int i : members) disagreements += !rooted_isomorphic(trees[members[0]], 0, trees[i], 0, kids[members[0]], kids[i]);
  // Representatives of distinct codes, compared within invariant buckets.
  std::map<std::vector<std::array<int, 4>>, std::vector<int>> buckets;
  for (const auto& [code, members] : groups) buckets[tree_invariant(trees[members[0]], kids[members[0]])].push_back(members[0]);
  long pairs = 0;
  for (const auto& [key, reps] : buckets)
    for (std::size_t x = 0; x < reps.size(); ++x)
      for (std::size_t y = x + 1; y < reps.size(); ++y, ++pairs)
        disagreements += rooted_isomorphic(trees[reps[x]], 0, trees[reps[y]], 0, kids[reps[x]], kids[reps[y]]);
  const double t = seconds_since(t0);
  return {disagreements == 0 && t < 60,
          std::to_string(trees.size()) + " trees, " + std::to_string(groups.size()) + " classes, " +
              std::to_string(pairs) + " cross-class pairs, " + std::to_string(disagreements) + " disagreements, " +
              fmt(t) + " s (limit 60 s)"};
}

// 3. Zero-penalty Lasso against the normal equations.
Outcome lasso() {
  double worst = 0, slowest = 0;
  bool monotone = true;
  LassoOptions opt;
  opt.tol = 1e-12;
  opt.record_trace = true;
  opt.penalize_intercept = false;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> z(0, 1);
    Eigen::MatrixXd x(50, 5);
    Eigen::VectorXd a(50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 5; ++j) x(i, j) = z(rng);
      a(i) = 1.0 + x(i, 0) - 2.0 * x(i, 3) + 0.5 * z(rng);
    }
    const auto t0 = Clock::now();
    const auto r = lasso_fit(x, a, 0.0, opt);
    slowest = std::max(slowest, seconds_since(t0));
    Eigen::MatrixXd xa(50, 6);
    xa << x, Eigen::VectorXd::Ones(50);
    const Eigen::VectorXd ols = (xa.transpose() * xa).ldlt().solve(xa.transpose() * a);
    for (int j = 0; j < 5; ++j) worst = std::max(worst, std::abs(ols(j) - r.h.w(j)));
    worst = std::max(worst, std::abs(ols(5) - r.h.b));
    for (std::size_t k = 1; k < r.trace.size(); ++k)
      monotone = monotone && r.trace[k] <= r.trace[k - 1] * (1 + 1e-12) + 1e-15;
  }
  // Timing at 232 samples by 124 descriptors.
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd x(232, 124);
  Eigen::VectorXd a(232);
  for (int i = 0; i < 232; ++i) {
    for (int j = 0; j < 124; ++j) x(i, j) = u(rng);
    a(i) = x.row(i).head(10).sum() + 0.05 * u(rng);
  }
  const auto t0 = Clock::now();
  lasso_fit(x, a, 1e-4);
  const double big = seconds_since(t0);
  slowest = std::max(slowest, big);
  return {worst <= 1e-6 && monotone && slowest < 1.0,
          "max |w - w_ols| " + fmt(worst) + " (tol 1e-6), objective monotone " + (monotone ? "yes" : "no") +
              ", slowest fit " + fmt(slowest) + " s (232x124 fit " + fmt(big) + " s, limit 1 s)"};
}

// 4. Cross-validation on a noiseless sparse hyperplane.
Outcome cv_protocol() {
  const int n = 120, k = 20, support = 5;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd a(n);
  const double w[support] = {3.0, -2.0, 1.5, 2.5, -1.0};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) x(i, j) = u(rng);
    a(i) = 0.7;
    for (int s = 0; s < support; ++s) a(i) += w[s] * x(i, 4 * s);
  }
  const auto st = Standardizer::fit(x, a);
  Eigen::VectorXd a_hat(n);
  for (int i = 0; i < n; ++i) a_hat(i) = st.forward_value(a(i));
  CvOptions opt;
  opt.runs = 10;
  opt.folds = 5;
  opt.seed = 2024;
  const auto sel = select_lambda(st.forward_matrix(x), a_hat, default_lambda_grid(), opt);
  const bool ok = sel.report.median_r2 >= 0.999 && std::abs(sel.report.k_prime - support) <= 1.0;
  return {ok, "lambda " + fmt(sel.lambda) + ", median test R^2 " + fmt(sel.report.median_r2, 6) + " (min 0.999), K' " +
                  fmt(sel.report.k_prime) + " (true support 5 +/- 1)"};
}

// 5. Inverse problem on trained synthetic models.
Outcome milp_roundtrip() {
  const auto t0 = Clock::now();
  const int k = 10, n = 40;
  int feasible_ok = 0, infeasible_ok = 0, feasible_cases = 0, infeasible_cases = 0;
  double worst_gap = 0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> count(0, 10);
    std::normal_distribution<double> noise(0, 0.3);
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) {
      a(i) = 5.0;
      for (int j = 0; j < k; ++j) {
        x(i, j) = count(rng);
        a(i) += (j % 3 == 0 ? 1.5 : j % 3 == 1 ? -0.8 : 0.1) * x(i, j);
      }
      a(i) += noise(rng);
    }
    Model m;
    m.standardizer = Standardizer::fit(x, a);
    Eigen::VectorXd a_hat(n);
    for (int i = 0; i < n; ++i) a_hat(i) = m.standardizer.forward_value(a(i));
    const Eigen::MatrixXd xs = m.standardizer.forward_matrix(x);
    m.h = lasso_fit(xs, a_hat, 1e-4).h;

    InverseProblemSpec s;
    s.h = m.h;
    s.standardizer = m.standardizer;
    for (int j = 0; j < k; ++j) {
      s.integer.push_back(true);
      s.nonneg.push_back(true);
      s.lower.push_back(m.standardizer.min(j));
      s.upper.push_back(m.standardizer.max(j));
    }
    s.epsilon = 1e-5;
    double reach_hi = m.h.b, reach_lo = m.h.b, weight = 0;
    for (int j = 0; j < k; ++j) {
      reach_hi += std::max(m.h.w(j), 0.0);
      reach_lo += std::min(m.h.w(j), 0.0);
      weight += std::abs(m.h.w(j));
    }
    const bool infeasible = seed % 5 == 0;
    if (infeasible) {
      ++infeasible_cases;
      s.y_lo = seed % 10 == 0 ? reach_hi + 0.05 : reach_lo - 0.1;
      s.y_hi = s.y_lo + 0.05;
    } else {
      ++feasible_cases;
      const Eigen::VectorXd pred = predict_all(m.h, xs);
      const double c = pred.minCoeff() + (pred.maxCoeff() - pred.minCoeff()) * (seed % 7 + 0.5) / 7.5;
      s.y_lo = c - 0.01;
      s.y_hi = c + 0.01;
    }
    const auto model = build_inverse_milp(s);
    const auto sol = solve_inverse(s);
    if (infeasible) {
      infeasible_ok += sol.solution.status == SolveStatus::infeasible;
      continue;
    }
    if (sol.solution.status != SolveStatus::feasible) continue;
    const double delta = s.epsilon * weight;
    // Recompute the prediction from the raw descriptors.
    std::vector<double> raw(sol.x.begin(), sol.x.end());
    Eigen::VectorXd xh(k);
    for (int j = 0; j < k; ++j) xh(j) = m.standardizer.forward(j, raw[j]);
    const double eta = predict(m.h, xh);
    const double gap = std::max({0.0, s.y_lo - eta, eta - s.y_hi});
    worst_gap = std::max(worst_gap, gap);
    bool integral = true;
    for (double v : raw) integral = integral && v == std::round(v);
    feasible_ok += check_exact(model, sol.solution.exact) && gap <= delta && integral;
  }
  const double t = seconds_since(t0);
  return {feasible_ok == feasible_cases && infeasible_ok == infeasible_cases && t < 10,
          std::to_string(feasible_ok) + "/" + std::to_string(feasible_cases) + " feasible windows solved and re-checked, " +
              std::to_string(infeasible_ok) + "/" + std::to_string(infeasible_cases) +
              " infeasible windows reported, worst window gap " + fmt(worst_gap) + " (<= eps*sum|w|), " + fmt(t) +
              " s (limit 10 s)"};
}

// 6. Branch-and-bound against enumeration.
Outcome solver_soundness() {
  std::mt19937 rng(606);
  int agree = 0, feasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int nv = 1 + static_cast<int>(rng() % 3);
    MilpModel m;
    std::vector<int> lo(nv), hi(nv);
    for (int j = 0; j < nv; ++j) {
      lo[j] = -10 + static_cast<int>(rng() % 11);
      hi[j] = lo[j] + static_cast<int>(rng() % 21);
      m.add_variable({"x" + std::to_string(j), static_cast<double>(lo[j]), static_cast<double>(hi[j]), VarType::integer});
    }
    struct Row {
      std::vector<int> c;
      Relation rel;
      int rhs;
    };
    std::vector<Row> rows;
    const int nr = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < nr; ++i) {
      Row r{std::vector<int>(nv), static_cast<Relation>(rng() % 3), static_cast<int>(rng() % 41) - 20};
      std::vector<Term> terms;
      for (int j = 0; j < nv; ++j) {
        r.c[j] = static_cast<int>(rng() % 11) - 5;
        if (r.c[j]) terms.push_back({j, static_cast<double>(r.c[j])});
      }
      if (terms.empty()) r.c[0] = 1, terms.push_back({0, 1.0});
      m.add_constraint({"c" + std::to_string(i), terms, r.rel, static_cast<double>(r.rhs)});
      rows.push_back(r);
    }
    bool want = false;
    std::vector<int> v(lo);
    std::function<void(int)> scan = [&](int j) {
      if (want) return;
      if (j == nv) {
        bool ok = true;
        for (const auto& r : rows) {
          int lhs = 0;
          for (int q = 0; q < nv; ++q) lhs += r.c[q] * v[q];
          ok = ok && (r.rel == Relation::le ? lhs <= r.rhs : r.rel == Relation::ge ? lhs >= r.rhs : lhs == r.rhs);
        }
        want = ok;
        return;
      }
      for (v[j] = lo[j]; v[j] <= hi[j]; ++v[j]) scan(j + 1);
      v[j] = lo[j];
    };
    scan(0);
    feasible += want;
    const auto sol = solve(m);
    const bool got = sol.status == SolveStatus::feasible;
    agree += got == want && sol.status != SolveStatus::bound_limit && (!got || check_exact(m, sol.exact));
  }
  return {agree == 100, std::to_string(agree) + "/100 models agree with enumeration (" + std::to_string(feasible) +
                            " feasible)"};
}

// 7. Instance builder against the formula oracle.
Outcome instance_builder() {
  const auto expected = nlohmann::json::parse(read_file(std::string(POLYINFER_TEST_DIR) + "/oracles/instance_ib_expected.json"));
  int mismatches = 0, compared = 0;
  bool stable = true;
  for (int n_lb : {14, 20, 27}) {
    const auto s = build_instance_ib("Prm", n_lb);
    const auto& e = expected.at(std::to_string(n_lb));
    std::map<std::string, int> got{
        {"l_lb", s.edges[0].length.lo},   {"l_ub", s.edges[0].length.hi},  {"bd2_ub", s.edges[0].bd2.hi},
        {"bd3_ub", s.edges[0].bd3.hi},    {"n_star", s.n.hi},              {"n_lb", s.n.lo},
        {"n_int_lb", s.n_int.lo},         {"n_int_ub", s.n_int.hi},        {"n_lnk_lb", s.n_lnk.lo},
        {"n_lnk_ub", s.n_lnk.hi},         {"bl_ub", s.edges[0].bl.hi},     {"ch_ub", s.edges[0].ch.hi},
        {"na_ub_C", s.na.at("C").hi},     {"na_ub_H", s.na.at("H").hi},    {"na_ub_O", s.na.at("O").hi},
        {"na_ub_N", s.na.at("N").hi},     {"na_ub_Cl", s.na.at("Cl").hi},  {"fc_ub_psi1_4", s.fc.at(s.fringe_catalog[0]).hi},
        {"fc_ub_psi5_12", s.fc.at(s.fringe_catalog[4]).hi}, {"fc_ub_psi13_17", s.fc.at(s.fringe_catalog[12]).hi},
        {"ns_cnt_ub", s.ns_cnt.each.hi},  {"ring_bd2_even", s.edges[3].bd2.hi}, {"ring_bd2_odd", s.edges[2].bd2.hi},
    };
    // The second link path and every tier member must agree with the first.
    auto a2 = s.edges[1];
    a2.name = s.edges[0].name;
    a2.u = s.edges[0].u;
    a2.v = s.edges[0].v;
    mismatches += !(a2 == s.edges[0]);
    ++compared;
    for (int k = 0; k < 17; ++k) {
      const std::string tier = k < 4 ? "fc_ub_psi1_4" : k < 12 ? "fc_ub_psi5_12" : "fc_ub_psi13_17";
      mismatches += s.fc.at(s.fringe_catalog[k]).hi != e.at(tier).get<int>();
      ++compared;
    }
    for (const auto& [key, value] : e.items()) {
      ++compared;
      mismatches += !got.count(key) || got.at(key) != value.get<int>();
    }
    const auto text = s.to_json();
    stable = stable && text == build_instance_ib("Prm", n_lb).to_json() && TopologicalSpec::from_json(text).to_json() == text;
  }
  return {mismatches == 0 && stable, std::to_string(compared) + " bounds compared, " + std::to_string(mismatches) +
                                         " mismatches, JSON byte-stable " + (stable ? "yes" : "no")};
}

// 8. Generator against the exhaustive oracle on the forcing specification.
Outcome generator() {
  const auto t0 = Clock::now();
  const auto spec = forcing_spec();
  const auto oracle = enumerate_forcing_all(spec);
  const auto fixture = forcing_model(oracle.graphs);
  std::vector<double> pred;
  for (const auto& g : oracle.graphs) pred.push_back(fixture.model.predict_raw(featurize(g, fixture.registry).values));
  auto sorted = pred;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[sorted.size() / 3], hi = sorted[2 * sorted.size() / 3];
  std::set<std::string> want;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] >= lo && pred[i] <= hi) want.insert(canonical_certificate(oracle.graphs[i]));
  GenerateOptions opt;
  opt.window_lo = lo;
  opt.window_hi = hi;
  opt.limits.max_candidates = 1'000'000;
  opt.limits.max_seconds = 600;
  const auto r = generate(spec, fixture.model, fixture.registry, opt);
  std::set<std::string> got;
  int verified = 0;
  for (const auto& c : r.candidates) {
    got.insert(canonical_certificate(c.graph));
    verified += verify_roundtrip(c.graph, spec, fixture.model, fixture.registry, lo, hi).pass;
  }
  const double t = seconds_since(t0);
  const bool ok = r.status == GenerateStatus::exhausted && got == want && r.candidates.size() == want.size() &&
                  verified == static_cast<int>(r.candidates.size()) && oracle.candidates <= 10000 && t < 600;
  return {ok, std::to_string(oracle.candidates) + " oracle candidates, " + std::to_string(want.size()) +
                  " in window, generated " + std::to_string(r.candidates.size()) + " (" + std::to_string(verified) +
                  " re-verified), status " + std::string(to_string(r.status)) + ", " + fmt(t) + " s (limit 600 s)"};
}

// 9. Synthetic corpus to generated graph.
Outcome end_to_end() {
  const auto t0 = Clock::now();
  SyntheticOptions so;
  so.count = 64;
  so.noise = 0.5;
  so.seed = 9;
  auto records = synthesize_corpus(so);
  const Record held = records.back();
  records.pop_back();
  Dataset train;
  for (auto& r : records) add_record(train, r);
  const auto reg = build_registry(train, 2);
  const Eigen::MatrixXd x = feature_matrix(train, reg);
  const Eigen::VectorXd a = target_vector(train);
  const auto st = Standardizer::fit(x, a);
  Eigen::VectorXd a_hat(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) a_hat(i) = st.forward_value(a(i));
  CvOptions cv;
  cv.runs = 2;
  const auto sel = select_lambda(st.forward_matrix(x), a_hat, default_lambda_grid(), cv);
  const auto model = train_model(train, reg, sel.lambda);
  const auto f = featurize(held.graph, reg);
  const double y = model.predict_raw(f.values);
  const double width = 0.02 * (st.value_max() - st.value_min());
  GenerateOptions opt;
  opt.window_lo = y - width;
  opt.window_hi = y + width;
  opt.limits.max_candidates = 1;
  opt.limits.max_seconds = 800;
  const auto spec = build_instance_ib("Prm", so.n_lb);
  const auto r = generate(spec, model, reg, opt);
  bool verified = !r.candidates.empty();
  for (const auto& c : r.candidates)
    verified = verified && verify_roundtrip(c.graph, spec, model, reg, opt.window_lo, opt.window_hi).pass;
  const double t = seconds_since(t0);
  return {verified && t < 900,
          std::to_string(train.records.size()) + " training graphs, held-out value " + fmt(held.value, 5) +
              " predicted " + fmt(y, 5) + (f.oov.empty() ? "" : " (held-out has unseen descriptors)") + ", window [" +
              fmt(opt.window_lo, 5) + ", " + fmt(opt.window_hi, 5) + "], generated " +
              std::to_string(r.candidates.size()) + " (" + std::string(to_string(r.status)) + "), " + fmt(t) +
              " s (limit 900 s)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"two-layered reference monomer", reference_decomposition},
      {"fringe-tree canonicalization", tree_codes},
      {"lasso correctness", lasso},
      {"cross-validation protocol", cv_protocol},
      {"inverse MILP round-trip", milp_roundtrip},
      {"solver soundness", solver_soundness},
      {"instance builder regression", instance_builder},
      {"generator soundness and completeness", generator},
      {"end-to-end inference", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
