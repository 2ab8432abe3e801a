#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "polyinfer/regress.hpp"

using namespace polyinfer;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd a;
};

// a = x.w + b + noise with x uniform in [0, 1].
Problem random_problem(int n, int k, unsigned seed, double noise = 0.05) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> e(0, noise);
  Problem p{Eigen::MatrixXd(n, k), Eigen::VectorXd(n)};
  Eigen::VectorXd w(k);
  for (int j = 0; j < k; ++j) w(j) = j % 3 == 2 ? 0.0 : (j % 2 ? -1.0 : 2.0) / (j + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) p.x(i, j) = u(rng);
    p.a(i) = p.x.row(i).dot(w) + 0.3 + e(rng);
  }
  return p;
}

double soft(double z, double t) { return z > t ? z - t : z < -t ? z + t : 0.0; }

// Subgradient optimality of the lasso objective, coordinate by coordinate.
double kkt_violation(const Problem& p, const Hyperplane& h, double lambda, bool penalize_intercept) {
  const double n = static_cast<double>(p.a.size());
  const Eigen::VectorXd r = p.a - (p.x * h.w).array().matrix() - Eigen::VectorXd::Constant(p.a.size(), h.b);
  double worst = 0;
  auto check = [&](double grad, double coef, double pen) {
    if (coef != 0)
      worst = std::max(worst, std::abs(grad - pen * (coef > 0 ? 1 : -1)));
    else
      worst = std::max(worst, std::abs(grad) - pen);
  };
  for (Eigen::Index j = 0; j < p.x.cols(); ++j) check(p.x.col(j).dot(r) / n, h.w(j), lambda);
  check(r.sum() / n, h.b, penalize_intercept ? lambda : 0.0);
  return worst;
}

}  // namespace

TEST_CASE("zero penalty reproduces least squares") {
  const auto p = random_problem(60, 5, 1);
  const auto fit = lasso_fit(p.x, p.a, 0.0);
  CHECK(fit.converged);
  Eigen::MatrixXd design(60, 6);
  design << p.x, Eigen::VectorXd::Ones(60);
  const Eigen::VectorXd beta = (design.transpose() * design).ldlt().solve(design.transpose() * p.a);
  for (int j = 0; j < 5; ++j) CHECK(fit.h.w(j) == doctest::Approx(beta(j)).epsilon(1e-6));
  CHECK(fit.h.b == doctest::Approx(beta(5)).epsilon(1e-6));
}

TEST_CASE("coordinate descent satisfies the optimality conditions") {
  for (double lambda : {1e-4, 1e-3, 1e-2, 0.05, 0.2}) {
    for (bool pen : {true, false}) {
      const auto p = random_problem(40, 8, 3);
      LassoOptions o;
      o.penalize_intercept = pen;
      const auto fit = lasso_fit(p.x, p.a, lambda, o);
      CHECK(fit.converged);
      CHECK(kkt_violation(p, fit.h, lambda, pen) < 1e-6);
    }
  }
}

TEST_CASE("objective never increases across sweeps") {
  const auto p = random_problem(30, 10, 5, 0.2);
  LassoOptions o;
  o.record_trace = true;
  const auto fit = lasso_fit(p.x, p.a, 0.01, o);
  REQUIRE(fit.trace.size() >= 2);
  for (std::size_t i = 1; i < fit.trace.size(); ++i) CHECK(fit.trace[i] <= fit.trace[i - 1] + 1e-15);
  CHECK(fit.trace.back() == doctest::Approx(lasso_objective(p.x, p.a, fit.h, 0.01)));
}

TEST_CASE("single centred column has the soft-threshold solution") {
  Eigen::MatrixXd x(4, 1);
  x << -1.5, -0.5, 0.5, 1.5;
  Eigen::VectorXd a(4);
  a << -3, -1, 1.5, 2.5;
  const double n = 4;
  const double xa = x.col(0).dot(a) / n, xx = x.col(0).squaredNorm() / n;
  LassoOptions o;
  o.penalize_intercept = false;
  for (double lambda : {0.0, 0.1, 1.0, 2.0, 5.0}) {
    const auto fit = lasso_fit(x, a, lambda, o);
    CHECK(fit.h.w(0) == doctest::Approx(soft(xa, lambda) / xx).epsilon(1e-9));
    CHECK(fit.h.b == doctest::Approx(a.mean()).epsilon(1e-9));
  }
}

TEST_CASE("large penalty zeroes every coefficient") {
  const auto p = random_problem(30, 6, 7);
  const auto fit = lasso_fit(p.x, p.a, 100.0);
  CHECK(fit.h.w.isZero());
  CHECK(fit.h.b == 0.0);
}

TEST_CASE("coefficient of determination") {
  Eigen::VectorXd a(3), y(3);
  a << 1, 2, 3;
  y << 1, 2, 2;
  CHECK(r_squared(y, a) == doctest::Approx(0.5));
  CHECK(r_squared(a, a) == 1.0);
  CHECK_THROWS_AS(r_squared(y, Eigen::VectorXd::Constant(3, 2.0)), std::domain_error);
  CHECK_THROWS_AS(r_squared(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)), std::invalid_argument);
  Hyperplane h{Eigen::VectorXd::Ones(2), 1.0};
  CHECK(predict(h, std::vector<double>{1, 2}) == 4.0);
  CHECK_THROWS_AS(predict(h, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("lambda grid") {
  const auto grid = default_lambda_grid();
  REQUIRE(grid.size() == 37);
  CHECK(grid[0] == 0.0);
  CHECK(grid[1] == doctest::Approx(1e-6));
  CHECK(grid[36] == doctest::Approx(100.0));
  for (std::size_t i = 2; i < grid.size(); ++i) CHECK(grid[i] / grid[i - 1] == doctest::Approx(std::pow(1e8, 1.0 / 35)));
}

TEST_CASE("fold partition") {
  std::mt19937_64 rng(9);
  for (int n : {5, 7, 23, 100}) {
    const auto folds = fold_partition(n, 5, rng);
    REQUIRE(folds.size() == 5);
    std::set<int> seen;
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      CHECK(std::is_sorted(f.begin(), f.end()));
      seen.insert(f.begin(), f.end());
    }
    CHECK(seen.size() == static_cast<std::size_t>(n));
    CHECK(hi - lo <= 1);
  }
  std::mt19937_64 a(4), b(4);
  CHECK(fold_partition(50, 5, a) == fold_partition(50, 5, b));
  std::mt19937_64 r(1);
  for (int i = 0; i < 1000; ++i) CHECK(uniform_below(r, 7) < 7);
}

TEST_CASE("cross-validation") {
  const auto p = random_problem(50, 6, 11);
  CvOptions o;
  o.runs = 3;
  const auto r1 = cross_validate(p.x, p.a, 1e-3, o);
  const auto r2 = cross_validate(p.x, p.a, 1e-3, o);
  CHECK(r1.test_r2 == r2.test_r2);
  CHECK(r1.test_r2.size() == 15);
  CHECK(r1.median_r2 > 0.9);
  CHECK(r1.median_r2 == median(r1.test_r2));
  o.seed = 2;
  CHECK(cross_validate(p.x, p.a, 1e-3, o).test_r2 != r1.test_r2);
  CHECK(cross_validate(p.x, p.a, 0.0, o).k_prime == 6);
  CHECK(cross_validate(p.x, p.a, 100.0, o).k_prime == 0);
  CHECK_THROWS_AS(cross_validate(p.x.topRows(4), p.a.head(4), 0.0, o), std::invalid_argument);
}

TEST_CASE("lambda selection prefers the largest near-best value") {
  const auto p = random_problem(40, 6, 13);
  CvOptions o;
  o.runs = 2;
  const std::vector<double> grid{0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  const auto sel = select_lambda(p.x, p.a, grid, o);
  REQUIRE(sel.scanned.size() == grid.size());
  double best = -1e300;
  for (const auto& r : sel.scanned) best = std::max(best, r.median_r2);
  double want = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (sel.scanned[i].median_r2 >= best - 1e-4) want = std::max(want, grid[i]);
  CHECK(sel.lambda == want);
  CHECK(sel.report.lambda == want);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("model serialization and raw prediction") {
  Model m;
  m.registry_hash = "0123456789abcdef";
  m.rho = 2;
  m.h = {Eigen::Vector2d(0.5, -0.25), 0.1};
  m.lambda = 1e-3;
  m.standardizer = Standardizer({0, 10}, {4, 20}, 100, 200);
  const auto back = Model::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  // x = (2, 20) standardizes to (0.5, 1): 0.25 - 0.25 + 0.1 = 0.1 -> 110.
  CHECK(back.predict_raw({2, 20}) == doctest::Approx(110));
  CHECK_THROWS(back.predict_raw({1}));
}

TEST_CASE("summary row") {
  SummaryRow row;
  row.property = "Tg";
  row.dataset_size = 3;
  row.lambda = 0.001;
  CHECK(SummaryRow::csv_header() == "property,|D|,n_min,n_max,a_min,a_max,|Gamma_int|,|F|,K,lambda,K_prime,median_test_R2");
  CHECK(row.csv() == "Tg,3,0,0,0,0,0,0,0,0.001,0,0");
}
