#include "polyinfer/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "polyinfer/util.hpp"

namespace polyinfer {

using nlohmann::json;

double predict(const Hyperplane& h, const Eigen::VectorXd& x) {
  if (x.size() != h.w.size())
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                std::to_string(h.w.size()));
  return h.w.dot(x) + h.b;
}

double predict(const Hyperplane& h, const std::vector<double>& x) {
  return predict(h, Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

Eigen::VectorXd predict_all(const Hyperplane& h, const Eigen::MatrixXd& x) {
  if (x.cols() != h.w.size()) throw std::invalid_argument("feature dimension does not match model dimension");
  return (x * h.w).array() + h.b;
}

double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& a) {
  if (a.size() < 2) throw std::invalid_argument("R^2 needs at least two points");
  if (predicted.size() != a.size()) throw std::invalid_argument("R^2 size mismatch");
  const double mean = a.mean();
  const double total = (a.array() - mean).square().sum();
  if (!(total > 0)) throw std::domain_error("R^2 undefined: targets have zero variance");
  return 1.0 - (a - predicted).squaredNorm() / total;
}

double r_squared(const Hyperplane& h, const Eigen::MatrixXd& x, const Eigen::VectorXd& a) {
  return r_squared(predict_all(h, x), a);
}

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, const Hyperplane& h, double lambda,
                       bool penalize_intercept) {
  const double n = static_cast<double>(x.rows());
  const double err = (a - predict_all(h, x)).squaredNorm();
  double penalty = h.w.lpNorm<1>();
  if (penalize_intercept) penalty += std::abs(h.b);
  return err / (2.0 * n) + lambda * penalty;
}

namespace {
double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}
}  // namespace

LassoResult lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, double lambda, const LassoOptions& options) {
  if (x.rows() < 1) throw std::invalid_argument("lasso_fit needs at least one row");
  if (a.size() != x.rows()) throw std::invalid_argument("lasso_fit: target length does not match rows");
  if (!x.allFinite() || !a.allFinite()) throw std::invalid_argument("lasso_fit: non-finite input");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("lasso_fit: lambda must be finite and >= 0");

  const Eigen::Index n = x.rows(), k = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd col_sq(k);
  for (Eigen::Index j = 0; j < k; ++j) col_sq(j) = x.col(j).squaredNorm() * inv_n;

  LassoResult result;
  Hyperplane& h = result.h;
  h.w = Eigen::VectorXd::Zero(k);
  h.b = 0.0;
  Eigen::VectorXd r = a;  // residual a - Xw - b

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = h.w(j);
      const double z = x.col(j).dot(r) * inv_n + col_sq(j) * old;
      const double updated = soft_threshold(z, lambda) / col_sq(j);
      if (updated != old) {
        r.noalias() -= (updated - old) * x.col(j);
        h.w(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    const double old_b = h.b;
    const double z = r.sum() * inv_n + old_b;
    const double updated_b = options.penalize_intercept ? soft_threshold(z, lambda) : z;
    if (updated_b != old_b) {
      r.array() -= updated_b - old_b;
      h.b = updated_b;
      max_change = std::max(max_change, std::abs(updated_b - old_b));
    }
    result.sweeps = sweep;
    if (options.record_trace) result.trace.push_back(lasso_objective(x, a, h, lambda, options.penalize_intercept));
    if (max_change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  const double lo = std::log10(1e-6), hi = std::log10(100.0);
  for (int i = 0; i < 36; ++i) grid.push_back(std::pow(10.0, lo + (hi - lo) * i / 35.0));
  return grid;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t draw = rng();
    if (draw < limit) return draw % bound;
  }
}

std::vector<std::vector<int>> fold_partition(int n, int folds, std::mt19937_64& rng) {
  if (folds < 1 || n < folds) throw std::invalid_argument("fold_partition: need at least one item per fold");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_below(rng, static_cast<std::uint64_t>(i) + 1)]);
  std::vector<std::vector<int>> out(folds);
  for (int i = 0; i < n; ++i) out[i % folds].push_back(perm[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {
Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}
Eigen::VectorXd rows_of(const Eigen::VectorXd& a, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = a(rows[i]);
  return out;
}
}  // namespace

CvReport cross_validate(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, double lambda, const CvOptions& options) {
  if (x.rows() < options.folds) throw std::invalid_argument("cross_validate: fewer records than folds");
  if (options.runs < 1 || options.folds < 2) throw std::invalid_argument("cross_validate: need runs >= 1, folds >= 2");
  CvReport report;
  report.lambda = lambda;
  report.runs = options.runs;
  report.folds = options.folds;
  report.seed = options.seed;
  std::mt19937_64 rng(options.seed);
  double nonzero_total = 0.0;
  const int n = static_cast<int>(x.rows());
  for (int run = 0; run < options.runs; ++run) {
    const auto parts = fold_partition(n, options.folds, rng);
    for (int f = 0; f < options.folds; ++f) {
      std::vector<int> train;
      for (int g = 0; g < options.folds; ++g)
        if (g != f) train.insert(train.end(), parts[g].begin(), parts[g].end());
      std::sort(train.begin(), train.end());
      const auto fit = lasso_fit(rows_of(x, train), rows_of(a, train), lambda, options.lasso);
      report.test_r2.push_back(r_squared(fit.h, rows_of(x, parts[f]), rows_of(a, parts[f])));
      nonzero_total += static_cast<double>((fit.h.w.array() != 0.0).count());
    }
  }
  report.median_r2 = median(report.test_r2);
  report.k_prime = nonzero_total / static_cast<double>(report.test_r2.size());
  return report;
}

std::string CvReport::to_json() const {
  json doc{{"lambda", lambda}, {"runs", runs},         {"folds", folds},        {"seed", seed},
           {"test_r2", test_r2}, {"median_r2", median_r2}, {"k_prime", k_prime}};
  return doc.dump(2) + "\n";
}

LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, const std::vector<double>& grid,
                              const CvOptions& options, double tolerance) {
  if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
  LambdaSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    sel.scanned.push_back(cross_validate(x, a, lambda, options));
    best = std::max(best, sel.scanned.back().median_r2);
  }
  // Among near-best values prefer the sparsest model.
  int chosen = -1;
  for (int i = 0; i < static_cast<int>(grid.size()); ++i)
    if (sel.scanned[i].median_r2 >= best - tolerance && (chosen < 0 || grid[i] > grid[chosen])) chosen = i;
  sel.lambda = grid[chosen];
  sel.report = sel.scanned[chosen];
  return sel;
}

Model train_model(const Dataset& d, const DescriptorRegistry& reg, double lambda, const LassoOptions& options) {
  const Eigen::MatrixXd x = feature_matrix(d, reg);
  const Eigen::VectorXd a = target_vector(d);
  Model m;
  m.registry_hash = reg.hash();
  m.rho = reg.rho();
  m.lambda = lambda;
  m.standardizer = Standardizer::fit(x, a);
  Eigen::VectorXd a_hat(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) a_hat(i) = m.standardizer.forward_value(a(i));
  m.h = lasso_fit(m.standardizer.forward_matrix(x), a_hat, lambda, options).h;
  return m;
}

double Model::predict_raw(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != standardizer.size())
    throw std::invalid_argument("feature dimension does not match standardizer");
  Eigen::VectorXd xs(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) xs(static_cast<Eigen::Index>(j)) = standardizer.forward(static_cast<int>(j), x[j]);
  return standardizer.inverse_value(predict(h, xs));
}

std::string Model::to_json() const {
  json doc{{"registry_hash", registry_hash},
           {"rho", rho},
           {"w", std::vector<double>(h.w.data(), h.w.data() + h.w.size())},
           {"b", h.b},
           {"lambda", lambda},
           {"standardizer", json::parse(standardizer.to_json())}};
  return doc.dump(2) + "\n";
}

Model Model::from_json(const std::string& text) {
  const json doc = json::parse(text);
  Model m;
  m.registry_hash = doc.at("registry_hash").get<std::string>();
  m.rho = doc.at("rho").get<int>();
  const auto w = doc.at("w").get<std::vector<double>>();
  m.h.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.h.b = doc.at("b").get<double>();
  m.lambda = doc.at("lambda").get<double>();
  m.standardizer = Standardizer::from_json(doc.at("standardizer").dump());
  if (m.standardizer.size() != m.h.w.size()) throw std::invalid_argument("model: weight and standardizer sizes differ");
  return m;
}

std::string SummaryRow::csv_header() {
  return "property,|D|,n_min,n_max,a_min,a_max,|Gamma_int|,|F|,K,lambda,K_prime,median_test_R2";
}

std::string SummaryRow::csv() const {
  return property + "," + std::to_string(dataset_size) + "," + std::to_string(n_min) + "," + std::to_string(n_max) +
         "," + format_double(a_min) + "," + format_double(a_max) + "," + std::to_string(gamma_int) + "," +
         std::to_string(fringe) + "," + std::to_string(k) + "," + format_double(lambda) + "," +
         format_double(k_prime) + "," + format_double(median_r2);
}

SummaryRow summarize(const std::string& property, const Dataset& d, const DescriptorRegistry& reg,
                     const CvReport& report) {
  SummaryRow row;
  row.property = property;
  row.dataset_size = static_cast<int>(d.records.size());
  row.n_min = std::numeric_limits<int>::max();
  row.n_max = 0;
  row.a_min = std::numeric_limits<double>::infinity();
  row.a_max = -row.a_min;
  for (const auto& r : d.records) {
    const int n = r.graph.heavy_count();
    row.n_min = std::min(row.n_min, n);
    row.n_max = std::max(row.n_max, n);
    row.a_min = std::min(row.a_min, r.value);
    row.a_max = std::max(row.a_max, r.value);
  }
  for (const auto& desc : reg.descriptors()) {
    if (desc.kind == DescriptorKind::interior_edge_config) ++row.gamma_int;
    if (desc.kind == DescriptorKind::fringe_tree) ++row.fringe;
  }
  row.k = reg.size();
  row.lambda = report.lambda;
  row.k_prime = report.k_prime;
  row.median_r2 = report.median_r2;
  return row;
}

}  // namespace polyinfer
