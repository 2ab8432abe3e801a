#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyinfer/features.hpp"

namespace polyinfer {

struct Hyperplane {
  Eigen::VectorXd w;
  double b = 0.0;
};

/// w.x + b. Throws std::invalid_argument on a dimension mismatch.
double predict(const Hyperplane& h, const Eigen::VectorXd& x);
double predict(const Hyperplane& h, const std::vector<double>& x);
Eigen::VectorXd predict_all(const Hyperplane& h, const Eigen::MatrixXd& x);

/// 1 - Err / sum (a_i - mean)^2. Throws std::domain_error when the targets
/// have zero variance and std::invalid_argument for fewer than two points.
double r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& a);
double r_squared(const Hyperplane& h, const Eigen::MatrixXd& x, const Eigen::VectorXd& a);

struct LassoOptions {
  double tol = 1e-8;  // on the largest coordinate change in a sweep
  int max_sweeps = 100000;
  bool penalize_intercept = true;
  bool record_trace = false;  // objective after every sweep
};

struct LassoResult {
  Hyperplane h;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// (1/(2n)) sum (a_i - w.x_i - b)^2 + lambda (|w|_1 + |b|), the |b| term
/// dropped when the intercept is unpenalized.
double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, const Hyperplane& h, double lambda,
                       bool penalize_intercept = true);

/// Cyclic coordinate descent with soft thresholding; the intercept is the
/// last coordinate of each sweep.
LassoResult lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, double lambda,
                      const LassoOptions& options = {});

/// 0 followed by 36 geometrically spaced values from 1e-6 to 100.
std::vector<double> default_lambda_grid();

/// Uniform integer in [0, bound) by rejection, so fold assignments do not
/// depend on the standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Random partition of [0, n) into `folds` parts whose sizes differ by at most 1.
std::vector<std::vector<int>> fold_partition(int n, int folds, std::mt19937_64& rng);

struct CvOptions {
  int runs = 10;
  int folds = 5;
  std::uint64_t seed = 1;
  LassoOptions lasso;
};

struct CvReport {
  double lambda = 0.0;
  int runs = 0;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<double> test_r2;  // runs * folds entries, run-major
  double median_r2 = 0.0;
  double k_prime = 0.0;         // mean number of nonzero weights over trials

  std::string to_json() const;
};

/// Repeated k-fold cross-validation on already standardized data.
/// Throws std::invalid_argument when there are fewer rows than folds.
CvReport cross_validate(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, double lambda,
                        const CvOptions& options = {});

struct LambdaSelection {
  double lambda = 0.0;
  CvReport report;               // report at the selected lambda
  std::vector<CvReport> scanned;  // one per grid value, grid order
};

/// Runs cross_validate for every grid value and picks the largest lambda
/// whose median R^2 is within `tolerance` of the best median.
LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& a, const std::vector<double>& grid,
                              const CvOptions& options = {}, double tolerance = 1e-4);

double median(std::vector<double> values);

/// Trained prediction function together with everything needed to apply it
/// to raw feature vectors.
struct Model {
  std::string registry_hash;
  int rho = 2;
  Hyperplane h;
  double lambda = 0.0;
  Standardizer standardizer;

  /// Prediction in original property units for a raw feature vector.
  double predict_raw(const std::vector<double>& x) const;
  std::string to_json() const;
  static Model from_json(const std::string& text);
};

/// Standardizes the dataset with `reg` and fits the Lasso at `lambda`.
Model train_model(const Dataset& d, const DescriptorRegistry& reg, double lambda, const LassoOptions& options = {});

/// One row of the dataset/CV summary table.
struct SummaryRow {
  std::string property;
  int dataset_size = 0;
  int n_min = 0, n_max = 0;
  double a_min = 0, a_max = 0;
  int gamma_int = 0;  // distinct interior edge configurations
  int fringe = 0;     // distinct fringe trees
  int k = 0;
  double lambda = 0;
  double k_prime = 0;
  double median_r2 = 0;

  static std::string csv_header();
  std::string csv() const;
};

SummaryRow summarize(const std::string& property, const Dataset& d, const DescriptorRegistry& reg,
                     const CvReport& report);

}  // namespace polyinfer
