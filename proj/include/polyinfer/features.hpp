#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyinfer/chemgraph.hpp"
#include "polyinfer/twolayer.hpp"

namespace polyinfer {

enum class DescriptorKind {
  scalar,
  element_count,
  degree_symbol,
  interior_edge_config,
  link_edge_config,
  interior_adjacency_config,
  link_adjacency_config,
  leaf_adjacency_config,
  fringe_tree,
  extra,
};

std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor_kind(std::string_view text);

struct Descriptor {
  DescriptorKind kind = DescriptorKind::scalar;
  std::string key;
  bool integer = true;  // count-valued, non-negative
  bool operator==(const Descriptor&) const = default;
};

/// Raw counts of one graph, before any registry is involved.
struct GraphProfile {
  int n = 0;                // non-hydrogen atoms
  int rank = 0;
  int n_int = 0;            // interior vertices
  double mass_average = 0;  // mean atomic mass over non-hydrogen atoms
  int n_lnk_edges = 0;
  std::map<std::string, int> elements;        // all atoms, hydrogens included
  std::map<std::string, int> degree_symbols;  // interior vertices, H-suppressed degree
  std::map<std::string, int> ec_int, ec_lnk;  // edge configurations
  std::map<std::string, int> ac_int, ac_lnk;  // adjacency configurations
  std::map<std::string, int> ac_lf;           // leaf edges, oriented (parent,leaf)
  std::map<std::string, int> fringe;          // fringe-tree codes
};

GraphProfile profile(const ChemicalGraph& g, int rho);
GraphProfile profile(const TwoLayeredDecomposition& d, const ChemicalGraph& g);

/// Names of the fixed scalar descriptors, in registry order.
inline const std::vector<std::string>& leading_scalars() {
  static const std::vector<std::string> names{"n", "rank", "n_int", "ms"};
  return names;
}

class DescriptorRegistry {
 public:
  DescriptorRegistry() = default;
  DescriptorRegistry(int rho, std::vector<Descriptor> descriptors);

  int rho() const { return rho_; }
  int size() const { return static_cast<int>(descriptors_.size()); }
  const Descriptor& operator[](int j) const { return descriptors_.at(j); }
  const std::vector<Descriptor>& descriptors() const { return descriptors_; }
  std::optional<int> find(DescriptorKind kind, const std::string& key) const;
  std::vector<std::string> extras() const;

  std::string to_json() const;
  static DescriptorRegistry from_json(const std::string& text);
  /// FNV-1a of to_json(), as 16 hex digits.
  std::string hash() const;

  bool operator==(const DescriptorRegistry&) const = default;

 private:
  int rho_ = 2;
  std::vector<Descriptor> descriptors_;
  std::map<std::pair<int, std::string>, int> index_;
};

struct Record {
  std::string id;
  ChemicalGraph graph;
  double value = 0.0;
  std::map<std::string, double> covariates;
};

struct Elimination {
  std::string id;
  std::string reason;
};

struct Dataset {
  std::vector<Record> records;
  std::vector<std::string> covariate_names;  // extra CSV columns, in file order
  std::vector<Elimination> eliminated;
};

/// Reason a graph would be dropped from a training set, if any: disconnected,
/// an atom with more than four non-hydrogen neighbours, or fewer than two
/// end-vertices of link-edges.
std::optional<std::string> elimination_reason(const ChemicalGraph& g);

/// Reads `id,value[,covariate...]` rows and `<graph_dir>/<id>.pmg` files.
/// Unreadable or ineligible graphs are listed in `eliminated`. Throws
/// std::runtime_error on a missing or malformed CSV and when no record
/// survives.
Dataset load_dataset(const std::string& csv_path, const std::string& graph_dir,
                     const ValidationOptions& options = {});

/// Adds a record after applying the elimination rules; returns false when
/// the record was eliminated.
bool add_record(Dataset& d, Record r);

DescriptorRegistry build_registry(const Dataset& d, int rho);

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> oov;  // "kind:key" of counts with no coordinate
};

FeatureVector featurize(const ChemicalGraph& g, const DescriptorRegistry& reg,
                        const std::map<std::string, double>& covariates = {});
FeatureVector featurize(const GraphProfile& p, const DescriptorRegistry& reg,
                        const std::map<std::string, double>& covariates = {});

/// Row i is featurize(d.records[i]); OOV entries are ignored.
Eigen::MatrixXd feature_matrix(const Dataset& d, const DescriptorRegistry& reg);
Eigen::VectorXd target_vector(const Dataset& d);

/// Min-max scaling of descriptors and of the property value.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> min, std::vector<double> max, double value_min, double value_max);

  static Standardizer fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& a);

  int size() const { return static_cast<int>(min_.size()); }
  double min(int j) const { return min_[j]; }
  double max(int j) const { return max_[j]; }
  double range(int j) const { return max_[j] - min_[j]; }
  /// max == min; such coordinates standardize to 0.
  bool constant(int j) const { return !(max_[j] > min_[j]); }
  double value_min() const { return value_min_; }
  double value_max() const { return value_max_; }

  double forward(int j, double x) const;
  double inverse(int j, double x_hat) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_matrix(const Eigen::MatrixXd& x) const;
  double forward_value(double a) const;
  double inverse_value(double a_hat) const;

  std::string to_json() const;
  static Standardizer from_json(const std::string& text);

 private:
  std::vector<double> min_, max_;
  double value_min_ = 0, value_max_ = 1;
};

}  // namespace polyinfer
