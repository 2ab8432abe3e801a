#include "polyinfer/features.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace polyinfer {

using nlohmann::json;

namespace {

struct KindName {
  DescriptorKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {DescriptorKind::scalar, "scalar"},
    {DescriptorKind::element_count, "element"},
    {DescriptorKind::degree_symbol, "degree_symbol"},
    {DescriptorKind::interior_edge_config, "ec_int"},
    {DescriptorKind::link_edge_config, "ec_lnk"},
    {DescriptorKind::interior_adjacency_config, "ac_int"},
    {DescriptorKind::link_adjacency_config, "ac_lnk"},
    {DescriptorKind::leaf_adjacency_config, "ac_lf"},
    {DescriptorKind::fringe_tree, "fringe"},
    {DescriptorKind::extra, "extra"},
};

}  // namespace

std::string_view to_string(DescriptorKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

DescriptorKind parse_descriptor_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (text == name) return k;
  throw std::invalid_argument("unknown descriptor kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Profiles

GraphProfile profile(const ChemicalGraph& g, int rho) { return profile(decompose(g, rho), g); }

GraphProfile profile(const TwoLayeredDecomposition& d, const ChemicalGraph& g) {
  const auto& table = ElementTable::standard();
  const auto& hs = d.hs;
  GraphProfile p;
  p.n = hs.order();
  p.rank = rank(g.topology());
  p.n_int = static_cast<int>(d.interior_vertices.size());
  // Summed per element so the result does not depend on atom numbering.
  std::vector<int> heavy(table.size(), 0);
  for (int v = 0; v < hs.order(); ++v) ++heavy[hs.element[v]];
  double mass = 0;
  for (int el = 0; el < table.size(); ++el) mass += heavy[el] * table[el].mass;
  p.mass_average = p.n > 0 ? mass / p.n : 0.0;
  for (int v = 0; v < g.vertex_count(); ++v) ++p.elements[table[g.element(v)].symbol];
  for (int v : d.interior_vertices) ++p.degree_symbols[degree_symbol(hs.element[v], d.degree(v))];
  for (int e : d.interior_edges) {
    const auto ec = edge_config(d, e);
    ++p.ec_int[key(ec)];
    ++p.ac_int[key(reduce(ec))];
    if (hs.link[e]) {
      ++p.ec_lnk[key(ec)];
      ++p.ac_lnk[key(reduce(ec))];
      ++p.n_lnk_edges;
    }
  }
  for (int e = 0; e < hs.topology.size(); ++e) {
    auto [u, v] = hs.topology.edge(e);
    const bool u_leaf = hs.topology.degree(u) == 1, v_leaf = hs.topology.degree(v) == 1;
    if (!u_leaf && !v_leaf) continue;
    if (u_leaf && v_leaf) {
      if (table.less(hs.element[v], hs.element[u])) std::swap(u, v);
    } else if (u_leaf) {
      std::swap(u, v);
    }
    ++p.ac_lf[table[hs.element[u]].symbol + "," + table[hs.element[v]].symbol + "," +
              std::to_string(hs.multiplicity[e])];
  }
  for (const auto& ft : d.fringe_trees) ++p.fringe[ft.code];
  return p;
}

// ---------------------------------------------------------------------------
// Registry

DescriptorRegistry::DescriptorRegistry(int rho, std::vector<Descriptor> descriptors)
    : rho_(rho), descriptors_(std::move(descriptors)) {
  for (int j = 0; j < size(); ++j) {
    const auto& d = descriptors_[j];
    if (!index_.emplace(std::pair{static_cast<int>(d.kind), d.key}, j).second)
      throw std::invalid_argument("duplicate descriptor " + std::string(to_string(d.kind)) + ":" + d.key);
  }
}

std::optional<int> DescriptorRegistry::find(DescriptorKind kind, const std::string& key) const {
  auto it = index_.find({static_cast<int>(kind), key});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DescriptorRegistry::extras() const {
  std::vector<std::string> out;
  for (const auto& d : descriptors_)
    if (d.kind == DescriptorKind::extra) out.push_back(d.key);
  return out;
}

std::string DescriptorRegistry::to_json() const {
  json list = json::array();
  for (int j = 0; j < size(); ++j) {
    const auto& d = descriptors_[j];
    list.push_back({{"index", j + 1}, {"kind", to_string(d.kind)}, {"key", d.key}, {"integer", d.integer}});
  }
  json doc{{"rho", rho_}, {"descriptors", list}};
  return doc.dump(2) + "\n";
}

DescriptorRegistry DescriptorRegistry::from_json(const std::string& text) {
  const json doc = json::parse(text);
  std::vector<Descriptor> ds;
  for (const auto& item : doc.at("descriptors")) {
    if (item.at("index").get<int>() != static_cast<int>(ds.size()) + 1)
      throw std::invalid_argument("registry indices are not contiguous");
    ds.push_back({parse_descriptor_kind(item.at("kind").get<std::string>()), item.at("key").get<std::string>(),
                  item.at("integer").get<bool>()});
  }
  return DescriptorRegistry(doc.at("rho").get<int>(), std::move(ds));
}

std::string DescriptorRegistry::hash() const { return hex64(fnv1a(to_json())); }

DescriptorRegistry build_registry(const Dataset& d, int rho) {
  if (d.records.empty()) throw std::invalid_argument("cannot build a registry from an empty dataset");
  std::set<std::string> elements, degrees, ec_int, ec_lnk, ac_int, ac_lnk, ac_lf, fringe;
  for (const auto& r : d.records) {
    const auto p = profile(r.graph, rho);
    auto collect = [](std::set<std::string>& into, const std::map<std::string, int>& from) {
      for (const auto& [k, count] : from)
        if (count > 0) into.insert(k);
    };
    collect(elements, p.elements);
    collect(degrees, p.degree_symbols);
    collect(ec_int, p.ec_int);
    collect(ec_lnk, p.ec_lnk);
    collect(ac_int, p.ac_int);
    collect(ac_lnk, p.ac_lnk);
    collect(ac_lf, p.ac_lf);
    collect(fringe, p.fringe);
  }
  std::vector<Descriptor> ds;
  for (const auto& name : leading_scalars()) ds.push_back({DescriptorKind::scalar, name, name != "ms"});
  auto append = [&](DescriptorKind kind, const std::set<std::string>& keys) {
    for (const auto& k : keys) ds.push_back({kind, k, true});
  };
  append(DescriptorKind::element_count, elements);
  append(DescriptorKind::degree_symbol, degrees);
  append(DescriptorKind::interior_edge_config, ec_int);
  append(DescriptorKind::link_edge_config, ec_lnk);
  append(DescriptorKind::interior_adjacency_config, ac_int);
  append(DescriptorKind::link_adjacency_config, ac_lnk);
  append(DescriptorKind::leaf_adjacency_config, ac_lf);
  append(DescriptorKind::fringe_tree, fringe);
  ds.push_back({DescriptorKind::scalar, "n_lnk_edges", true});
  for (const auto& name : d.covariate_names) ds.push_back({DescriptorKind::extra, name, false});
  return DescriptorRegistry(rho, std::move(ds));
}

// ---------------------------------------------------------------------------
// Feature vectors

FeatureVector featurize(const ChemicalGraph& g, const DescriptorRegistry& reg,
                        const std::map<std::string, double>& covariates) {
  return featurize(profile(g, reg.rho()), reg, covariates);
}

FeatureVector featurize(const GraphProfile& p, const DescriptorRegistry& reg,
                        const std::map<std::string, double>& covariates) {
  FeatureVector f;
  f.values.assign(reg.size(), 0.0);
  auto scatter = [&](DescriptorKind kind, const std::map<std::string, int>& counts) {
    for (const auto& [k, count] : counts) {
      if (count == 0) continue;
      if (auto j = reg.find(kind, k))
        f.values[*j] = count;
      else
        f.oov.push_back(std::string(to_string(kind)) + ":" + k);
    }
  };
  const std::pair<const char*, double> scalars[] = {
      {"n", p.n}, {"rank", p.rank}, {"n_int", p.n_int}, {"ms", p.mass_average}, {"n_lnk_edges", p.n_lnk_edges}};
  for (const auto& [name, value] : scalars)
    if (auto j = reg.find(DescriptorKind::scalar, name)) f.values[*j] = value;
  scatter(DescriptorKind::element_count, p.elements);
  scatter(DescriptorKind::degree_symbol, p.degree_symbols);
  scatter(DescriptorKind::interior_edge_config, p.ec_int);
  scatter(DescriptorKind::link_edge_config, p.ec_lnk);
  scatter(DescriptorKind::interior_adjacency_config, p.ac_int);
  scatter(DescriptorKind::link_adjacency_config, p.ac_lnk);
  scatter(DescriptorKind::leaf_adjacency_config, p.ac_lf);
  scatter(DescriptorKind::fringe_tree, p.fringe);
  for (const auto& name : reg.extras()) {
    auto it = covariates.find(name);
    if (it == covariates.end()) throw std::invalid_argument("missing covariate '" + name + "'");
    f.values[*reg.find(DescriptorKind::extra, name)] = it->second;
  }
  return f;
}

Eigen::MatrixXd feature_matrix(const Dataset& d, const DescriptorRegistry& reg) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.records.size()), reg.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto f = featurize(d.records[i].graph, reg, d.records[i].covariates);
    for (int j = 0; j < reg.size(); ++j) x(static_cast<Eigen::Index>(i), j) = f.values[j];
  }
  return x;
}

Eigen::VectorXd target_vector(const Dataset& d) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(d.records.size()));
  for (std::size_t i = 0; i < d.records.size(); ++i) a(static_cast<Eigen::Index>(i)) = d.records[i].value;
  return a;
}

// ---------------------------------------------------------------------------
// Datasets

std::optional<std::string> elimination_reason(const ChemicalGraph& g) {
  if (!is_connected(g.topology())) return "graph is disconnected";
  for (int v = 0; v < g.vertex_count(); ++v) {
    int heavy = 0;
    for (const auto& inc : g.topology().incident(v))
      if (!g.is_hydrogen(inc.vertex)) ++heavy;
    if (heavy > 4)
      return "atom " + std::to_string(g.atom_id(v)) + " has " + std::to_string(heavy) + " non-hydrogen neighbours";
  }
  if (g.link_edges().empty()) return "fewer than two end-vertices of link-edges";
  return std::nullopt;
}

bool add_record(Dataset& d, Record r) {
  if (auto reason = elimination_reason(r.graph)) {
    d.eliminated.push_back({r.id, *reason});
    return false;
  }
  d.records.push_back(std::move(r));
  return true;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::runtime_error(where + ": '" + s + "' is not a number");
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& csv_path, const std::string& graph_dir, const ValidationOptions& options) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  if (!std::filesystem::is_directory(graph_dir)) throw std::runtime_error("not a directory: " + graph_dir);
  Dataset d;
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = csv_path + ":" + std::to_string(line_no);
    if (header.empty()) {
      header = cells;
      if (header.size() < 2 || header[0] != "id" || header[1] != "value")
        throw std::runtime_error(where + ": header must start with id,value");
      d.covariate_names.assign(header.begin() + 2, header.end());
      continue;
    }
    if (cells.size() != header.size())
      throw std::runtime_error(where + ": expected " + std::to_string(header.size()) + " columns");
    Record r{cells[0], {}, parse_double(cells[1], where), {}};
    if (r.id.empty()) throw std::runtime_error(where + ": empty id");
    for (std::size_t c = 2; c < cells.size(); ++c) r.covariates[header[c]] = parse_double(cells[c], where);
    const auto path = std::filesystem::path(graph_dir) / (r.id + ".pmg");
    if (!std::filesystem::exists(path)) {
      d.eliminated.push_back({r.id, "no graph file " + path.string()});
      continue;
    }
    ValidationOptions relaxed = options;
    relaxed.require_connected = false;  // disconnection is an elimination, not an error
    try {
      r.graph = read_pmg_file(path.string(), relaxed);
    } catch (const GraphError& e) {
      d.eliminated.push_back({r.id, e.what()});
      continue;
    }
    add_record(d, std::move(r));
  }
  if (header.empty()) throw std::runtime_error(csv_path + ": empty CSV");
  if (d.records.empty()) throw std::runtime_error("no usable records in " + csv_path);
  return d;
}

// ---------------------------------------------------------------------------
// Standardizer

Standardizer::Standardizer(std::vector<double> min, std::vector<double> max, double value_min, double value_max)
    : min_(std::move(min)), max_(std::move(max)), value_min_(value_min), value_max_(value_max) {
  if (min_.size() != max_.size()) throw std::invalid_argument("standardizer size mismatch");
  for (int j = 0; j < size(); ++j)
    if (max_[j] < min_[j]) throw std::invalid_argument("standardizer max < min");
  if (value_max_ < value_min_) throw std::invalid_argument("standardizer value max < min");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& a) {
  if (x.rows() == 0 || a.size() != x.rows()) throw std::invalid_argument("standardizer needs matching nonempty data");
  std::vector<double> lo(x.cols()), hi(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    lo[j] = x.col(j).minCoeff();
    hi[j] = x.col(j).maxCoeff();
  }
  return Standardizer(std::move(lo), std::move(hi), a.minCoeff(), a.maxCoeff());
}

double Standardizer::forward(int j, double x) const { return constant(j) ? 0.0 : (x - min_[j]) / range(j); }

double Standardizer::inverse(int j, double x_hat) const {
  return constant(j) ? min_[j] : min_[j] + x_hat * range(j);
}

Eigen::VectorXd Standardizer::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) out(j) = forward(static_cast<int>(j), x(j));
  return out;
}

Eigen::MatrixXd Standardizer::forward_matrix(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = forward(static_cast<int>(j), x(i, j));
  return out;
}

double Standardizer::forward_value(double a) const {
  return value_max_ > value_min_ ? (a - value_min_) / (value_max_ - value_min_) : 0.0;
}

double Standardizer::inverse_value(double a_hat) const { return value_min_ + a_hat * (value_max_ - value_min_); }

std::string Standardizer::to_json() const {
  json doc{{"min", min_}, {"max", max_}, {"value_min", value_min_}, {"value_max", value_max_}};
  return doc.dump(2) + "\n";
}

Standardizer Standardizer::from_json(const std::string& text) {
  const json doc = json::parse(text);
  return Standardizer(doc.at("min").get<std::vector<double>>(), doc.at("max").get<std::vector<double>>(),
                      doc.at("value_min").get<double>(), doc.at("value_max").get<double>());
}

}  // namespace polyinfer
