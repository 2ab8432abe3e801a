// polyinfer: command-line pipeline from graph corpora to inferred polymers.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyinfer/features.hpp"
#include "polyinfer/generate.hpp"
#include "polyinfer/milp.hpp"
#include "polyinfer/regress.hpp"
#include "polyinfer/synthetic.hpp"
#include "polyinfer/topospec.hpp"
#include "polyinfer/util.hpp"

using namespace polyinfer;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitEliminated = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCheckFailed = 4;

struct Window {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

Window parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--window expects LO,HI");
  Window w;
  try {
    w.lo = std::stod(text.substr(0, comma));
    w.hi = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("--window expects two numbers, got " + text);
  }
  if (!(w.lo <= w.hi)) throw std::invalid_argument("--window needs LO <= HI");
  return w;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string descriptor_name(const Descriptor& d) { return std::string(to_string(d.kind)) + ":" + d.key; }

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

Dataset load(const std::string& data, const std::string& graphs) {
  auto d = load_dataset(data, graphs);
  if (d.records.empty()) throw std::runtime_error("no usable records in " + data);
  return d;
}

// Standardized design matrix and targets of a dataset.
struct Standardized {
  Eigen::MatrixXd x;
  Eigen::VectorXd a;
};

Standardized standardize(const Dataset& d, const DescriptorRegistry& reg) {
  const Eigen::MatrixXd x = feature_matrix(d, reg);
  const Eigen::VectorXd a = target_vector(d);
  const auto st = Standardizer::fit(x, a);
  Standardized s{st.forward_matrix(x), Eigen::VectorXd(a.size())};
  for (Eigen::Index i = 0; i < a.size(); ++i) s.a(i) = st.forward_value(a(i));
  return s;
}

struct Trained {
  DescriptorRegistry registry;
  Model model;
};

Trained load_model(const std::string& model_path, const std::string& registry_path) {
  Trained t{DescriptorRegistry::from_json(read_file(registry_path)), Model::from_json(read_file(model_path))};
  if (t.model.registry_hash != t.registry.hash())
    throw std::runtime_error("model " + model_path + " was not trained with registry " + registry_path);
  return t;
}

// --- subcommands ----------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string property = "Prm";
  int n_lb = 20, count = 60, rho = 2;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  SyntheticOptions o;
  o.property = a.property;
  o.n_lb = a.n_lb;
  o.count = a.count;
  o.rho = a.rho;
  o.noise = a.noise;
  o.seed = a.seed;
  const auto records = synthesize_corpus(o);
  write_corpus(records, a.out);
  std::cout << "wrote " << records.size() << " graphs to " << a.out << "\n";
  return 0;
}

struct DataArgs {
  std::string data, graphs;
  int rho = 2;
};

struct FeaturizeArgs {
  DataArgs in;
  std::string out;
};

int run_featurize(const FeaturizeArgs& a) {
  const auto d = load_dataset(a.in.data, a.in.graphs);
  for (const auto& e : d.eliminated) std::cerr << "eliminated " << e.id << ": " << e.reason << "\n";
  if (d.records.empty()) {
    std::cerr << "error: no usable records\n";
    return kExitError;
  }
  const auto reg = build_registry(d, a.in.rho);
  fs::create_directories(a.out);
  write_file((fs::path(a.out) / "registry.json").string(), reg.to_json());
  std::ostringstream csv;
  csv << "id,value";
  for (const auto& desc : reg.descriptors()) csv << "," << csv_field(descriptor_name(desc));
  csv << "\n";
  for (const auto& r : d.records) {
    const auto f = featurize(r.graph, reg, r.covariates);
    csv << csv_field(r.id) << "," << format_double(r.value);
    for (double v : f.values) csv << "," << format_double(v);
    csv << "\n";
  }
  write_file((fs::path(a.out) / "features.csv").string(), csv.str());
  std::string report;
  for (const auto& e : d.eliminated) report += e.id + "\t" + e.reason + "\n";
  write_file((fs::path(a.out) / "eliminated.tsv").string(), report);
  std::cout << d.records.size() << " records, " << reg.size() << " descriptors, " << d.eliminated.size()
            << " eliminated\n";
  return d.eliminated.empty() ? 0 : kExitEliminated;
}

struct CvArgs {
  int runs = 10, folds = 5;
  std::uint64_t seed = 1;
  std::optional<double> lambda;
};

CvOptions cv_options(const CvArgs& a) {
  CvOptions o;
  o.runs = a.runs;
  o.folds = a.folds;
  o.seed = a.seed;
  return o;
}

struct TrainArgs {
  DataArgs in;
  CvArgs cv;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const auto d = load(a.in.data, a.in.graphs);
  const auto reg = build_registry(d, a.in.rho);
  double lambda = 0;
  if (a.cv.lambda) {
    lambda = *a.cv.lambda;
  } else {
    const auto s = standardize(d, reg);
    lambda = select_lambda(s.x, s.a, default_lambda_grid(), cv_options(a.cv)).lambda;
  }
  const auto model = train_model(d, reg, lambda);
  fs::create_directories(a.out);
  write_file((fs::path(a.out) / "registry.json").string(), reg.to_json());
  write_file((fs::path(a.out) / "model.json").string(), model.to_json());
  int nonzero = 0;
  for (Eigen::Index j = 0; j < model.h.w.size(); ++j) nonzero += model.h.w(j) != 0;
  std::cout << "lambda " << format_double(lambda) << ", " << nonzero << " of " << reg.size()
            << " weights nonzero, training R^2 "
            << format_double(r_squared(model.h, standardize(d, reg).x, standardize(d, reg).a)) << "\n";
  return 0;
}

struct CvCmdArgs {
  DataArgs in;
  CvArgs cv;
  std::string property = "synthetic";
  std::string out;
};

int run_cv(const CvCmdArgs& a) {
  const auto d = load(a.in.data, a.in.graphs);
  const auto reg = build_registry(d, a.in.rho);
  const auto s = standardize(d, reg);
  CvReport report;
  if (a.cv.lambda) {
    report = cross_validate(s.x, s.a, *a.cv.lambda, cv_options(a.cv));
  } else {
    report = select_lambda(s.x, s.a, default_lambda_grid(), cv_options(a.cv)).report;
  }
  const auto row = summarize(a.property, d, reg, report);
  const std::string text = SummaryRow::csv_header() + "\n" + row.csv() + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(a.out);
    write_file(a.out, text);
    std::cout << row.csv() << "\n";
  }
  return 0;
}

struct ModelArgs {
  std::string model, registry;
};

struct InferArgs {
  ModelArgs m;
  std::string window;
  double epsilon = 1e-5;
  std::string emit_lp, out;
  double limit_seconds = 60;
  long limit_nodes = 1'000'000;
};

InverseProblemSpec inverse_spec(const Trained& t, const InferArgs& a) {
  const auto w = parse_window(a.window);
  // The MILP constrains the standardized prediction.
  const auto& st = t.model.standardizer;
  return InverseProblemSpec::from_model(t.model, t.registry, st.forward_value(w.lo), st.forward_value(w.hi), a.epsilon);
}

int run_emit_lp(const InferArgs& a) {
  const auto t = load_model(a.m.model, a.m.registry);
  const auto spec = inverse_spec(t, a);
  const auto text = emit_lp(build_inverse_milp(spec), "inverse model for window " + a.window);
  if (a.emit_lp.empty()) {
    std::cout << text;
  } else {
    ensure_parent(a.emit_lp);
    write_file(a.emit_lp, text);
  }
  return 0;
}

int run_infer(const InferArgs& a) {
  const auto t = load_model(a.m.model, a.m.registry);
  const auto spec = inverse_spec(t, a);
  if (!a.emit_lp.empty()) {
    ensure_parent(a.emit_lp);
    write_file(a.emit_lp, emit_lp(build_inverse_milp(spec), "inverse model for window " + a.window));
  }
  SolveLimits limits;
  limits.max_seconds = a.limit_seconds;
  limits.max_nodes = a.limit_nodes;
  const auto sol = solve_inverse(spec, limits);
  json doc{{"status", to_string(sol.solution.status)}, {"nodes", sol.solution.nodes}, {"window", a.window}};
  if (sol.solution.status == SolveStatus::feasible) {
    doc["prediction"] = t.model.standardizer.inverse_value(sol.y_hat);
    json x = json::object();
    for (int j = 0; j < t.registry.size(); ++j)
      if (sol.x[j] != 0) x[descriptor_name(t.registry[j])] = sol.x[j];
    doc["descriptors"] = x;
  }
  const auto text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(a.out);
    write_file(a.out, text);
    std::cout << "status " << to_string(sol.solution.status) << "\n";
  }
  if (sol.solution.status == SolveStatus::infeasible) return kExitInfeasible;
  return sol.solution.status == SolveStatus::feasible ? 0 : kExitError;
}

struct InstanceArgs {
  std::string property = "Prm";
  int n_lb = 20;
  std::string catalog, out;
};

int run_instance(const InstanceArgs& a) {
  std::vector<std::string> catalog;
  if (!a.catalog.empty()) catalog = read_catalog(a.catalog);
  const auto spec = build_instance_ib(a.property, a.n_lb, catalog);
  if (a.out.empty()) {
    std::cout << spec.to_json();
  } else {
    ensure_parent(a.out);
    write_file(a.out, spec.to_json());
  }
  return 0;
}

struct CheckArgs {
  std::string spec, graph;
  int rho = 2;
};

int run_check(const CheckArgs& a) {
  const auto spec = TopologicalSpec::from_json(read_file(a.spec));
  const auto report = check_satisfies(read_pmg_file(a.graph), spec, a.rho);
  std::cout << report.to_json();
  return report.pass ? 0 : kExitCheckFailed;
}

struct GenerateArgs {
  ModelArgs m;
  std::string spec, window, out;
  long limit_candidates = 100;
  double limit_seconds = 60;
};

int run_generate(const GenerateArgs& a) {
  const auto t = load_model(a.m.model, a.m.registry);
  const auto spec = TopologicalSpec::from_json(read_file(a.spec));
  const auto w = parse_window(a.window);
  GenerateOptions o;
  o.window_lo = w.lo;
  o.window_hi = w.hi;
  o.limits.max_candidates = a.limit_candidates;
  o.limits.max_seconds = a.limit_seconds;
  fs::create_directories(a.out);
  std::ofstream manifest(fs::path(a.out) / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + a.out);
  const auto result = generate(spec, t.model, t.registry, o, [&](const Candidate& c) {
    const std::string file = c.hash + ".pmg";
    write_file((fs::path(a.out) / file).string(), serialize_pmg(c.graph));
    manifest << json{{"hash", c.hash}, {"file", file}, {"prediction", c.prediction}, {"counters", c.counters}}.dump()
             << "\n";
    manifest.flush();
    return true;
  });
  const auto& s = result.stats;
  std::cout << "status " << to_string(result.status) << ", " << result.candidates.size() << " graphs, " << s.skeletons
            << " skeletons, " << s.leaves << " leaves, " << s.pruned << " pruned, " << s.rejected << " rejected\n";
  return 0;
}

struct VerifyArgs {
  ModelArgs m;
  std::string spec, window;
  std::vector<std::string> graphs;
};

int run_verify(const VerifyArgs& a) {
  const auto t = load_model(a.m.model, a.m.registry);
  const auto spec = TopologicalSpec::from_json(read_file(a.spec));
  const auto w = parse_window(a.window);
  std::vector<std::string> files;
  for (const auto& p : a.graphs) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".pmg") files.push_back(e.path().string());
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no graph files given");
  int failed = 0;
  for (const auto& f : files) {
    const auto r = verify_roundtrip(read_pmg_file(f), spec, t.model, t.registry, w.lo, w.hi);
    failed += !r.pass;
    json checks = json::object();
    for (const auto& [name, ok] : r.checks) checks[name] = ok;
    json line{{"file", f}, {"pass", r.pass}, {"prediction", r.prediction}, {"checks", checks}};
    if (!r.oov.empty()) line["oov"] = r.oov;
    std::cout << line.dump() << "\n";
  }
  std::cerr << files.size() - failed << " of " << files.size() << " graphs pass\n";
  return failed == 0 ? 0 : kExitCheckFailed;
}

void data_options(CLI::App* c, DataArgs& d) {
  c->add_option("--data", d.data, "CSV with id,value[,covariates] rows")->required();
  c->add_option("--graphs", d.graphs, "directory of <id>.pmg files")->required();
  c->add_option("--rho", d.rho, "branch parameter")->capture_default_str();
}

void cv_flags(CLI::App* c, CvArgs& a) {
  c->add_option("--lambda", a.lambda, "Lasso penalty; selected by cross-validation when absent");
  c->add_option("--runs", a.runs, "cross-validation repetitions")->capture_default_str();
  c->add_option("--folds", a.folds, "folds per repetition")->capture_default_str();
  c->add_option("--seed", a.seed, "fold assignment seed")->capture_default_str();
}

void model_options(CLI::App* c, ModelArgs& m) {
  c->add_option("--model", m.model, "model.json from train")->required();
  c->add_option("--registry", m.registry, "registry.json from train")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polymer property prediction and inverse inference"};
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic corpus sampled from instance I_b");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--property", synth.property, "element-set tag")->capture_default_str();
  c_synth->add_option("--n-lb", synth.n_lb, "n_LB of the instance")->capture_default_str();
  c_synth->add_option("--count", synth.count, "number of graphs")->capture_default_str();
  c_synth->add_option("--rho", synth.rho, "branch parameter")->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "standard deviation of label noise")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "random seed")->capture_default_str();

  FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "build the descriptor registry and feature matrix");
  data_options(c_feat, feat.in);
  c_feat->add_option("--out", feat.out, "output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "fit a Lasso model");
  data_options(c_train, train.in);
  cv_flags(c_train, train.cv);
  c_train->add_option("--out", train.out, "output directory for model.json and registry.json")->required();

  CvCmdArgs cv;
  auto* c_cv = app.add_subcommand("cv", "cross-validate and print a summary row");
  data_options(c_cv, cv.in);
  cv_flags(c_cv, cv.cv);
  c_cv->add_option("--property", cv.property, "label for the summary row")->capture_default_str();
  c_cv->add_option("--out", cv.out, "CSV output path");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "solve the inverse MILP for a descriptor vector");
  model_options(c_infer, infer.m);
  c_infer->add_option("--window", infer.window, "target window LO,HI in property units")->required();
  c_infer->add_option("--epsilon", infer.epsilon, "normalization tolerance")->capture_default_str();
  c_infer->add_option("--emit-lp", infer.emit_lp, "also write the model as an LP file");
  c_infer->add_option("--out", infer.out, "JSON output path");
  c_infer->add_option("--limit-seconds", infer.limit_seconds, "solver time limit")->capture_default_str();
  c_infer->add_option("--limit-nodes", infer.limit_nodes, "branch-and-bound node limit")->capture_default_str();

  InferArgs lp;
  auto* c_lp = app.add_subcommand("emit-lp", "write the inverse MILP as an LP file");
  model_options(c_lp, lp.m);
  c_lp->add_option("--window", lp.window, "target window LO,HI in property units")->required();
  c_lp->add_option("--epsilon", lp.epsilon, "normalization tolerance")->capture_default_str();
  c_lp->add_option("--out,--emit-lp", lp.emit_lp, "LP output path (stdout when absent)");

  InstanceArgs inst;
  auto* c_inst = app.add_subcommand("instance", "write the topological specification of instance I_b");
  c_inst->add_option("--property", inst.property, "element-set tag")->capture_default_str();
  c_inst->add_option("--n-lb", inst.n_lb, "lower bound on non-hydrogen atoms")->capture_default_str();
  c_inst->add_option("--catalog", inst.catalog, "fringe-tree catalog file");
  c_inst->add_option("--out", inst.out, "JSON output path (stdout when absent)");

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "check a graph against a specification");
  c_check->add_option("--spec", check.spec, "specification JSON")->required();
  c_check->add_option("--graph", check.graph, "PMG file")->required();
  c_check->add_option("--rho", check.rho, "branch parameter")->capture_default_str();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "enumerate graphs whose prediction lies in a window");
  model_options(c_gen, gen.m);
  c_gen->add_option("--spec", gen.spec, "specification JSON")->required();
  c_gen->add_option("--window", gen.window, "target window LO,HI in property units")->required();
  c_gen->add_option("--out", gen.out, "output directory for PMG files and manifest.jsonl")->required();
  c_gen->add_option("--limit-candidates", gen.limit_candidates, "stop after this many graphs")->capture_default_str();
  c_gen->add_option("--limit-seconds", gen.limit_seconds, "search time limit")->capture_default_str();

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "re-check generated graphs");
  model_options(c_ver, ver.m);
  c_ver->add_option("--spec", ver.spec, "specification JSON")->required();
  c_ver->add_option("--window", ver.window, "target window LO,HI in property units")->required();
  c_ver->add_option("graphs", ver.graphs, "PMG files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_feat->parsed()) return run_featurize(feat);
    if (c_train->parsed()) return run_train(train);
    if (c_cv->parsed()) return run_cv(cv);
    if (c_infer->parsed()) return run_infer(infer);
    if (c_lp->parsed()) return run_emit_lp(lp);
    if (c_inst->parsed()) return run_instance(inst);
    if (c_check->parsed()) return run_check(check);
    if (c_gen->parsed()) return run_generate(gen);
    if (c_ver->parsed()) return run_verify(ver);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
