#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "polyinfer/features.hpp"
#include "polyinfer/util.hpp"

using namespace polyinfer;
namespace fs = std::filesystem;

namespace {

std::string reference_text() { return read_file(std::string(POLYINFER_DATA_DIR) + "/reference_monomer.pmg"); }

// Benzene ring 1..6 with alternating bonds, link-edges 1-2 and 4-5, and a
// hydrogen or methyl group on each ring carbon.
std::string ring_text(const std::vector<bool>& methyl) {
  std::string t = "PMG 1\n";
  int next = 7;
  for (int i = 1; i <= 6; ++i) t += "ATOM " + std::to_string(i) + " C\n";
  for (int i = 1; i <= 6; ++i) {
    t += "BOND " + std::to_string(i) + " " + std::to_string(i % 6 + 1) + " " + (i % 2 ? "2" : "1") + "\n";
    const int s = next++;
    if (methyl[i - 1]) {
      t += "ATOM " + std::to_string(s) + " C\nBOND " + std::to_string(i) + " " + std::to_string(s) + " 1\n";
      for (int k = 0; k < 3; ++k, ++next)
        t += "ATOM " + std::to_string(next) + " H\nBOND " + std::to_string(s) + " " + std::to_string(next) + " 1\n";
    } else {
      t += "ATOM " + std::to_string(s) + " H\nBOND " + std::to_string(i) + " " + std::to_string(s) + " 1\n";
    }
  }
  return t + "LINK 1 2\nLINK 4 5\nCONNECT 1 2\n";
}

std::string shuffled(const std::string& text, std::mt19937& rng) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string out = header + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// Renames every atom id by a random permutation.
std::string renamed(const ChemicalGraph& g, std::mt19937& rng) {
  std::vector<int> ids(g.vertex_count());
  std::iota(ids.begin(), ids.end(), 500);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto& table = ElementTable::standard();
  std::string out = "PMG 1\n";
  for (int v = 0; v < g.vertex_count(); ++v) out += "ATOM " + std::to_string(ids[v]) + " " + table[g.element(v)].symbol + "\n";
  for (const auto& b : g.bonds()) {
    out += "BOND " + std::to_string(ids[b.u]) + " " + std::to_string(ids[b.v]) + " " + std::to_string(b.multiplicity) + "\n";
    if (b.link) out += "LINK " + std::to_string(ids[b.v]) + " " + std::to_string(ids[b.u]) + "\n";
  }
  if (g.connecting())
    out += "CONNECT " + std::to_string(ids[g.connecting()->first]) + " " + std::to_string(ids[g.connecting()->second]) + "\n";
  return shuffled(out, rng);
}

int total(const std::map<std::string, int>& m) {
  int s = 0;
  for (const auto& [k, v] : m) s += v;
  return s;
}

Dataset small_dataset() {
  Dataset d;
  add_record(d, {"benzene", parse_pmg(ring_text({false, false, false, false, false, false})), 1.0, {}});
  add_record(d, {"toluene", parse_pmg(ring_text({true, false, false, false, false, false})), 2.0, {}});
  add_record(d, {"ref", parse_pmg(reference_text()), 5.0, {}});
  return d;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("polyinfer_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("profile of the reference monomer") {
  const auto g = parse_pmg(reference_text());
  const auto p = profile(g, 2);
  CHECK(p.n == 55);
  CHECK(p.n_int == 29);
  CHECK(p.rank == 4);
  CHECK(p.n_lnk_edges == 6);
  CHECK(p.fringe.at("C") == 5);
  CHECK(p.fringe.at("C[H]") == 6);
  CHECK(p.fringe.size() == 16);
  CHECK(total(p.fringe) == 29);
  CHECK(total(p.degree_symbols) == 29);
  CHECK(total(p.ec_int) == 32);
  CHECK(total(p.ac_int) == 32);
  CHECK(total(p.ec_lnk) == 6);
  CHECK(total(p.ac_lnk) == 6);
  // Element counts straight from the file.
  std::map<std::string, int> atoms;
  std::istringstream in(reference_text());
  for (std::string line; std::getline(in, line);)
    if (line.rfind("ATOM ", 0) == 0) ++atoms[line.substr(line.rfind(' ') + 1)];
  CHECK(p.elements == atoms);
  double mass = 0;
  const auto& table = ElementTable::standard();
  for (const auto& [symbol, count] : atoms)
    if (symbol != "H") mass += count * table[table.id(symbol)].mass;
  CHECK(p.mass_average == doctest::Approx(mass / 55).epsilon(1e-12));
  // Leaf edges of the hydrogen-suppressed graph, counted directly.
  const auto hs = hydrogen_suppress(g);
  int leaf_edges = 0;
  for (const auto& e : hs.topology.edges()) leaf_edges += hs.topology.degree(e.u) == 1 || hs.topology.degree(e.v) == 1;
  CHECK(total(p.ac_lf) == leaf_edges);
  CHECK(p.ac_lf.at("C,O,2") >= 1);  // carbonyl oxygens are leaves
}

TEST_CASE("profiles ignore atom numbering and record order") {
  std::mt19937 rng(41);
  const auto g = parse_pmg(reference_text());
  const auto reg = build_registry(small_dataset(), 2);
  const auto want = featurize(g, reg);
  for (int i = 0; i < 5; ++i) {
    const auto f = featurize(parse_pmg(renamed(g, rng)), reg);
    CHECK(f.values == want.values);
    CHECK(f.oov.empty());
  }
}

TEST_CASE("descriptor registry") {
  const auto d = small_dataset();
  REQUIRE(d.records.size() == 3);
  const auto reg = build_registry(d, 2);
  CHECK(reg[0].key == "n");
  CHECK(reg[1].key == "rank");
  CHECK(reg[2].key == "n_int");
  CHECK(reg[3].key == "ms");
  CHECK_FALSE(reg[3].integer);
  CHECK(reg[reg.size() - 1].key == "n_lnk_edges");

  SUBCASE("is independent of record order") {
    Dataset r;
    for (int i = 2; i >= 0; --i) add_record(r, d.records[i]);
    CHECK(build_registry(r, 2).to_json() == reg.to_json());
  }
  SUBCASE("round-trips through JSON") {
    const auto back = DescriptorRegistry::from_json(reg.to_json());
    CHECK(back == reg);
    CHECK(back.hash() == reg.hash());
    CHECK(reg.hash().size() == 16);
  }
  SUBCASE("fringe counts land in their coordinates") {
    const auto f = featurize(d.records[2].graph, reg);
    CHECK(f.values[*reg.find(DescriptorKind::fringe_tree, "C")] == 5);
    CHECK(f.values[*reg.find(DescriptorKind::scalar, "n_lnk_edges")] == 6);
    CHECK(f.values[*reg.find(DescriptorKind::element_count, "Cl")] == 1);
  }
  SUBCASE("unseen substructures are reported") {
    const auto benzene_only = [&] {
      Dataset b;
      add_record(b, d.records[0]);
      return build_registry(b, 2);
    }();
    const auto f = featurize(d.records[1].graph, benzene_only);
    CHECK_FALSE(f.oov.empty());
    CHECK(std::find(f.oov.begin(), f.oov.end(), "fringe:C[C[H][H][H]]") != f.oov.end());
  }
  SUBCASE("duplicate descriptors are rejected") {
    CHECK_THROWS_AS(DescriptorRegistry(2, {{DescriptorKind::scalar, "n", true}, {DescriptorKind::scalar, "n", true}}),
                    std::invalid_argument);
  }
  CHECK(parse_descriptor_kind("ec_lnk") == DescriptorKind::link_edge_config);
  CHECK_THROWS(parse_descriptor_kind("nope"));
}

TEST_CASE("covariates") {
  Dataset d = small_dataset();
  d.covariate_names = {"temperature"};
  for (auto& r : d.records) r.covariates["temperature"] = 300;
  const auto reg = build_registry(d, 2);
  CHECK(reg.extras() == std::vector<std::string>{"temperature"});
  CHECK(featurize(d.records[0].graph, reg, {{"temperature", 310}}).values.back() == 310);
  CHECK_THROWS_AS(featurize(d.records[0].graph, reg), std::invalid_argument);
}

TEST_CASE("elimination rules") {
  const auto ref = parse_pmg(reference_text());
  CHECK_FALSE(elimination_reason(ref).has_value());
  // No link-edges.
  auto no_links = reference_text();
  std::string kept;
  std::istringstream in(no_links);
  for (std::string line; std::getline(in, line);)
    if (line.rfind("LINK", 0) != 0 && line.rfind("CONNECT", 0) != 0) kept += line + "\n";
  CHECK(elimination_reason(parse_pmg(kept)).has_value());
  // Phosphorus with five chlorines in a ring molecule.
  std::string p5 = "PMG 1\nATOM 1 P\n";
  for (int i = 2; i <= 4; ++i) p5 += "ATOM " + std::to_string(i) + " Cl\nBOND 1 " + std::to_string(i) + " 1\n";
  p5 += "ATOM 5 C\nATOM 6 C\nBOND 1 5 1\nBOND 1 6 1\nBOND 5 6 2\nATOM 7 H\nATOM 8 H\nBOND 5 7 1\nBOND 6 8 1\n";
  p5 += "LINK 1 5\nLINK 5 6\n";
  const auto crowded = parse_pmg(p5);
  const auto reason = elimination_reason(crowded);
  REQUIRE(reason.has_value());
  CHECK(reason->find("non-hydrogen neighbours") != std::string::npos);
  Dataset d;
  CHECK_FALSE(add_record(d, {"p", crowded, 0, {}}));
  CHECK(d.eliminated.size() == 1);
}

TEST_CASE("loading a dataset from disk") {
  TempDir tmp;
  const auto graphs = tmp.path / "graphs";
  fs::create_directories(graphs);
  write_file((graphs / "a.pmg").string(), ring_text({false, false, false, false, false, false}));
  write_file((graphs / "b.pmg").string(), ring_text({true, false, true, false, false, false}));
  write_file((graphs / "bad.pmg").string(), "PMG 1\nATOM 1 C\n");
  write_file((graphs / "split.pmg").string(),
             ring_text({false, false, false, false, false, false}) + "ATOM 90 O\nATOM 91 O\nBOND 90 91 2\n");
  const auto csv = (tmp.path / "data.csv").string();
  write_file(csv, "id,value,temp\na,1.5,10\nb,2.5,20\nbad,3,30\nmissing,4,40\nsplit,5,50\n");
  const auto d = load_dataset(csv, graphs.string());
  CHECK(d.records.size() == 2);
  CHECK(d.covariate_names == std::vector<std::string>{"temp"});
  CHECK(d.records[1].covariates.at("temp") == 20);
  CHECK(d.records[1].value == 2.5);
  REQUIRE(d.eliminated.size() == 3);
  CHECK(d.eliminated[0].id == "bad");
  CHECK(d.eliminated[1].id == "missing");
  CHECK(d.eliminated[2].id == "split");
  CHECK(d.eliminated[2].reason == "graph is disconnected");

  write_file(csv, "name,value\na,1\n");
  CHECK_THROWS_AS(load_dataset(csv, graphs.string()), std::runtime_error);
  write_file(csv, "id,value\na,x\n");
  CHECK_THROWS_AS(load_dataset(csv, graphs.string()), std::runtime_error);
  write_file(csv, "id,value\nmissing,1\n");
  CHECK_THROWS_AS(load_dataset(csv, graphs.string()), std::runtime_error);
  CHECK_THROWS_AS(load_dataset((tmp.path / "none.csv").string(), graphs.string()), std::runtime_error);
}

TEST_CASE("standardizer") {
  Eigen::MatrixXd x(3, 3);
  x << 1, 5, 2,
       3, 5, 4,
       2, 5, 8;
  Eigen::VectorXd a(3);
  a << 10, 20, 15;
  const auto s = Standardizer::fit(x, a);
  CHECK(s.constant(1));
  const auto z = s.forward_matrix(x);
  CHECK(z(0, 0) == 0);
  CHECK(z(1, 0) == 1);
  CHECK(z(2, 0) == 0.5);
  CHECK(z(1, 1) == 0);
  CHECK(z(1, 2) == doctest::Approx(1.0 / 3));
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) CHECK(s.inverse(j, z(i, j)) == doctest::Approx(x(i, j)));
  CHECK(s.forward_value(15) == 0.5);
  CHECK(s.inverse_value(0.5) == 15);
  const auto back = Standardizer::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK_THROWS_AS(Standardizer({1}, {0}, 0, 1), std::invalid_argument);
}
