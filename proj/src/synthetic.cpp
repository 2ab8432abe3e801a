#include "polyinfer/synthetic.hpp"

#include <filesystem>
#include <random>
#include <set>
#include <stdexcept>

#include "polyinfer/generate.hpp"
#include "polyinfer/util.hpp"

namespace polyinfer {

double hidden_property(const GraphProfile& p) {
  auto count = [&](const std::string& el) {
    auto it = p.elements.find(el);
    return it == p.elements.end() ? 0 : it->second;
  };
  return 50.0 + 2.0 * p.n + 6.0 * count("O") - 4.0 * count("N") + 9.0 * count("Cl") - 1.5 * p.n_int;
}

std::vector<Record> synthesize_corpus(const SyntheticOptions& options) {
  if (options.count < 1) throw std::invalid_argument("corpus size must be positive");
  const auto spec = build_instance_ib(options.property, options.n_lb);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise);
  std::set<std::string> seen;
  std::vector<Record> out;
  for (long attempt = 0; attempt < options.max_attempts && static_cast<int>(out.size()) < options.count; ++attempt) {
    auto g = sample_expansion(spec, options.rho, rng);
    if (!g || !seen.insert(canonical_certificate(*g)).second) continue;
    char id[16];
    std::snprintf(id, sizeof id, "s%03zu", out.size() + 1);
    double y = hidden_property(profile(*g, options.rho));
    if (options.noise > 0) y += noise(rng);
    out.push_back({id, std::move(*g), y, {}});
  }
  if (static_cast<int>(out.size()) < options.count)
    throw std::runtime_error("found only " + std::to_string(out.size()) + " distinct graphs");
  return out;
}

void write_corpus(const std::vector<Record>& records, const std::string& dir) {
  const auto graphs = std::filesystem::path(dir) / "graphs";
  std::filesystem::create_directories(graphs);
  std::string csv = "id,value\n";
  for (const auto& r : records) {
    write_file((graphs / (r.id + ".pmg")).string(), serialize_pmg(r.graph));
    csv += r.id + "," + format_double(r.value) + "\n";
  }
  write_file((std::filesystem::path(dir) / "data.csv").string(), csv);
}

}  // namespace polyinfer
