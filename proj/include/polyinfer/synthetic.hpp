#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyinfer/features.hpp"
#include "polyinfer/topospec.hpp"

namespace polyinfer {

/// Corpus of random seed expansions labelled by a hidden linear property.
struct SyntheticOptions {
  std::string property = "Prm";
  int n_lb = 20;
  int count = 60;
  int rho = 2;
  double noise = 0.0;  // standard deviation of added Gaussian noise
  std::uint64_t seed = 1;
  long max_attempts = 200000;
};

/// The hidden property: a fixed sparse combination of profile counts.
double hidden_property(const GraphProfile& p);

/// Distinct graphs (by canonical certificate) sampled from
/// build_instance_ib(property, n_lb) with ids "s001", "s002", ... Throws
/// std::runtime_error when `count` distinct graphs are not found within
/// `max_attempts` samples.
std::vector<Record> synthesize_corpus(const SyntheticOptions& options);

/// Writes `<dir>/data.csv` and `<dir>/graphs/<id>.pmg`.
void write_corpus(const std::vector<Record>& records, const std::string& dir);

}  // namespace polyinfer
