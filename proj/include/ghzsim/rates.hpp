#pragma once

// Attempt-count model for distributing n photons over heralded links backed
// by a quantum memory: closed-form expectations and a Monte Carlo simulator
// with a finite memory-lifetime cutoff.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ghzsim/rng.hpp"

namespace ghzsim {

struct LinkModel {
  int n_links = 3;
  double success_probability = 0.0;           // per link per attempt round
  std::optional<int> memory_cutoff_rounds{};  // nullopt = unbounded memory

  void validate() const;
};

// E[rounds] with unbounded memory: links retry in parallel and completed ones
// wait, so the total is E[max of n geometric variables]
//   sum_{t >= 0} (1 - (1 - q^t)^n),  q = 1 - p,
// summed until the tail drops below 1e-14.
double expected_attempts_factory(const LinkModel& model);

// No memory at all: every round re-attempts all n links, E = p^{-n}.
double expected_attempts_direct(const LinkModel& model);

// One link at a time with perfect memory: E = n / p.
double expected_attempts_sequential(const LinkModel& model);

struct RateSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  std::uint64_t trials = 0;
};

// Monte Carlo rounds-to-completion under the cutoff: a stored photon's age
// increments at the end of each round and it is discarded once age reaches
// the cutoff. cutoff 1 therefore reproduces the direct (memoryless) model and
// unbounded memory reproduces the factory model.
RateSummary simulate_rates(const LinkModel& model, std::uint64_t trials, std::uint64_t seed);

// CSV sweep over p for fixed n: columns p,factory,direct,sequential.
std::string rate_sweep_csv(int n_links, const std::vector<double>& probabilities);

} // namespace ghzsim
