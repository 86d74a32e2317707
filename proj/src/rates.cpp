#include "ghzsim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ghzsim {

void LinkModel::validate() const {
  if (n_links < 1) throw std::invalid_argument("need at least one link");
  if (!(success_probability > 0.0) || success_probability > 1.0)
    throw std::invalid_argument("success probability must be in (0, 1]");
  if (memory_cutoff_rounds && *memory_cutoff_rounds < 1)
    throw std::invalid_argument("memory cutoff must be at least one round");
}

double expected_attempts_factory(const LinkModel& model) {
  model.validate();
  if (model.memory_cutoff_rounds)
    throw std::invalid_argument("closed form holds for unbounded memory only");
  const double q = 1.0 - model.success_probability;
  if (q == 0.0) return 1.0;
  double total = 0.0;
  double q_t = 1.0;   // q^t
  for (std::uint64_t t = 0;; ++t) {
    const double term = 1.0 - std::pow(1.0 - q_t, model.n_links);
    total += term;
    q_t *= q;
    // term <= n q^t, so the remaining tail is below n q^{t+1}/(1-q)
    if (model.n_links * q_t / (1.0 - q) < 1e-14) break;
    if (t > 100000000) throw std::runtime_error("series failed to converge");
  }
  return total;
}

double expected_attempts_direct(const LinkModel& model) {
  model.validate();
  return std::pow(model.success_probability, -model.n_links);
}

double expected_attempts_sequential(const LinkModel& model) {
  model.validate();
  return model.n_links / model.success_probability;
}

RateSummary simulate_rates(const LinkModel& model, std::uint64_t trials, std::uint64_t seed) {
  model.validate();
  if (trials < 1) throw std::invalid_argument("need at least one trial");

  std::vector<double> rounds;
  rounds.reserve(trials);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::fork(seed, trial);
    std::vector<int> age(model.n_links, -1);   // -1 = not stored
    std::uint64_t t = 0;
    while (true) {
      ++t;
      for (int i = 0; i < model.n_links; ++i)
        if (age[i] < 0 && rng.uniform() < model.success_probability) age[i] = 0;
      const bool done =
          std::all_of(age.begin(), age.end(), [](int a) { return a >= 0; });
      if (done) break;
      for (int i = 0; i < model.n_links; ++i) {
        if (age[i] < 0) continue;
        ++age[i];
        if (model.memory_cutoff_rounds && age[i] >= *model.memory_cutoff_rounds) age[i] = -1;
      }
      if (t > (std::uint64_t{1} << 40)) throw std::runtime_error("trial failed to terminate");
    }
    const double r = static_cast<double>(t);
    rounds.push_back(r);
    sum += r;
    sum_sq += r * r;
  }

  RateSummary out;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  out.mean = sum / n;
  out.stddev = (trials > 1) ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)))
                            : 0.0;
  std::sort(rounds.begin(), rounds.end());
  auto quantile = [&rounds](double q) {
    const double pos = q * (static_cast<double>(rounds.size()) - 1.0);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, rounds.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return rounds[lo] * (1.0 - frac) + rounds[hi] * frac;
  };
  out.median = quantile(0.5);
  out.q05 = quantile(0.05);
  out.q95 = quantile(0.95);
  return out;
}

std::string rate_sweep_csv(int n_links, const std::vector<double>& probabilities) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "n,p,factory,direct,sequential\n";
  for (double p : probabilities) {
    LinkModel model{n_links, p, std::nullopt};
    os << n_links << ',' << p << ',' << expected_attempts_factory(model) << ','
       << expected_attempts_direct(model) << ',' << expected_attempts_sequential(model) << '\n';
  }
  return os.str();
}

} // namespace ghzsim
