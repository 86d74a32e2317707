// Acceptance suite: numbered end-to-end checks, one PASS/FAIL line each.
// Run all with no arguments or select criteria by number: `acceptance 5 7`.
// Exits nonzero when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ghzsim/estimation.hpp"
#include "ghzsim/gme.hpp"
#include "ghzsim/optics.hpp"
#include "ghzsim/protocol.hpp"
#include "ghzsim/quantum.hpp"
#include "ghzsim/rates.hpp"
#include "ghzsim/report.hpp"
#include "ghzsim/rng.hpp"
#include "ghzsim/timetags.hpp"

using namespace ghzsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

double pull(double estimate, double oracle, double sigma) {
  const double diff = std::abs(estimate - oracle);
  if (diff == 0.0) return 0.0;
  return diff / sigma;   // +inf when sigma == 0 and the values differ
}

// ---- criterion 1: the ideal pipeline reproduces the eight-state table

Outcome ideal_table() {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet set = ghz_projection_table(bell, bell, bell);
  double min_fidelity = 1.0;
  double max_prob_err = 0.0;
  for (int o = 0; o < 8; ++o) {
    const ConditionalBranch& b = set.branches[o];
    if (!b.defined || !b.state)
      return {false, "branch " + IonOutcome::from_index(o).str() + " is undefined"};
    max_prob_err = std::max(max_prob_err, std::abs(b.probability - 0.125));
    const GhzLabel label = label_for_outcome(IonOutcome::from_index(o));
    min_fidelity = std::min(min_fidelity, fidelity(*b.state, ghz_ket(label)));
  }
  const bool pass = min_fidelity >= 1.0 - 1e-10 && max_prob_err <= 1e-10;
  return {pass, fmt("min branch fidelity %.3e below 1, max |probability - 1/8| %.3e",
                    1.0 - min_fidelity, max_prob_err)};
}

// ---- criterion 2: published-number plumbing is bit-exact

Outcome fidelity_plumbing() {
  const double f_ddd = fidelity_from_parity(0.38, 0.42, 0.76);
  const double f_uuu = fidelity_from_parity(0.32, 0.50, 0.70);
  const bool pass = (f_ddd == 0.78) && (f_uuu == 0.76);
  return {pass, fmt("(0.38, 0.42, 0.76) -> %.17g, (0.32, 0.50, 0.70) -> %.17g", f_ddd, f_uuu)};
}

// ---- criterion 3: the witness never exceeds the exact fidelity

Outcome witness_soundness() {
  Rng rng(0x5eed0005ULL);
  double worst_margin = std::numeric_limits<double>::infinity();
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const DensityMatrix rho = random_density_matrix(3, rng);
    std::array<double, 8> populations{};
    for (int i = 0; i < 8; ++i) populations[i] = rho.entries()(i, i).real();
    const double parity0 = parity_of_state(rho, 0.0);
    for (int l = 0; l < 8; ++l) {
      const GhzLabel label{(l >> 1) + 1, (l & 1) ? -1 : +1};
      const double bound = witness_lower_bound(populations, parity0, label);
      const double exact = fidelity(rho, ghz_ket(label));
      worst_margin = std::min(worst_margin, exact - bound);
    }
  }
  const bool pass = worst_margin >= -1e-10;
  return {pass, fmt("%d random states x 8 labels, worst fidelity - bound = %.3e", trials,
                    worst_margin)};
}

// ---- criterion 4: every GHZ target sits at the biseparable ceiling 1/2

Outcome biseparable_ceiling() {
  double worst = 0.0;
  for (int l = 0; l < 8; ++l) {
    const GhzLabel label{(l >> 1) + 1, (l & 1) ? -1 : +1};
    worst = std::max(worst, std::abs(max_biseparable_fidelity(ghz_ket(label)) - 0.5));
  }
  const bool pass = worst <= 1e-6;
  return {pass, fmt("max |biseparable fidelity - 1/2| over 8 targets = %.3e", worst)};
}

// ---- shared synthesis helpers for criteria 5-7

CountTable synthesize_table(const ConditionalStateSet& states, const MeasurementSetting& setting,
                            const DetectorModel& det, std::uint64_t attempts,
                            std::uint64_t seed) {
  SynthesisSpec spec;
  spec.setting = setting;
  spec.det = det;
  spec.attempts = attempts;
  spec.seed = seed;
  std::ostringstream stream;
  synthesize_stream(stream, states, spec);
  std::istringstream in(stream.str());
  return extract_coincidences(parse_stream(in));
}

double model_triple_probability(const ConditionalStateSet& states,
                                const MeasurementSetting& setting, const DetectorModel& det) {
  double total = 0.0;
  for (const ConditionalBranch& b : states.branches)
    if (b.defined && b.state)
      total += b.probability * port_distribution(*b.state, setting, det).triple_probability;
  return total;
}

std::uint64_t attempts_for_coincidences(const ConditionalStateSet& states,
                                        const std::vector<MeasurementSetting>& settings,
                                        const DetectorModel& det, double target) {
  double p_min = 1.0;
  for (const MeasurementSetting& s : settings)
    p_min = std::min(p_min, model_triple_probability(states, s, det));
  return static_cast<std::uint64_t>(std::llround(target / p_min));
}

struct Pipeline {
  ConditionalStateSet states;
  std::uint64_t attempts = 0;
  AnalysisReport report;
};

// Werner source at the calibrated mixing parameter, detector imbalance 1.25,
// all eight default settings sized for ~1e4 coincidences each.
Pipeline run_werner_pipeline(std::uint64_t master_seed) {
  Pipeline pipe;
  const double p = (4.0 * 0.94 - 1.0) / 3.0;
  const DensityMatrix pair = make_werner(p);
  pipe.states = ghz_projection_table(pair, pair, pair);
  const DetectorModel det = DetectorModel::from_beta(1.25);
  const std::vector<MeasurementSetting> settings = default_settings();
  pipe.attempts = attempts_for_coincidences(pipe.states, settings, det, 1e4);

  std::vector<CountTable> tables;
  for (std::size_t i = 0; i < settings.size(); ++i)
    tables.push_back(synthesize_table(pipe.states, settings[i], det, pipe.attempts,
                                      splitmix64(splitmix64(master_seed) ^ (i + 1))));
  pipe.report = analyze(tables);
  return pipe;
}

constexpr std::uint64_t kPipelineSeed = 2026;

// ---- criterion 5: every estimate within 3 sigma of its analytic oracle

Outcome statistical_closure() {
  const Pipeline pipe = run_werner_pipeline(kPipelineSeed);
  const AnalysisReport& report = pipe.report;
  const DetectorModel det = DetectorModel::from_beta(1.25);

  double worst = 0.0;
  std::string worst_what = "none";
  const auto track = [&worst, &worst_what](double candidate, const std::string& what) {
    if (candidate > worst) {
      worst = candidate;
      worst_what = what;
    }
  };

  int compared = 0;
  for (int o = 0; o < 8; ++o) {
    const ConditionalBranch& branch = pipe.states.branches[o];
    const OutcomeAnalysis& oa = report.corrected.outcomes[o];
    const std::string name = oa.outcome.str();
    if (!branch.defined || !branch.state) return {false, "model branch " + name + " undefined"};
    if (!oa.populations_defined || !oa.parity0_defined || !oa.fit_defined || !oa.bound)
      return {false, "analysis of " + name + " is incomplete"};
    const DensityMatrix& rho = *branch.state;

    // population oracle: the flipped-basis sum weighs each logical cell by
    // eta_t^c eta_r^(3-c) + eta_t^(3-c) eta_r^c (c = its D count), so the
    // expected estimate is the reweighted, renormalized diagonal
    std::array<double, 8> pop_oracle{};
    double norm = 0.0;
    for (int ijk = 0; ijk < 8; ++ijk) {
      const int c = __builtin_popcount(static_cast<unsigned>(ijk));
      const double weight = std::pow(det.eta_t, c) * std::pow(det.eta_r, 3 - c) +
                            std::pow(det.eta_t, 3 - c) * std::pow(det.eta_r, c);
      pop_oracle[ijk] = rho.entries()(ijk, ijk).real() * weight;
      norm += pop_oracle[ijk];
    }
    for (double& q : pop_oracle) q /= norm;
    for (int ijk = 0; ijk < 8; ++ijk) {
      track(pull(oa.populations[ijk].value, pop_oracle[ijk], oa.populations[ijk].sigma),
            fmt("%s population %d", name.c_str(), ijk));
      ++compared;
    }

    // parity oracle: the beta-corrected estimator is exactly unbiased, so the
    // expectation is the state's own parity at each angle
    ParityCurve oracle_curve;
    for (std::size_t s = 0; s < report.parity_thetas.size(); ++s) {
      const double theta = report.parity_thetas[s];
      const double exact = parity_of_state(rho, theta);
      track(pull(oa.parity_points[s].value, exact, oa.parity_points[s].sigma),
            fmt("%s parity at theta %.3f", name.c_str(), theta));
      ++compared;
      oracle_curve.points.push_back({theta, exact, oa.parity_points[s].sigma});
    }

    // contrast oracle: fit the exact curve with the same weights the data fit
    // used (a relabeled branch oscillates at a different frequency, so the
    // grid fit is the estimator's own converged value, not 2|rho_07|)
    const FitResult oracle_fit = fit_parity(oracle_curve, oa.fit_weighted);
    track(pull(oa.contrast.value, oracle_fit.C, oa.contrast.sigma),
          fmt("%s fitted contrast", name.c_str()));
    ++compared;

    // witness oracle: the bound evaluated at the expected populations and the
    // exact theta = 0 parity
    const double oracle_bound = witness_lower_bound(pop_oracle, parity_of_state(rho, 0.0),
                                                    oa.label);
    track(pull(oa.bound->value, oracle_bound, oa.bound->sigma),
          fmt("%s witness bound", name.c_str()));
    ++compared;
  }

  const bool pass = worst <= 3.0;
  return {pass, fmt("%d comparisons at ~%llu coincidences/setting, worst %.2f sigma (%s)",
                    compared, static_cast<unsigned long long>(report.total_coincidences / 8),
                    worst, worst_what.c_str())};
}

// ---- criterion 6: detector imbalance cancels out of the logical populations

Outcome bias_cancellation() {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet states = ghz_projection_table(bell, bell, bell);
  const DetectorModel det = DetectorModel::from_beta(1.25);
  const std::vector<MeasurementSetting> all = default_settings();
  std::vector<MeasurementSetting> logical;
  for (const MeasurementSetting& s : all)
    if (s.is_logical_plus() || s.is_logical_minus()) logical.push_back(s);
  const std::uint64_t attempts = attempts_for_coincidences(states, logical, det, 1e4);

  std::vector<CountTable> tables;
  for (std::size_t i = 0; i < logical.size(); ++i)
    tables.push_back(synthesize_table(states, logical[i], det, attempts,
                                      splitmix64(splitmix64(0xb1a5ULL) ^ (i + 1))));
  const bool first_plus = tables[0].setting.is_logical_plus();
  const CountTable& plus = first_plus ? tables[0] : tables[1];
  const CountTable& minus = first_plus ? tables[1] : tables[0];

  // herald uuu steers the photons to ghz1+: populations must sit at 1/2 on
  // AAA and DDD despite the injected imbalance
  const int herald = IonOutcome::parse("uuu").index();
  const LogicalProbabilities lp = logical_probabilities(plus, minus);
  if (!lp.defined[herald]) return {false, "no coincidences on the uuu herald"};
  const double p_aaa = lp.p[herald][0];
  const double p_ddd = lp.p[herald][7];

  const auto estimator = [herald](std::span<const CountTable> ts) {
    const LogicalProbabilities l = logical_probabilities(ts[0], ts[1]);
    return std::vector<double>{l.p[herald][0], l.p[herald][7]};
  };
  const std::vector<CountTable> ordered{plus, minus};
  const std::vector<double> sigma = propagate_errors(ordered, estimator, BootstrapConfig{});

  const double pull_aaa = pull(p_aaa, 0.5, sigma[0]);
  const double pull_ddd = pull(p_ddd, 0.5, sigma[1]);
  const bool pass = pull_aaa <= 3.0 && pull_ddd <= 3.0;
  return {pass, fmt("P_AAA = %.4f (%.2f sigma from 1/2), P_DDD = %.4f (%.2f sigma)", p_aaa,
                    pull_aaa, p_ddd, pull_ddd)};
}

// ---- criterion 7: the ddd and uuu parity curves are fully out of phase

Outcome phase_opposition() {
  const Pipeline pipe = run_werner_pipeline(kPipelineSeed);
  const auto& ad = pipe.report.corrected.alpha_difference;
  if (!ad) return {false, "no fitted phase difference"};
  const double target = std::acos(-1.0);
  const double sigmas = pull(ad->value, target, ad->sigma);
  const bool pass = sigmas <= 3.0;
  return {pass, fmt("|alpha_ddd - alpha_uuu| = %.4f rad vs pi, %.2f sigma", ad->value, sigmas)};
}

// ---- criterion 8: attempt-count scaling, series vs Monte Carlo vs direct

Outcome rate_scaling() {
  const std::uint64_t trials = 20000;
  double worst = 0.0;
  std::string worst_what = "none";
  bool direct_exact = true;
  bool ordered = true;
  std::uint64_t cell = 0;
  for (int n : {1, 2, 3, 8}) {
    for (double p : {0.5, 0.1, 0.01}) {
      const LinkModel model{n, p, std::nullopt};
      const double series = expected_attempts_factory(model);
      const double direct = expected_attempts_direct(model);
      const RateSummary mc =
          simulate_rates(model, trials, splitmix64(splitmix64(0x7a7e5ULL) ^ (cell + 1)));
      const double sigma_mean = mc.stddev / std::sqrt(static_cast<double>(mc.trials));
      const double sigmas = pull(mc.mean, series, sigma_mean);
      if (sigmas > worst) {
        worst = sigmas;
        worst_what = fmt("n=%d p=%g", n, p);
      }
      if (direct != std::pow(p, -n)) direct_exact = false;
      if (series > direct * (1.0 + 1e-12)) ordered = false;
      ++cell;
    }
  }

  // the measured per-link success probability implies ~1% direct triple rate
  const double direct_measured = expected_attempts_direct({3, 0.213, std::nullopt});
  const double triple_rate = 1.0 / direct_measured;
  const bool rate_ok = triple_rate > 0.0092 && triple_rate < 0.0102;

  const bool pass = worst <= 3.0 && direct_exact && ordered && rate_ok;
  return {pass, fmt("worst MC pull %.2f sigma (%s); direct exact: %s; factory <= direct: %s; "
                    "direct(3, 0.213) = %.1f attempts (rate %.4f)",
                    worst, worst_what.c_str(), direct_exact ? "yes" : "no",
                    ordered ? "yes" : "no", direct_measured, triple_rate)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double time_limit_s;   // 0 = unlimited
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "ideal eight-state table", ideal_table, 1.0},
      {2, "fidelity-from-parity plumbing", fidelity_plumbing, 0.0},
      {3, "witness soundness", witness_soundness, 30.0},
      {4, "biseparable ceiling", biseparable_ceiling, 30.0},
      {5, "end-to-end statistical closure", statistical_closure, 120.0},
      {6, "imbalance bias cancellation", bias_cancellation, 0.0},
      {7, "parity phase opposition", phase_opposition, 0.0},
      {8, "attempt-count rate scaling", rate_scaling, 0.0},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    try {
      selected.push_back(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::fprintf(stderr, "usage: acceptance [criterion-number...]\n");
      return 2;
    }
  }
  if (selected.empty())
    for (const Criterion& c : criteria) selected.push_back(c.id);

  int failures = 0;
  for (int id : selected) {
    const auto it = std::find_if(criteria.begin(), criteria.end(),
                                 [id](const Criterion& c) { return c.id == id; });
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = it->run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = outcome.pass;
    std::string detail = outcome.detail;
    if (it->time_limit_s > 0.0 && elapsed >= it->time_limit_s) {
      pass = false;
      detail += fmt("; exceeded %.0f s budget", it->time_limit_s);
    }
    std::printf("%s  criterion %d  %-34s %s  [%.2f s]\n", pass ? "PASS" : "FAIL", it->id,
                it->name, detail.c_str(), elapsed);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
