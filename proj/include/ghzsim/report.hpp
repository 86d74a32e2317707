#pragma once

// End-to-end analysis: classify count tables by measurement setting, estimate
// beta, populations and parities, fit the parity oscillation per ion outcome,
// and assemble fidelity estimates and witness lower bounds with bootstrap
// uncertainties. Also computes the analytic predictions for a conditional
// state set, for validating a synthesis + analysis round trip.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzsim/estimation.hpp"
#include "ghzsim/gme.hpp"
#include "ghzsim/optics.hpp"
#include "ghzsim/protocol.hpp"
#include "ghzsim/timetags.hpp"

namespace ghzsim {

// Analytic expectations for one heralded branch.
struct OutcomePrediction {
  IonOutcome outcome{};
  GhzLabel label{};
  bool defined = false;
  double branch_probability = 0.0;
  std::array<double, 8> populations{};   // logical-basis diagonal
  double parity0 = 0.0;                  // exact parity at theta = 0
  std::vector<double> parity_curve;      // exact parity at each parity setting
  double contrast = 0.0;                 // C = 2 |rho_07|
  double phase = 0.0;                    // alpha = arg rho_07
  // What the C cos(3 theta + alpha) fit converges to on this angle grid (the
  // curve of a relabeled-GHZ branch oscillates at a different frequency, so
  // the grid fit differs from 2 |rho_07| there). Unweighted.
  bool grid_fit_defined = false;
  double contrast_fit = 0.0;
  double phase_fit = 0.0;
  double fidelity = 0.0;                 // exact overlap with the labeled GHZ state
  double fidelity_pc = 0.0;              // (P_000 + P_111)/2 + C/2
  double bound = 0.0;                    // witness lower bound
};

struct Predictions {
  std::vector<MeasurementSetting> settings;
  std::vector<double> parity_thetas;
  std::array<OutcomePrediction, 8> outcomes;
};

Predictions predict(const ConditionalStateSet& set,
                    const std::vector<MeasurementSetting>& settings = default_settings());
nlohmann::json predictions_to_json(const Predictions& p);
Predictions predictions_from_json(const nlohmann::json& j);

// Per-outcome estimates for one beta variant.
struct OutcomeAnalysis {
  IonOutcome outcome{};
  GhzLabel label{};
  std::uint64_t coincidences = 0;

  bool populations_defined = false;
  std::array<Uncertain, 8> populations{};

  bool parity0_defined = false;
  Uncertain parity0{};
  std::vector<Uncertain> parity_points;   // aligned with AnalysisReport::parity_thetas

  bool fit_defined = false;
  bool fit_weighted = false;
  Uncertain contrast{};
  Uncertain phase{};
  FitResult fit{};

  std::optional<Uncertain> fidelity;   // populations + contrast; 000/111 heralds only
  std::optional<Uncertain> bound;
  GmeFlag gme{};
};

struct VariantReport {
  double beta = 1.0;
  std::array<OutcomeAnalysis, 8> outcomes{};
  std::optional<Uncertain> alpha_difference;   // wrapped |alpha_ddd - alpha_uuu|
};

struct AnalysisOptions {
  // When set, used instead of the singles-based estimate; its sigma (or
  // bootstrap.beta_sigma as fallback) is resampled in the bootstrap.
  std::optional<Uncertain> external_beta;
  BootstrapConfig bootstrap{};
};

struct AnalysisReport {
  Uncertain beta{1.0, 0.0};
  bool beta_estimated = false;
  std::vector<double> parity_thetas;
  VariantReport corrected;     // parities weighted with beta
  VariantReport uncorrected;   // beta fixed to 1
  std::vector<std::string> gaps;
  std::uint64_t total_coincidences = 0;
};

AnalysisReport analyze(std::span<const CountTable> tables, const AnalysisOptions& options = {});

nlohmann::json report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);
std::string report_to_text(const AnalysisReport& report);
std::string report_to_csv(const AnalysisReport& report);

// Side-by-side rendering of an analysis against model predictions: per
// outcome the estimated vs predicted contrast, fidelity and bound with the
// pull (delta / sigma) for each.
std::string comparison_to_text(const AnalysisReport& report, const Predictions& predictions);

} // namespace ghzsim
