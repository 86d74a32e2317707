#pragma once

// Estimators turning count tables into physics numbers: logical population
// probabilities, the detector-imbalance ratio beta, beta-corrected parities,
// parity-curve fits, fidelities and witness lower bounds, plus Poisson
// parametric-bootstrap uncertainties.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ghzsim/protocol.hpp"
#include "ghzsim/rng.hpp"
#include "ghzsim/timetags.hpp"

namespace ghzsim {

struct Uncertain {
  double value = 0.0;
  double sigma = 0.0;
};

// Photon patterns in the two logical settings map to logical bits as D -> t at
// (0,+45) and D -> r at (0,-45); with pattern bit 1 = r and logical bit 1 = D
// that is pattern = ~ijk at +45 and pattern = ijk at -45.
int pattern_for_logical(int ijk, bool plus45);

// Population probabilities P^{lmn}_{ijk} from the two logical settings,
// normalized per ion outcome. `defined` is false for an outcome with no
// coincidences in either table.
struct LogicalProbabilities {
  std::array<std::array<double, 8>, 8> p{};   // [outcome][ijk]
  std::array<bool, 8> defined{};
};
LogicalProbabilities logical_probabilities(const CountTable& plus45, const CountTable& minus45);

// beta = (S^r_+ + S^r_-) / (S^t_+ + S^t_-) with Poisson-propagated sigma.
Uncertain estimate_beta(const CountTable& plus45, const CountTable& minus45);

// Beta-corrected parity per ion outcome: pattern weight beta^{#t}, sign +1
// for an even number of reflected ports. `defined` is false when the outcome
// has no counts.
struct ParityEstimate {
  double value = 0.0;
  bool defined = false;
};
std::array<ParityEstimate, 8> parities(const CountTable& counts, double beta);

struct ParityPoint {
  double theta = 0.0;    // radians
  double parity = 0.0;
  double sigma = 0.0;
};
struct ParityCurve {
  std::vector<ParityPoint> points;
};

// Weighted least squares of parity = C cos(3 theta + alpha), reparameterized
// as a cos(3t) + b sin(3t) which is linear and solved in closed form; C >= 0
// with alpha wrapped into (-pi, pi]. covariance is for (C, alpha). The
// unweighted variant scales the covariance by the reduced chi-square.
struct FitResult {
  double C = 0.0;
  double alpha = 0.0;
  double residual_norm = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
};
FitResult fit_parity(const ParityCurve& curve, bool weighted = true);

// Exact Tr(X_theta X_theta X_theta rho) for a three-qubit state; used to
// predict parity curves (including any two-frequency leakage a fit ignores).
double parity_of_state(const DensityMatrix& rho3, double theta);

// F = (P_000 + P_111)/2 + C/2 with quadrature error propagation.
double fidelity_from_parity(double p000, double p111, double c);
Uncertain fidelity_from_parity(Uncertain p000, Uncertain p111, Uncertain c);

// Witness lower bound on the fidelity to the labeled GHZ state:
// (P_{0jk} + P_{1!j!k})/2 + sign * parity0/2 - sum over the other (j',k') of
// sqrt(P_{0j'k'} P_{1!j'!k'}).
double witness_lower_bound(const std::array<double, 8>& populations, double parity0,
                           const GhzLabel& label);

struct BootstrapConfig {
  int resamples = 1000;
  std::uint64_t seed = 20240913;
  double beta_sigma = 0.0;   // used only by the beta-aware overload
};

// Poisson parametric bootstrap. Every count cell and the singles totals of
// every table are resampled from Poisson(observed), the estimator is re-run,
// and the per-component sample standard deviation is returned. Components
// where a resample yields NaN are averaged over the remaining resamples.
// Deterministic in config.seed.
using Estimator = std::function<std::vector<double>(std::span<const CountTable>)>;
std::vector<double> propagate_errors(std::span<const CountTable> tables,
                                     const Estimator& estimator,
                                     const BootstrapConfig& config);

// Variant for estimators that consume an externally calibrated beta: each
// resample draws beta from N(beta.value, beta.sigma) when beta.sigma > 0 (and
// from N(beta.value, config.beta_sigma) when beta.sigma == 0 but the config
// sets one), folding the calibration uncertainty into the bootstrap spread.
using EstimatorWithBeta =
    std::function<std::vector<double>(std::span<const CountTable>, double beta)>;
std::vector<double> propagate_errors(std::span<const CountTable> tables,
                                     const EstimatorWithBeta& estimator, Uncertain beta,
                                     const BootstrapConfig& config);

// Resample one table in place (cells + singles), Poisson per cell.
CountTable resample_counts(const CountTable& table, Rng& rng);

// Sample standard deviation of the angular residuals around `center`; used
// for phase estimates, which live on a circle.
double circular_sigma(std::span<const double> samples, double center);

} // namespace ghzsim
