#include "ghzsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "ghzsim/optics.hpp"

namespace ghzsim {

namespace {

double wrap_pi(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

} // namespace

int pattern_for_logical(int ijk, bool plus45) {
  if (ijk < 0 || ijk > 7) throw std::invalid_argument("logical index out of range");
  return plus45 ? (~ijk & 7) : ijk;
}

LogicalProbabilities logical_probabilities(const CountTable& plus45, const CountTable& minus45) {
  LogicalProbabilities out;
  for (int o = 0; o < 8; ++o) {
    const double total =
        static_cast<double>(plus45.outcome_total(o) + minus45.outcome_total(o));
    if (total <= 0.0) {
      out.defined[o] = false;
      out.p[o].fill(0.0);
      continue;
    }
    out.defined[o] = true;
    for (int ijk = 0; ijk < 8; ++ijk) {
      const std::uint64_t n = plus45.counts[o][pattern_for_logical(ijk, true)] +
                              minus45.counts[o][pattern_for_logical(ijk, false)];
      out.p[o][ijk] = static_cast<double>(n) / total;
    }
  }
  return out;
}

Uncertain estimate_beta(const CountTable& plus45, const CountTable& minus45) {
  const double st = static_cast<double>(plus45.singles_t + minus45.singles_t);
  const double sr = static_cast<double>(plus45.singles_r + minus45.singles_r);
  if (st <= 0.0 || sr <= 0.0)
    throw std::invalid_argument("beta estimate needs singles on both detectors");
  const double beta = sr / st;
  const double sigma = beta * std::sqrt(1.0 / sr + 1.0 / st);
  return {beta, sigma};
}

std::array<ParityEstimate, 8> parities(const CountTable& counts, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("beta must be positive and finite");
  std::array<ParityEstimate, 8> out;
  for (int o = 0; o < 8; ++o) {
    double num = 0.0;
    double den = 0.0;
    for (int pat = 0; pat < 8; ++pat) {
      const double w = std::pow(beta, static_cast<double>(transmitted_count(pat)));
      const double n = static_cast<double>(counts.counts[o][pat]);
      num += parity_sign(pat) * w * n;
      den += w * n;
    }
    if (den > 0.0) out[o] = {num / den, true};
  }
  return out;
}

FitResult fit_parity(const ParityCurve& curve, bool weighted) {
  const auto& pts = curve.points;
  std::set<double> distinct;
  for (const auto& p : pts) {
    if (!std::isfinite(p.theta) || !std::isfinite(p.parity))
      throw std::invalid_argument("parity curve has non-finite entries");
    if (p.sigma < 0.0) throw std::invalid_argument("parity point with negative sigma");
    if (std::abs(p.parity) > 1.0 + 3.0 * p.sigma + 1e-12)
      throw std::invalid_argument("parity point beyond [-1, 1] by more than 3 sigma");
    distinct.insert(p.theta);
  }
  if (distinct.size() < 3)
    throw std::invalid_argument("parity fit needs at least 3 distinct thetas");

  // Model C cos(3t + alpha) = a cos(3t) + b sin(3t), a = C cos(alpha),
  // b = -C sin(alpha): a two-parameter linear least-squares problem.
  Eigen::Matrix2d xtwx = Eigen::Matrix2d::Zero();
  Eigen::Vector2d xtwy = Eigen::Vector2d::Zero();
  for (const auto& p : pts) {
    double w = 1.0;
    if (weighted) {
      if (p.sigma <= 0.0)
        throw std::invalid_argument("weighted parity fit needs positive sigmas");
      w = 1.0 / (p.sigma * p.sigma);
    }
    const Eigen::Vector2d x(std::cos(3.0 * p.theta), std::sin(3.0 * p.theta));
    xtwx += w * x * x.transpose();
    xtwy += w * x * p.parity;
  }
  if (std::abs(xtwx.determinant()) < 1e-14)
    throw std::invalid_argument("parity fit design matrix is singular");
  const Eigen::Matrix2d xtwx_inv = xtwx.inverse();
  const Eigen::Vector2d ab = xtwx_inv * xtwy;
  const double a = ab(0);
  const double b = ab(1);

  FitResult fit;
  fit.C = std::hypot(a, b);
  fit.alpha = (fit.C > 0.0) ? std::atan2(-b, a) : 0.0;

  double ssr = 0.0;
  for (const auto& p : pts) {
    const double r = p.parity - (a * std::cos(3.0 * p.theta) + b * std::sin(3.0 * p.theta));
    ssr += r * r;
  }
  fit.residual_norm = std::sqrt(ssr);

  Eigen::Matrix2d cov_ab = xtwx_inv;
  if (!weighted) {
    const double dof = static_cast<double>(pts.size()) - 2.0;
    cov_ab *= (dof > 0.0) ? ssr / dof : 0.0;
  }
  // (a, b) -> (C, alpha) Jacobian; alpha derivative rows use d atan2.
  if (fit.C > 0.0) {
    Eigen::Matrix2d jac;
    jac << a / fit.C, b / fit.C,
           b / (fit.C * fit.C), -a / (fit.C * fit.C);
    fit.covariance = jac * cov_ab * jac.transpose();
  } else {
    fit.covariance = cov_ab;
  }
  return fit;
}

double parity_of_state(const DensityMatrix& rho3, double theta) {
  if (rho3.num_qubits() != 3) throw std::invalid_argument("parity expects a three-qubit state");
  Mat x_theta(2, 2);
  const cplx phase(std::cos(theta), -std::sin(theta));
  x_theta << 0.0, phase, std::conj(phase), 0.0;
  Mat obs = Mat::Ones(1, 1);
  for (int q = 0; q < 3; ++q) {
    Mat next(obs.rows() * 2, obs.cols() * 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        next.block(i * obs.rows(), j * obs.cols(), obs.rows(), obs.cols()) =
            obs * x_theta(i, j);
    obs = std::move(next);
  }
  return expectation(rho3, obs);
}

double fidelity_from_parity(double p000, double p111, double c) {
  return 0.5 * (p000 + p111) + 0.5 * c;
}

Uncertain fidelity_from_parity(Uncertain p000, Uncertain p111, Uncertain c) {
  const double value = fidelity_from_parity(p000.value, p111.value, c.value);
  const double sigma = 0.5 * std::sqrt(p000.sigma * p000.sigma + p111.sigma * p111.sigma +
                                       c.sigma * c.sigma);
  return {value, sigma};
}

double witness_lower_bound(const std::array<double, 8>& populations, double parity0,
                           const GhzLabel& label) {
  for (double p : populations)
    if (p < -1e-12 || !std::isfinite(p))
      throw std::invalid_argument("populations must be finite and nonnegative");
  const int j = label.j();
  const int k = label.k();
  double bound = 0.5 * (populations[(j << 1) | k] + populations[4 | ((!j) << 1) | (!k)]);
  bound += 0.5 * label.sign * parity0;
  for (int jp = 0; jp < 2; ++jp) {
    for (int kp = 0; kp < 2; ++kp) {
      if (jp == j && kp == k) continue;
      const double a = std::max(populations[(jp << 1) | kp], 0.0);
      const double b = std::max(populations[4 | ((!jp) << 1) | (!kp)], 0.0);
      bound -= std::sqrt(a * b);
    }
  }
  return bound;
}

CountTable resample_counts(const CountTable& table, Rng& rng) {
  CountTable out = table;
  for (auto& row : out.counts)
    for (auto& cell : row) cell = rng.poisson(static_cast<double>(cell));
  out.singles_t = rng.poisson(static_cast<double>(out.singles_t));
  out.singles_r = rng.poisson(static_cast<double>(out.singles_r));
  return out;
}

namespace {

std::vector<double> bootstrap_core(
    std::span<const CountTable> tables,
    const std::function<std::vector<double>(std::span<const CountTable>, Rng&)>& run,
    const BootstrapConfig& config) {
  if (config.resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  Rng rng(config.seed);
  std::vector<CountTable> work(tables.begin(), tables.end());
  const std::vector<double> point = run(work, rng);   // sizing probe; rng state is throwaway here

  const size_t dim = point.size();
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  std::vector<long> n_ok(dim, 0);
  for (int r = 0; r < config.resamples; ++r) {
    Rng draw = Rng::fork(config.seed, static_cast<uint64_t>(r) + 1);
    for (size_t t = 0; t < work.size(); ++t) work[t] = resample_counts(tables[t], draw);
    const std::vector<double> est = run(work, draw);
    if (est.size() != dim)
      throw std::runtime_error("estimator returned inconsistent dimension across resamples");
    for (size_t i = 0; i < dim; ++i) {
      if (std::isnan(est[i])) continue;
      sum[i] += est[i];
      sum_sq[i] += est[i] * est[i];
      ++n_ok[i];
    }
  }
  std::vector<double> sigma(dim, std::numeric_limits<double>::quiet_NaN());
  for (size_t i = 0; i < dim; ++i) {
    if (n_ok[i] < 2) continue;
    const double n = static_cast<double>(n_ok[i]);
    const double var = std::max(0.0, (sum_sq[i] - sum[i] * sum[i] / n) / (n - 1.0));
    sigma[i] = std::sqrt(var);
  }
  return sigma;
}

} // namespace

std::vector<double> propagate_errors(std::span<const CountTable> tables,
                                     const Estimator& estimator,
                                     const BootstrapConfig& config) {
  return bootstrap_core(
      tables,
      [&estimator](std::span<const CountTable> t, Rng&) { return estimator(t); }, config);
}

std::vector<double> propagate_errors(std::span<const CountTable> tables,
                                     const EstimatorWithBeta& estimator, Uncertain beta,
                                     const BootstrapConfig& config) {
  const double beta_sigma = (beta.sigma > 0.0) ? beta.sigma : config.beta_sigma;
  return bootstrap_core(
      tables,
      [&estimator, beta, beta_sigma](std::span<const CountTable> t, Rng& rng) {
        double b = beta.value;
        if (beta_sigma > 0.0) b = std::max(1e-9, beta.value + beta_sigma * rng.normal());
        return estimator(t, b);
      },
      config);
}

double circular_sigma(std::span<const double> samples, double center) {
  double sum_sq = 0.0;
  long n = 0;
  for (double s : samples) {
    if (std::isnan(s)) continue;
    const double d = wrap_pi(s - center);
    sum_sq += d * d;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(sum_sq / static_cast<double>(n - 1));
}

} // namespace ghzsim
