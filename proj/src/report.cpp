#include "ghzsim/report.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ghzsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_pi(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct TableSet {
  std::optional<size_t> plus45;
  std::optional<size_t> minus45;
  std::vector<size_t> parity;      // table indices sorted by theta
  std::vector<double> thetas;
  std::optional<size_t> zero_index;   // position of theta = 0 in `parity`
};

TableSet classify(std::span<const CountTable> tables, std::vector<std::string>* gaps) {
  TableSet set;
  std::vector<std::pair<double, size_t>> par;
  for (size_t i = 0; i < tables.size(); ++i) {
    const MeasurementSetting& s = tables[i].setting;
    if (s.is_logical_plus()) {
      if (set.plus45) throw std::invalid_argument("duplicate (0, +45) count table");
      set.plus45 = i;
    } else if (s.is_logical_minus()) {
      if (set.minus45) throw std::invalid_argument("duplicate (0, -45) count table");
      set.minus45 = i;
    } else if (s.is_parity()) {
      par.emplace_back(s.theta(), i);
    } else if (gaps) {
      std::ostringstream os;
      os << "table with setting (phi=" << s.phi_deg << ", varphi=" << s.varphi_deg
         << ") matches no supported analysis; ignored";
      gaps->push_back(os.str());
    }
  }
  std::sort(par.begin(), par.end());
  for (size_t i = 0; i + 1 < par.size(); ++i)
    if (std::abs(par[i].first - par[i + 1].first) < 1e-12)
      throw std::invalid_argument("two count tables share a parity angle");
  for (const auto& [theta, idx] : par) {
    if (std::abs(theta) < 1e-12) set.zero_index = set.parity.size();
    set.thetas.push_back(theta);
    set.parity.push_back(idx);
  }
  if (gaps) {
    if (!set.plus45) gaps->push_back("missing (0, +45) table: populations unavailable");
    if (!set.minus45) gaps->push_back("missing (0, -45) table: populations unavailable");
    if (!set.zero_index) gaps->push_back("missing theta = 0 table: witness bound unavailable");
    if (set.parity.size() < 3)
      gaps->push_back("fewer than 3 parity angles: contrast fit unavailable");
  }
  return set;
}

struct RawEstimates {
  std::array<std::array<double, 8>, 8> pops{};   // [outcome][ijk], NaN when undefined
  std::vector<std::array<double, 8>> parity;     // [angle][outcome]
};

RawEstimates raw_estimates(std::span<const CountTable> tables, const TableSet& set, double beta) {
  RawEstimates out;
  for (auto& row : out.pops) row.fill(kNaN);
  if (set.plus45 && set.minus45) {
    const LogicalProbabilities lp =
        logical_probabilities(tables[*set.plus45], tables[*set.minus45]);
    for (int o = 0; o < 8; ++o)
      if (lp.defined[o]) out.pops[o] = lp.p[o];
  }
  out.parity.resize(set.parity.size());
  for (size_t s = 0; s < set.parity.size(); ++s) {
    out.parity[s].fill(kNaN);
    if (std::isfinite(beta) && beta > 0.0) {
      const auto pe = parities(tables[set.parity[s]], beta);
      for (int o = 0; o < 8; ++o)
        if (pe[o].defined) out.parity[s][o] = pe[o].value;
    }
  }
  return out;
}

// Fixed-weight version of the contrast fit for bootstrap resamples.
struct ResampleFit {
  double C = kNaN;
  double alpha = kNaN;
};

ResampleFit refit(const std::vector<double>& thetas, const std::vector<size_t>& used,
                  const std::vector<std::array<double, 8>>& parity, int outcome,
                  const std::vector<double>& weights) {
  Eigen::Matrix2d xtwx = Eigen::Matrix2d::Zero();
  Eigen::Vector2d xtwy = Eigen::Vector2d::Zero();
  for (size_t u = 0; u < used.size(); ++u) {
    const size_t s = used[u];
    const double y = parity[s][outcome];
    if (std::isnan(y)) return {};
    const Eigen::Vector2d x(std::cos(3.0 * thetas[s]), std::sin(3.0 * thetas[s]));
    xtwx += weights[u] * x * x.transpose();
    xtwy += weights[u] * x * y;
  }
  if (std::abs(xtwx.determinant()) < 1e-14) return {};
  const Eigen::Vector2d ab = xtwx.inverse() * xtwy;
  ResampleFit f;
  f.C = std::hypot(ab(0), ab(1));
  f.alpha = (f.C > 0.0) ? std::atan2(-ab(1), ab(0)) : 0.0;
  return f;
}

double sample_sigma(const std::vector<double>& samples) {
  double sum = 0.0, sum_sq = 0.0;
  long n = 0;
  for (double v : samples) {
    if (std::isnan(v)) continue;
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  if (n < 2) return kNaN;
  const double nn = static_cast<double>(n);
  return std::sqrt(std::max(0.0, (sum_sq - sum * sum / nn) / (nn - 1.0)));
}

VariantReport assemble_variant(double beta, const RawEstimates& point,
                               const std::vector<RawEstimates>& res, const TableSet& set,
                               const std::array<std::uint64_t, 8>& coincidences) {
  VariantReport v;
  v.beta = beta;
  const size_t n_par = set.parity.size();
  const size_t n_res = res.size();

  std::vector<double> scratch(n_res);
  double alpha_ddd = kNaN, alpha_uuu = kNaN;
  std::vector<double> alpha_ddd_samples, alpha_uuu_samples;

  for (int o = 0; o < 8; ++o) {
    OutcomeAnalysis& oa = v.outcomes[o];
    oa.outcome = IonOutcome::from_index(o);
    oa.label = label_for_outcome(oa.outcome);
    oa.coincidences = coincidences[o];

    if (!std::isnan(point.pops[o][0])) {
      oa.populations_defined = true;
      for (int i = 0; i < 8; ++i) {
        for (size_t r = 0; r < n_res; ++r) scratch[r] = res[r].pops[o][i];
        oa.populations[i] = {point.pops[o][i], sample_sigma(scratch)};
      }
    }

    oa.parity_points.resize(n_par);
    std::vector<double> par_sigma(n_par, kNaN);
    for (size_t s = 0; s < n_par; ++s) {
      for (size_t r = 0; r < n_res; ++r) scratch[r] = res[r].parity[s][o];
      par_sigma[s] = sample_sigma(scratch);
      oa.parity_points[s] = {point.parity[s][o], par_sigma[s]};
    }
    if (set.zero_index && !std::isnan(point.parity[*set.zero_index][o])) {
      oa.parity0_defined = true;
      oa.parity0 = oa.parity_points[*set.zero_index];
    }

    std::vector<double> c_samples(n_res, kNaN);
    std::vector<size_t> used;
    for (size_t s = 0; s < n_par; ++s)
      if (!std::isnan(point.parity[s][o])) used.push_back(s);
    if (used.size() >= 3) {
      bool weighted = true;
      for (size_t s : used)
        if (!(par_sigma[s] > 0.0) || !std::isfinite(par_sigma[s])) weighted = false;
      ParityCurve curve;
      for (size_t s : used)
        curve.points.push_back({set.thetas[s], point.parity[s][o], weighted ? par_sigma[s] : 0.0});
      oa.fit = fit_parity(curve, weighted);
      oa.fit_defined = true;
      oa.fit_weighted = weighted;

      std::vector<double> weights(used.size(), 1.0);
      if (weighted)
        for (size_t u = 0; u < used.size(); ++u)
          weights[u] = 1.0 / (par_sigma[used[u]] * par_sigma[used[u]]);
      std::vector<double> a_samples(n_res, kNaN);
      for (size_t r = 0; r < n_res; ++r) {
        const ResampleFit f = refit(set.thetas, used, res[r].parity, o, weights);
        c_samples[r] = f.C;
        a_samples[r] = f.alpha;
      }
      oa.contrast = {oa.fit.C, sample_sigma(c_samples)};
      oa.phase = {oa.fit.alpha, circular_sigma(a_samples, oa.fit.alpha)};
      if (o == 0) {
        alpha_ddd = oa.fit.alpha;
        alpha_ddd_samples = a_samples;
      } else if (o == 7) {
        alpha_uuu = oa.fit.alpha;
        alpha_uuu_samples = a_samples;
      }
    }

    if ((o == 0 || o == 7) && oa.populations_defined && oa.fit_defined) {
      std::vector<double> f_samples(n_res, kNaN);
      for (size_t r = 0; r < n_res; ++r) {
        const double p0 = res[r].pops[o][0];
        const double p7 = res[r].pops[o][7];
        if (!std::isnan(p0) && !std::isnan(p7) && !std::isnan(c_samples[r]))
          f_samples[r] = fidelity_from_parity(p0, p7, c_samples[r]);
      }
      oa.fidelity = Uncertain{
          fidelity_from_parity(point.pops[o][0], point.pops[o][7], oa.fit.C),
          sample_sigma(f_samples)};
    }

    if (oa.populations_defined && oa.parity0_defined) {
      std::vector<double> b_samples(n_res, kNaN);
      for (size_t r = 0; r < n_res; ++r) {
        const double p0 = res[r].pops[o][0];
        const double par0 = res[r].parity[*set.zero_index][o];
        if (!std::isnan(p0) && !std::isnan(par0))
          b_samples[r] = witness_lower_bound(res[r].pops[o], par0, oa.label);
      }
      oa.bound = Uncertain{
          witness_lower_bound(point.pops[o], point.parity[*set.zero_index][o], oa.label),
          sample_sigma(b_samples)};
      const double sig = std::isfinite(oa.bound->sigma) ? oa.bound->sigma : 0.0;
      oa.gme = flag_gme(oa.bound->value, sig);
    }
  }

  if (!std::isnan(alpha_ddd) && !std::isnan(alpha_uuu)) {
    const double d_point = std::abs(wrap_pi(alpha_ddd - alpha_uuu));
    std::vector<double> d_samples(n_res, kNaN);
    for (size_t r = 0; r < n_res; ++r) {
      const double a0 = alpha_ddd_samples[r];
      const double a7 = alpha_uuu_samples[r];
      if (!std::isnan(a0) && !std::isnan(a7)) d_samples[r] = std::abs(wrap_pi(a0 - a7));
    }
    v.alpha_difference = Uncertain{d_point, sample_sigma(d_samples)};
  }
  return v;
}

nlohmann::json json_uncertain(const Uncertain& u) {
  nlohmann::json j;
  j["value"] = std::isfinite(u.value) ? nlohmann::json(u.value) : nlohmann::json();
  j["sigma"] = std::isfinite(u.sigma) ? nlohmann::json(u.sigma) : nlohmann::json();
  return j;
}

nlohmann::json variant_to_json(const VariantReport& v, const std::vector<double>& thetas) {
  nlohmann::json j;
  j["beta"] = v.beta;
  j["alpha_difference"] =
      v.alpha_difference ? json_uncertain(*v.alpha_difference) : nlohmann::json();
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& oa : v.outcomes) {
    nlohmann::json o;
    o["label"] = oa.label.str();
    o["coincidences"] = oa.coincidences;
    if (oa.populations_defined) {
      nlohmann::json pops = nlohmann::json::array();
      for (const auto& u : oa.populations) pops.push_back(json_uncertain(u));
      o["populations"] = pops;
    } else {
      o["populations"] = nullptr;
    }
    o["parity0"] = oa.parity0_defined ? json_uncertain(oa.parity0) : nlohmann::json();
    nlohmann::json pts = nlohmann::json::array();
    for (size_t s = 0; s < oa.parity_points.size(); ++s) {
      nlohmann::json pt;
      pt["theta"] = thetas[s];
      pt["parity"] = std::isnan(oa.parity_points[s].value)
                         ? nlohmann::json()
                         : json_uncertain(oa.parity_points[s]);
      pts.push_back(pt);
    }
    o["parity_points"] = pts;
    if (oa.fit_defined) {
      nlohmann::json f;
      f["contrast"] = json_uncertain(oa.contrast);
      f["phase"] = json_uncertain(oa.phase);
      f["weighted"] = oa.fit_weighted;
      f["residual_norm"] = oa.fit.residual_norm;
      o["fit"] = f;
    } else {
      o["fit"] = nullptr;
    }
    o["fidelity"] = oa.fidelity ? json_uncertain(*oa.fidelity) : nlohmann::json();
    if (oa.bound) {
      o["bound"] = json_uncertain(*oa.bound);
      o["gme"] = nlohmann::json{
          {"gme", oa.gme.gme},
          {"n_sigmas",
           std::isfinite(oa.gme.n_sigmas) ? nlohmann::json(oa.gme.n_sigmas) : nlohmann::json()}};
    } else {
      o["bound"] = nullptr;
      o["gme"] = nullptr;
    }
    outs[oa.outcome.str()] = o;
  }
  j["outcomes"] = outs;
  return j;
}

std::string fmt_uncertain(const Uncertain& u, int prec = 4) {
  if (std::isnan(u.value)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << u.value;
  if (std::isfinite(u.sigma)) os << "+-" << std::setprecision(prec) << u.sigma;
  return os.str();
}

std::string csv_field(const Uncertain& u, bool defined) {
  if (!defined || std::isnan(u.value)) return ",";
  std::ostringstream os;
  os << std::setprecision(10) << u.value << ',';
  if (std::isfinite(u.sigma)) os << std::setprecision(10) << u.sigma;
  return os.str();
}

void variant_to_text(std::ostream& os, const VariantReport& v, const char* title) {
  os << title << " (beta = " << v.beta << ")\n";
  os << std::left << std::setw(8) << " herald" << std::setw(9) << "state" << std::setw(17)
     << "P000+P111" << std::setw(17) << "parity(0)" << std::setw(17) << "contrast"
     << std::setw(17) << "phase" << std::setw(17) << "fidelity" << std::setw(17) << "bound"
     << "GME\n";
  for (const auto& oa : v.outcomes) {
    Uncertain psum{kNaN, kNaN};
    if (oa.populations_defined) {
      psum.value = oa.populations[0].value + oa.populations[7].value;
      psum.sigma = std::hypot(oa.populations[0].sigma, oa.populations[7].sigma);
    }
    os << ' ' << std::left << std::setw(7) << oa.outcome.str() << std::setw(9)
       << oa.label.str() << std::setw(17) << fmt_uncertain(psum) << std::setw(17)
       << (oa.parity0_defined ? fmt_uncertain(oa.parity0) : "-") << std::setw(17)
       << (oa.fit_defined ? fmt_uncertain(oa.contrast) : "-") << std::setw(17)
       << (oa.fit_defined ? fmt_uncertain(oa.phase) : "-") << std::setw(17)
       << (oa.fidelity ? fmt_uncertain(*oa.fidelity) : "-") << std::setw(17)
       << (oa.bound ? fmt_uncertain(*oa.bound) : "-");
    if (oa.bound) {
      std::ostringstream gme;
      gme << (oa.gme.gme ? "yes" : "no");
      if (std::isfinite(oa.gme.n_sigmas))
        gme << " (" << std::fixed << std::setprecision(1) << oa.gme.n_sigmas << " sigma)";
      os << gme.str();
    } else {
      os << "-";
    }
    os << '\n';
  }
  if (v.alpha_difference)
    os << " alpha(ddd) - alpha(uuu) = " << fmt_uncertain(*v.alpha_difference)
       << " rad (ideal: pi)\n";
}

} // namespace

Predictions predict(const ConditionalStateSet& set,
                    const std::vector<MeasurementSetting>& settings) {
  Predictions out;
  out.settings = settings;
  for (const auto& s : settings)
    if (s.is_parity()) out.parity_thetas.push_back(s.theta());
  std::sort(out.parity_thetas.begin(), out.parity_thetas.end());
  for (int o = 0; o < 8; ++o) {
    OutcomePrediction& p = out.outcomes[o];
    p.outcome = IonOutcome::from_index(o);
    p.label = label_for_outcome(p.outcome);
    const ConditionalBranch& br = set.branches[o];
    p.branch_probability = br.probability;
    p.defined = br.state.has_value();
    if (!p.defined) continue;
    const DensityMatrix& rho = *br.state;
    for (int i = 0; i < 8; ++i) p.populations[i] = std::max(0.0, std::real(rho.entries()(i, i)));
    const cplx rho07 = rho.entries()(0, 7);
    p.contrast = 2.0 * std::abs(rho07);
    p.phase = std::arg(rho07);
    p.parity0 = parity_of_state(rho, 0.0);
    for (double th : out.parity_thetas) p.parity_curve.push_back(parity_of_state(rho, th));
    try {
      ParityCurve grid;
      for (std::size_t i = 0; i < out.parity_thetas.size(); ++i)
        grid.points.push_back({out.parity_thetas[i], p.parity_curve[i], 0.0});
      const FitResult grid_fit = fit_parity(grid, /*weighted=*/false);
      p.grid_fit_defined = true;
      p.contrast_fit = grid_fit.C;
      p.phase_fit = grid_fit.alpha;
    } catch (const std::exception&) {
      p.grid_fit_defined = false;  // too few / degenerate parity angles
    }
    p.fidelity = fidelity(rho, ghz_ket(p.label));
    p.fidelity_pc = fidelity_from_parity(p.populations[0], p.populations[7], p.contrast);
    p.bound = witness_lower_bound(p.populations, p.parity0, p.label);
  }
  return out;
}

nlohmann::json predictions_to_json(const Predictions& p) {
  nlohmann::json j;
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : p.settings)
    settings.push_back(nlohmann::json{
        {"label", s.label}, {"phi_deg", s.phi_deg}, {"varphi_deg", s.varphi_deg}});
  j["settings"] = settings;
  j["parity_thetas"] = p.parity_thetas;
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& o : p.outcomes) {
    nlohmann::json e;
    e["label"] = o.label.str();
    e["branch_probability"] = o.branch_probability;
    if (o.defined) {
      e["populations"] = o.populations;
      e["parity0"] = o.parity0;
      e["parity_curve"] = o.parity_curve;
      e["contrast"] = o.contrast;
      e["phase"] = o.phase;
      if (o.grid_fit_defined)
        e["grid_fit"] = nlohmann::json{{"contrast", o.contrast_fit}, {"phase", o.phase_fit}};
      e["fidelity"] = o.fidelity;
      e["fidelity_populations_contrast"] = o.fidelity_pc;
      e["bound"] = o.bound;
    }
    outs[o.outcome.str()] = e;
  }
  j["outcomes"] = outs;
  return j;
}

Predictions predictions_from_json(const nlohmann::json& j) {
  Predictions p;
  for (const auto& s : j.at("settings")) {
    MeasurementSetting ms;
    ms.label = s.at("label").get<std::string>();
    ms.phi_deg = s.at("phi_deg").get<double>();
    ms.varphi_deg = s.at("varphi_deg").get<double>();
    p.settings.push_back(ms);
  }
  p.parity_thetas = j.at("parity_thetas").get<std::vector<double>>();
  for (const auto& [key, e] : j.at("outcomes").items()) {
    const IonOutcome o = IonOutcome::parse(key);
    OutcomePrediction& op = p.outcomes[o.index()];
    op.outcome = o;
    op.label = label_for_outcome(o);
    if (e.at("label").get<std::string>() != op.label.str())
      throw std::invalid_argument("prediction label does not match its herald");
    op.branch_probability = e.at("branch_probability").get<double>();
    op.defined = e.contains("populations");
    if (!op.defined) continue;
    const auto pops = e.at("populations").get<std::vector<double>>();
    if (pops.size() != 8) throw std::invalid_argument("populations must have 8 entries");
    std::copy(pops.begin(), pops.end(), op.populations.begin());
    op.parity0 = e.at("parity0").get<double>();
    op.parity_curve = e.at("parity_curve").get<std::vector<double>>();
    op.contrast = e.at("contrast").get<double>();
    op.phase = e.at("phase").get<double>();
    if (e.contains("grid_fit")) {
      op.grid_fit_defined = true;
      op.contrast_fit = e.at("grid_fit").at("contrast").get<double>();
      op.phase_fit = e.at("grid_fit").at("phase").get<double>();
    }
    op.fidelity = e.at("fidelity").get<double>();
    op.fidelity_pc = e.at("fidelity_populations_contrast").get<double>();
    op.bound = e.at("bound").get<double>();
  }
  return p;
}

namespace {

Uncertain uncertain_from_json(const nlohmann::json& j) {
  Uncertain u{kNaN, kNaN};
  if (!j.at("value").is_null()) u.value = j.at("value").get<double>();
  if (!j.at("sigma").is_null()) u.sigma = j.at("sigma").get<double>();
  return u;
}

VariantReport variant_from_json(const nlohmann::json& j) {
  VariantReport v;
  v.beta = j.at("beta").get<double>();
  if (!j.at("alpha_difference").is_null())
    v.alpha_difference = uncertain_from_json(j.at("alpha_difference"));
  for (const auto& [key, o] : j.at("outcomes").items()) {
    const IonOutcome oc = IonOutcome::parse(key);
    OutcomeAnalysis& oa = v.outcomes[oc.index()];
    oa.outcome = oc;
    oa.label = label_for_outcome(oc);
    oa.coincidences = o.at("coincidences").get<std::uint64_t>();
    if (!o.at("populations").is_null()) {
      const auto& pops = o.at("populations");
      if (pops.size() != 8) throw std::invalid_argument("populations must have 8 entries");
      oa.populations_defined = true;
      for (int i = 0; i < 8; ++i) oa.populations[i] = uncertain_from_json(pops[i]);
    }
    if (!o.at("parity0").is_null()) {
      oa.parity0_defined = true;
      oa.parity0 = uncertain_from_json(o.at("parity0"));
    }
    for (const auto& pt : o.at("parity_points")) {
      Uncertain u{kNaN, kNaN};
      if (!pt.at("parity").is_null()) u = uncertain_from_json(pt.at("parity"));
      oa.parity_points.push_back(u);
    }
    if (!o.at("fit").is_null()) {
      const auto& f = o.at("fit");
      oa.fit_defined = true;
      oa.contrast = uncertain_from_json(f.at("contrast"));
      oa.phase = uncertain_from_json(f.at("phase"));
      oa.fit_weighted = f.at("weighted").get<bool>();
      oa.fit.C = oa.contrast.value;
      oa.fit.alpha = oa.phase.value;
      oa.fit.residual_norm = f.at("residual_norm").get<double>();
    }
    if (!o.at("fidelity").is_null()) oa.fidelity = uncertain_from_json(o.at("fidelity"));
    if (!o.at("bound").is_null()) {
      oa.bound = uncertain_from_json(o.at("bound"));
      oa.gme = flag_gme(oa.bound->value,
                        std::isfinite(oa.bound->sigma) ? oa.bound->sigma : 0.0);
    }
  }
  return v;
}

} // namespace

AnalysisReport report_from_json(const nlohmann::json& j) {
  AnalysisReport report;
  report.beta.value = j.at("beta").at("value").get<double>();
  report.beta.sigma = j.at("beta").at("sigma").get<double>();
  report.beta_estimated = j.at("beta").at("estimated").get<bool>();
  report.parity_thetas = j.at("parity_thetas").get<std::vector<double>>();
  report.total_coincidences = j.at("total_coincidences").get<std::uint64_t>();
  report.gaps = j.at("gaps").get<std::vector<std::string>>();
  report.corrected = variant_from_json(j.at("corrected"));
  report.uncorrected = variant_from_json(j.at("uncorrected"));
  return report;
}

namespace {

// Fit the model parity curve with the same angle grid and weights the data fit
// used, so the model contrast is comparable even where the curve oscillates at
// a frequency the grid cannot separate from 3 theta.
double model_contrast(const AnalysisReport& report, const OutcomeAnalysis& oa,
                      const OutcomePrediction& op, const std::vector<double>& model_thetas) {
  const std::vector<double>& thetas = report.parity_thetas;
  if (thetas.size() == model_thetas.size() && thetas.size() == op.parity_curve.size() &&
      oa.parity_points.size() == thetas.size()) {
    bool match = true;
    for (size_t i = 0; i < thetas.size(); ++i)
      if (std::abs(thetas[i] - model_thetas[i]) > 1e-9) match = false;
    if (match) {
      try {
        ParityCurve curve;
        for (size_t i = 0; i < thetas.size(); ++i)
          curve.points.push_back({thetas[i], op.parity_curve[i], oa.parity_points[i].sigma});
        return fit_parity(curve, oa.fit_weighted).C;
      } catch (const std::exception&) {
        // fall through to the stored grid fit
      }
    }
  }
  return op.grid_fit_defined ? op.contrast_fit : kNaN;
}

} // namespace

std::string comparison_to_text(const AnalysisReport& report, const Predictions& predictions) {
  std::ostringstream os;
  os << "estimate vs model (beta-corrected variant)\n";
  os << std::left << std::setw(8) << " herald" << std::setw(34) << "parity(0): est | model | pull"
     << std::setw(34) << "contrast: est | model | pull" << std::setw(34)
     << "fidelity: est | model | pull" << "bound: est | model | pull\n";
  const auto cell = [](const Uncertain& est, double model) {
    std::ostringstream c;
    if (std::isnan(est.value)) {
      c << "-";
      return c.str();
    }
    c << std::fixed << std::setprecision(4) << est.value << " | " << model << " | ";
    if (est.sigma > 0.0 && std::isfinite(est.sigma))
      c << std::setprecision(2) << (est.value - model) / est.sigma;
    else
      c << "-";
    return c.str();
  };
  for (int o = 0; o < 8; ++o) {
    const OutcomeAnalysis& oa = report.corrected.outcomes[o];
    const OutcomePrediction& op = predictions.outcomes[o];
    os << ' ' << std::left << std::setw(7) << oa.outcome.str();
    if (!op.defined) {
      os << "model branch undefined\n";
      continue;
    }
    const double model_c =
        oa.fit_defined ? model_contrast(report, oa, op, predictions.parity_thetas) : kNaN;
    os << std::setw(34) << (oa.parity0_defined ? cell(oa.parity0, op.parity0) : "-")
       << std::setw(34)
       << (oa.fit_defined && !std::isnan(model_c) ? cell(oa.contrast, model_c) : "-")
       << std::setw(34)
       << (oa.fidelity ? cell(*oa.fidelity, op.fidelity_pc) : "-")
       << (oa.bound ? cell(*oa.bound, op.bound) : "-") << '\n';
  }
  os << " (model contrast column: fit of the model curve on the same angle grid;\n"
        "  model fidelity column: populations+contrast form; exact values in predictions file)\n";
  return os.str();
}

AnalysisReport analyze(std::span<const CountTable> tables, const AnalysisOptions& options) {
  AnalysisReport report;
  const TableSet set = classify(tables, &report.gaps);
  report.parity_thetas = set.thetas;

  std::vector<size_t> used_tables;
  if (set.plus45) used_tables.push_back(*set.plus45);
  if (set.minus45) used_tables.push_back(*set.minus45);
  used_tables.insert(used_tables.end(), set.parity.begin(), set.parity.end());
  std::array<std::uint64_t, 8> coincidences{};
  for (size_t t : used_tables)
    for (int o = 0; o < 8; ++o) coincidences[o] += tables[t].outcome_total(o);
  for (int o = 0; o < 8; ++o) report.total_coincidences += coincidences[o];

  const bool can_estimate =
      set.plus45 && set.minus45 &&
      tables[*set.plus45].singles_t + tables[*set.minus45].singles_t > 0 &&
      tables[*set.plus45].singles_r + tables[*set.minus45].singles_r > 0;
  if (options.external_beta) {
    report.beta = *options.external_beta;
    if (!(report.beta.value > 0.0) || !std::isfinite(report.beta.value))
      throw std::invalid_argument("external beta must be positive and finite");
    if (report.beta.sigma <= 0.0) report.beta.sigma = options.bootstrap.beta_sigma;
  } else if (can_estimate) {
    report.beta = estimate_beta(tables[*set.plus45], tables[*set.minus45]);
    report.beta_estimated = true;
  } else {
    report.beta = {1.0, 0.0};
    report.gaps.push_back("no singles available for beta; corrected variant uses beta = 1");
  }

  const RawEstimates point_c = raw_estimates(tables, set, report.beta.value);
  const RawEstimates point_u = raw_estimates(tables, set, 1.0);

  const int resamples = options.bootstrap.resamples;
  if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  std::vector<RawEstimates> res_c, res_u;
  res_c.reserve(resamples);
  res_u.reserve(resamples);
  std::vector<CountTable> work(tables.begin(), tables.end());
  for (int r = 0; r < resamples; ++r) {
    Rng rng = Rng::fork(options.bootstrap.seed, static_cast<uint64_t>(r) + 1);
    for (size_t t = 0; t < work.size(); ++t) work[t] = resample_counts(tables[t], rng);
    double beta_r = 1.0;
    if (options.external_beta) {
      beta_r = report.beta.value;
      if (report.beta.sigma > 0.0)
        beta_r = std::max(1e-9, beta_r + report.beta.sigma * rng.normal());
    } else if (can_estimate) {
      const CountTable& p = work[*set.plus45];
      const CountTable& m = work[*set.minus45];
      beta_r = (p.singles_t + m.singles_t > 0 && p.singles_r + m.singles_r > 0)
                   ? estimate_beta(p, m).value
                   : kNaN;
    }
    res_c.push_back(raw_estimates(work, set, beta_r));
    res_u.push_back(raw_estimates(work, set, 1.0));
  }

  report.corrected = assemble_variant(report.beta.value, point_c, res_c, set, coincidences);
  report.uncorrected = assemble_variant(1.0, point_u, res_u, set, coincidences);
  return report;
}

nlohmann::json report_to_json(const AnalysisReport& report) {
  nlohmann::json j;
  j["beta"] = nlohmann::json{{"value", report.beta.value},
                             {"sigma", report.beta.sigma},
                             {"estimated", report.beta_estimated}};
  j["parity_thetas"] = report.parity_thetas;
  j["total_coincidences"] = report.total_coincidences;
  j["gaps"] = report.gaps;
  j["corrected"] = variant_to_json(report.corrected, report.parity_thetas);
  j["uncorrected"] = variant_to_json(report.uncorrected, report.parity_thetas);
  return j;
}

std::string report_to_text(const AnalysisReport& report) {
  std::ostringstream os;
  os << "heralded three-photon analysis\n";
  os << "beta = " << fmt_uncertain(report.beta)
     << (report.beta_estimated ? " (estimated from singles)" : " (external)") << '\n';
  os << "coincidences: " << report.total_coincidences << "; parity angles (rad):";
  for (double t : report.parity_thetas) os << ' ' << t;
  os << "\n\n";
  variant_to_text(os, report.corrected, "beta-corrected");
  os << '\n';
  variant_to_text(os, report.uncorrected, "uncorrected");
  if (!report.gaps.empty()) {
    os << "\nnotes:\n";
    for (const auto& g : report.gaps) os << " - " << g << '\n';
  }
  return os.str();
}

std::string report_to_csv(const AnalysisReport& report) {
  std::ostringstream os;
  os << "# beta=" << std::setprecision(10) << report.beta.value
     << ",sigma=" << report.beta.sigma << ",estimated=" << (report.beta_estimated ? 1 : 0)
     << '\n';
  os << "variant,herald,state,coincidences";
  for (int i = 0; i < 8; ++i) {
    const std::string bits = std::bitset<3>(i).to_string();
    os << ",p" << bits << ",p" << bits << "_sigma";
  }
  os << ",parity0,parity0_sigma,contrast,contrast_sigma,phase,phase_sigma,"
        "fidelity,fidelity_sigma,bound,bound_sigma,gme,gme_n_sigmas\n";
  const auto emit = [&os](const VariantReport& v, const char* name) {
    for (const auto& oa : v.outcomes) {
      os << name << ',' << oa.outcome.str() << ',' << oa.label.str() << ','
         << oa.coincidences;
      for (int i = 0; i < 8; ++i)
        os << ',' << csv_field(oa.populations[i], oa.populations_defined);
      os << ',' << csv_field(oa.parity0, oa.parity0_defined);
      os << ',' << csv_field(oa.contrast, oa.fit_defined);
      os << ',' << csv_field(oa.phase, oa.fit_defined);
      os << ',' << csv_field(oa.fidelity.value_or(Uncertain{kNaN, kNaN}), oa.fidelity.has_value());
      os << ',' << csv_field(oa.bound.value_or(Uncertain{kNaN, kNaN}), oa.bound.has_value());
      if (oa.bound) {
        os << ',' << (oa.gme.gme ? 1 : 0) << ','
           << (std::isfinite(oa.gme.n_sigmas) ? std::to_string(oa.gme.n_sigmas) : "");
      } else {
        os << ",,";
      }
      os << '\n';
    }
  };
  emit(report.corrected, "corrected");
  emit(report.uncorrected, "uncorrected");
  return os.str();
}

} // namespace ghzsim
