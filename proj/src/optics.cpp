#include "ghzsim/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace ghzsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
double deg2rad(double d) { return d * kPi / 180.0; }
} // namespace

double MeasurementSetting::theta() const { return 4.0 * deg2rad(phi_deg); }

bool MeasurementSetting::is_logical_plus() const {
  return std::abs(phi_deg) < 1e-9 && std::abs(varphi_deg - 45.0) < 1e-9;
}

bool MeasurementSetting::is_logical_minus() const {
  return std::abs(phi_deg) < 1e-9 && std::abs(varphi_deg + 45.0) < 1e-9;
}

bool MeasurementSetting::is_parity() const { return std::abs(varphi_deg) < 1e-9; }

std::vector<MeasurementSetting> default_settings() {
  std::vector<MeasurementSetting> s;
  s.push_back({0.0, 45.0, "logical_plus"});
  s.push_back({0.0, -45.0, "logical_minus"});
  const double grid[] = {0.0, 5.625, 11.25, 16.875, 22.5, 28.125};
  const char* names[] = {"parity_0000", "parity_0225", "parity_0450",
                         "parity_0675", "parity_0900", "parity_1125"};
  for (int i = 0; i < 6; ++i) s.push_back({grid[i], 0.0, names[i]});
  return s;
}

DetectorModel DetectorModel::balanced() { return {1.0, 1.0}; }

DetectorModel DetectorModel::from_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("detector beta must be positive");
  // scale so the better port has unit efficiency
  if (beta >= 1.0) return {1.0 / beta, 1.0};
  return {1.0, beta};
}

DetectorModel DetectorModel::from_efficiencies(double eta_t, double eta_r) {
  if (!(eta_t > 0.0 && eta_t <= 1.0 && eta_r > 0.0 && eta_r <= 1.0))
    throw std::invalid_argument("detector efficiencies must lie in (0, 1]");
  return {eta_t, eta_r};
}

UnitaryOp halfwave(double phi_deg) {
  double p = deg2rad(phi_deg);
  Mat m(2, 2);
  m << std::cos(2 * p), std::sin(2 * p), std::sin(2 * p), -std::cos(2 * p);
  return UnitaryOp(std::exp(cplx(0, -kPi / 2)) * m);
}

UnitaryOp quarterwave(double varphi_deg) {
  double v = deg2rad(varphi_deg);
  double c = std::cos(v), s = std::sin(v);
  Mat m(2, 2);
  m << cplx(c * c, s * s), cplx(1, -1) * s * c, cplx(1, -1) * s * c, cplx(s * s, c * c);
  return UnitaryOp(std::exp(cplx(0, -kPi / 4)) * m);
}

UnitaryOp logical_frame_embedding() {
  Mat t(2, 2);
  double r = 1.0 / std::sqrt(2.0);
  t << r, r, r, -r;
  return UnitaryOp(quarterwave(0.0).entries() * t);
}

UnitaryOp analysis_unitary(const MeasurementSetting& s) {
  return UnitaryOp(quarterwave(s.varphi_deg).entries() * halfwave(s.phi_deg).entries() *
                   logical_frame_embedding().entries());
}

Frame frame_from_string(const std::string& name) {
  if (name == "logical") return Frame::logical;
  if (name == "lab_linear") return Frame::lab_linear;
  throw std::invalid_argument("unknown frame '" + name + "' (expected logical or lab_linear)");
}

std::string frame_to_string(Frame f) {
  return f == Frame::logical ? "logical" : "lab_linear";
}

DensityMatrix photon_to_logical(const DensityMatrix& ion_photon, Frame frame) {
  if (ion_photon.dim() != 4) throw std::invalid_argument("expected a two-qubit ion-photon state");
  if (frame == Frame::logical) return ion_photon;
  // lab_linear -> logical on the photon qubit: psi_lab = (Q1^dag E) psi_logical
  Mat t = quarterwave(0.0).entries().adjoint() * logical_frame_embedding().entries();
  Mat conv = Mat::Zero(4, 4);
  conv.block(0, 0, 2, 2) = t.adjoint();
  conv.block(2, 2, 2, 2) = t.adjoint();
  return DensityMatrix(conv * ion_photon.entries() * conv.adjoint());
}

int port_pattern_index(const std::string& pattern) {
  if (pattern.size() != 3) throw std::invalid_argument("port pattern must have three characters");
  int idx = 0;
  for (char c : pattern) {
    idx <<= 1;
    if (c == 'r')
      idx |= 1;
    else if (c != 't')
      throw std::invalid_argument("port pattern characters must be t or r");
  }
  return idx;
}

std::string port_pattern_string(int index) {
  if (index < 0 || index > 7) throw std::invalid_argument("port pattern index out of range");
  std::string s(3, 't');
  for (int i = 0; i < 3; ++i)
    if ((index >> (2 - i)) & 1) s[i] = 'r';
  return s;
}

PortDistribution port_distribution(const DensityMatrix& rho3, const MeasurementSetting& s,
                                   const DetectorModel& det,
                                   const std::array<double, 3>& photon_efficiency) {
  if (rho3.dim() != 8) throw std::invalid_argument("port_distribution expects a three-photon state");
  for (double e : photon_efficiency)
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("photon efficiency must lie in (0, 1]");

  UnitaryOp w1 = analysis_unitary(s);
  UnitaryOp w3 = tensor(tensor(w1, w1), w1);
  Mat rot = w3.entries() * rho3.entries() * w3.entries().adjoint();

  PortDistribution out;
  double weighted_total = 0.0;
  for (int pat = 0; pat < 8; ++pat) {
    // port basis after the chain: bit 1 = reflected = second Jones component
    double born = std::max(rot(pat, pat).real(), 0.0);
    out.born[pat] = born;
    double eta = 1.0;
    for (int i = 0; i < 3; ++i) {
      bool refl = (pat >> (2 - i)) & 1;
      eta *= photon_efficiency[i] * (refl ? det.eta_r : det.eta_t);
    }
    out.conditional[pat] = born * eta;
    weighted_total += born * eta;
  }
  out.triple_probability = weighted_total;
  if (weighted_total > 0.0)
    for (double& p : out.conditional) p /= weighted_total;
  return out;
}

} // namespace ghzsim
