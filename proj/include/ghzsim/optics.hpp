#pragma once

// Jones-calculus model of the polarization analysis chain: a fixed quarter-wave
// plate, a rotatable half-wave plate H(phi), a rotatable quarter-wave plate
// Q2(varphi) and a polarizing beam splitter with two detectors (transmitted t,
// reflected r). Logical basis: |0> = |A>, |1> = |D>.

#include <array>
#include <string>
#include <vector>

#include "ghzsim/quantum.hpp"

namespace ghzsim {

// One wave-plate angle pair. theta() is the rotated-X measurement angle the
// parity settings realize: theta = 4 * phi (radians).
struct MeasurementSetting {
  double phi_deg = 0.0;      // half-wave plate
  double varphi_deg = 0.0;   // second quarter-wave plate
  std::string label;

  double theta() const;
  bool is_logical_plus() const;   // (0, +45): D -> t, A -> r
  bool is_logical_minus() const;  // (0, -45): flipped
  bool is_parity() const;         // (phi, 0)
};

// The standard eight settings: logical +/- then the six-point theta grid
// theta = 4*phi in {0, 22.5, 45, 67.5, 90, 112.5} degrees.
std::vector<MeasurementSetting> default_settings();

// Detection efficiencies of the two PBS output ports. beta = eta_r / eta_t is
// the imbalance ratio the estimators correct for.
struct DetectorModel {
  double eta_t = 1.0;
  double eta_r = 1.0;

  double beta() const { return eta_r / eta_t; }
  static DetectorModel balanced();
  static DetectorModel from_beta(double beta);             // scaled so max eta = 1
  static DetectorModel from_efficiencies(double eta_t, double eta_r);
};

// Jones matrices exactly as modeled, including global phases.
UnitaryOp halfwave(double phi_deg);
UnitaryOp quarterwave(double varphi_deg);

// Fixed embedding E of logical A/D coordinates into the linear polarization
// frame entering the half-wave plate (the first quarter-wave plate composed
// with the diagonal-basis change). Calibrated so the chain satisfies the
// documented port mappings; see analysis_unitary.
UnitaryOp logical_frame_embedding();

// Q2(varphi) * H(phi) * E: maps logical coordinates to PBS port coordinates.
// Transmitted amplitude = first component, reflected = second.
// Satisfies: (0,+45) maps D->t and A->r; (0,-45) the flipped assignment;
// (phi,0) measures the eigenbasis of X_theta = cos(theta) X + sin(theta) Y
// with theta = 4*phi and the transmitted port on the +1 eigenvector.
UnitaryOp analysis_unitary(const MeasurementSetting& s);

// Coordinate frame an input ion-photon matrix is expressed in. `logical` is
// the tomography frame (A/D computational coordinates, the default);
// `lab_linear` is the raw linear H/V Jones frame before the first quarter-wave
// plate, converted on load via the fixed embedding.
enum class Frame { logical, lab_linear };
Frame frame_from_string(const std::string& name);
std::string frame_to_string(Frame f);

// Convert the photon half (qubit 1) of a two-qubit ion-photon state to the
// logical frame.
DensityMatrix photon_to_logical(const DensityMatrix& ion_photon, Frame frame);

// Port patterns opq for the three photon windows are packed into an index with
// the first window as the most significant bit and bit value 1 = reflected.
int port_pattern_index(const std::string& pattern);    // e.g. "trt"
std::string port_pattern_string(int index);
inline int reflected_count(int pattern) { return __builtin_popcount(pattern); }
inline int transmitted_count(int pattern) { return 3 - reflected_count(pattern); }
inline int parity_sign(int pattern) { return reflected_count(pattern) % 2 == 0 ? +1 : -1; }

// Port-pattern distribution of a three-photon state at one setting.
// `conditional` is normalized over patterns given that all three photons were
// detected; `triple_probability` includes the per-port detector efficiencies
// and the optional per-photon efficiencies.
struct PortDistribution {
  std::array<double, 8> conditional{};
  std::array<double, 8> born{};   // efficiency-free Born probabilities
  double triple_probability = 0.0;
};
PortDistribution port_distribution(const DensityMatrix& rho3, const MeasurementSetting& s,
                                   const DetectorModel& det,
                                   const std::array<double, 3>& photon_efficiency = {1.0, 1.0, 1.0});

} // namespace ghzsim
