#pragma once

// The factory-node pipeline: ion-photon pair sources, the collective
// entangling operation on the three ions, projection onto the ion readout
// outcomes, and the resulting conditional three-photon states. Ion encoding:
// down = 0, up = 1; photon encoding: A = 0, D = 1. An ion-photon pair orders
// the ion qubit first.

#include <array>
#include <string>

#include <json.hpp>

#include "ghzsim/optics.hpp"
#include "ghzsim/quantum.hpp"

namespace ghzsim {

// Three-ion readout result, e.g. "dud" = down, up, down.
struct IonOutcome {
  std::array<int, 3> bits{};   // first ion first, down = 0

  int index() const { return (bits[0] << 2) | (bits[1] << 1) | bits[2]; }
  static IonOutcome from_index(int idx);
  static IonOutcome parse(const std::string& s);   // "ddu" style
  std::string str() const;
  bool operator==(const IonOutcome&) const = default;
};

// GHZ basis label: index 1..4 encodes the bit pair (j, k) as 1=00, 2=01,
// 3=10, 4=11; sign is +1 or -1. The state is (|0jk> + sign |1 !j !k>)/sqrt(2).
struct GhzLabel {
  int index = 1;
  int sign = +1;

  int j() const { return (index - 1) >> 1; }
  int k() const { return (index - 1) & 1; }
  static GhzLabel from_bits(int j, int k, int sign);
  std::string str() const;   // "ghz3-" style
  bool operator==(const GhzLabel&) const = default;
};

// The outcome <-> label bijection of the eight-state table.
GhzLabel label_for_outcome(const IonOutcome& o);
IonOutcome outcome_for_label(const GhzLabel& l);

Ket ghz_ket(const GhzLabel& l);

struct ConditionalBranch {
  double probability = 0.0;
  bool defined = false;
  std::optional<DensityMatrix> state;   // absent on a zero-probability branch
};

// Photon states conditioned on each ion outcome, indexed by IonOutcome::index.
struct ConditionalStateSet {
  std::array<ConditionalBranch, 8> branches;

  const ConditionalBranch& branch(const IonOutcome& o) const { return branches[o.index()]; }
};

// Pair sources. make_bell is the calibrated pair (|down A> - i |up D>)/sqrt(2):
// the relative phase is the one source convention that makes the documented
// collective operation reproduce the eight-state table. make_werner mixes it
// with the maximally mixed pair.
DensityMatrix make_bell();
DensityMatrix make_werner(double p);
DensityMatrix make_ion_photon(const Mat& measured, Frame frame = Frame::logical);
DensityMatrix make_ion_photon(const nlohmann::json& j);   // honors a "frame" field

// Collective entangling gate on the three ions,
// exp(-i pi/4 sum_{i<j} X_i X_j); 8x8.
UnitaryOp ms_gate();

// U tensor U tensor U with U = exp(-i pi/4 X); 8x8.
UnitaryOp collective_rotation();

// Full pipeline: tensor the three pairs, reorder to (ions | photons), apply
// the collective rotation and entangling gate to the ions, project onto each
// readout outcome and trace out the ions.
ConditionalStateSet ghz_projection_table(const DensityMatrix& pair1, const DensityMatrix& pair2,
                                         const DensityMatrix& pair3);

enum class Pauli { I, X, Y, Z };
char pauli_char(Pauli p);
Mat pauli_matrix(Pauli p);

// Per-photon Pauli corrections steering the ideal conditional state of
// `outcome` into the `target` GHZ state (up to global phase).
std::array<Pauli, 3> rsp_correction(const IonOutcome& outcome, const GhzLabel& target);

// JSON export: map outcome string -> {probability, density matrix}.
nlohmann::json conditional_set_to_json(const ConditionalStateSet& set);
ConditionalStateSet conditional_set_from_json(const nlohmann::json& j);

} // namespace ghzsim
