#pragma once

// Biseparable-fidelity machinery behind the entanglement witness: the maximal
// GHZ-state overlap achievable by states separable across some bipartition of
// three qubits is 1/2, so a fidelity lower bound above 1/2 certifies genuine
// multipartite entanglement.

#include <array>
#include <optional>

#include "ghzsim/quantum.hpp"
#include "ghzsim/rng.hpp"

namespace ghzsim {

enum class Bipartition { a_bc, b_ac, c_ab };

constexpr std::array<Bipartition, 3> all_bipartitions() {
  return {Bipartition::a_bc, Bipartition::b_ac, Bipartition::c_ab};
}

// Largest squared Schmidt coefficient of a pure three-qubit state across the
// given cut. For pure states this equals the maximal overlap with product
// states across that cut, hence max over cuts gives the biseparable bound.
double max_schmidt_sq(const Ket& psi, Bipartition cut);

// max_{product phi x chi across `cut`} |<phi x chi|psi>|^2 via alternating
// closed-form updates (power iteration on the cut's reshaped amplitude
// matrix); converges to the squared largest singular value.
struct BiseparableResult {
  double overlap = 0.0;
  bool converged = false;
  int iterations = 0;
};
BiseparableResult max_biseparable_overlap(const Ket& psi, Bipartition cut, int restarts = 20,
                                          int max_iterations = 200, double tol = 1e-12);

// Max over all three cuts.
double max_biseparable_fidelity(const Ket& psi);

// Decision record for "is this state GME": a fidelity lower bound above 1/2.
struct GmeFlag {
  bool gme = false;
  double n_sigmas = 0.0;   // (bound - 1/2) / sigma; +-inf when sigma == 0
};
GmeFlag flag_gme(double fidelity_lower_bound, double sigma);

// Haar-ish random pure state (normalized complex Gaussian amplitudes) and a
// Ginibre random density matrix, for soundness checks.
Ket random_ket(int n_qubits, Rng& rng);
DensityMatrix random_density_matrix(int n_qubits, Rng& rng);

} // namespace ghzsim
