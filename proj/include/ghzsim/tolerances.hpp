#pragma once

// Centralized numerical tolerances. Every invariant check in the library reads
// its threshold from here so property tests have a single knob.

namespace ghzsim {

struct Tolerances {
  double unit_norm = 1e-12;        // ket squared-norm deviation from 1
  double hermiticity = 1e-10;      // entrywise |M - M^dag|
  double trace_one = 1e-10;        // |Tr(rho) - 1|
  double min_eigenvalue = -1e-9;   // smallest admissible eigenvalue of a state
  double unitarity = 1e-10;        // entrywise |U U^dag - I|
  double projector = 1e-10;        // entrywise |P^2 - P| and |P - P^dag|
  double zero_probability = 1e-14; // below this a projected branch is undefined
  double sqrt_clamp = 1e-9;        // eigenvalues above -sqrt_clamp clamp to 0
  double imag_residue = 1e-10;     // admissible imaginary part of a real scalar
};

// Process-wide defaults; mutable_tolerances lets a test tighten or relax them.
const Tolerances& tols();
Tolerances& mutable_tolerances();

} // namespace ghzsim
