#pragma once

// Dense complex linear algebra for few-qubit states and operators.
// Qubit ordering is big-endian everywhere: in tensor(a, b) the first operand
// occupies the most significant qubits, so bit q of a basis index addresses
// qubit q counted from the left.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ghzsim/tolerances.hpp"

namespace ghzsim {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// qubit count for dim = 2^k with k >= 1; throws std::invalid_argument otherwise
int qubit_count(Eigen::Index dim);

// Pure state. Validates unit norm and power-of-two dimension on construction.
class Ket {
 public:
  explicit Ket(Vec amplitudes, const Tolerances& tol = tols());
  static Ket basis_state(int num_qubits, int index);

  const Vec& amplitudes() const { return a_; }
  Eigen::Index dim() const { return a_.size(); }
  int num_qubits() const { return qubits_; }

 private:
  Vec a_;
  int qubits_;
};

// Trace-one positive operator. Validates hermiticity, trace and the smallest
// eigenvalue on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(Mat entries, const Tolerances& tol = tols());
  static DensityMatrix pure(const Ket& psi);
  static DensityMatrix maximally_mixed(int num_qubits);

  const Mat& entries() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  int num_qubits() const { return qubits_; }

 private:
  Mat m_;
  int qubits_;
};

class UnitaryOp {
 public:
  explicit UnitaryOp(Mat entries, const Tolerances& tol = tols());
  static UnitaryOp identity(int num_qubits);

  const Mat& entries() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  int num_qubits() const { return qubits_; }

 private:
  Mat m_;
  int qubits_;
};

// Kronecker products; the first operand becomes the most significant qubits.
Ket tensor(const Ket& a, const Ket& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
UnitaryOp tensor(const UnitaryOp& a, const UnitaryOp& b);

// Reduced state on `keep` (strictly ascending qubit indices, non-empty).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Qubit reorder: new_to_old[i] is the input qubit that lands at position i.
DensityMatrix permute_qubits(const DensityMatrix& rho, const std::vector<int>& new_to_old);
Ket permute_qubits(const Ket& psi, const std::vector<int>& new_to_old);

DensityMatrix evolve(const DensityMatrix& rho, const UnitaryOp& u);
Ket evolve(const Ket& psi, const UnitaryOp& u);

// Projective branch: (M rho M / p, p) with p = Tr(M rho M). The state is
// absent when p falls below the zero-probability tolerance.
struct ProjectionResult {
  std::optional<DensityMatrix> state;
  double probability = 0.0;
};
ProjectionResult project_and_normalize(const DensityMatrix& rho, const Mat& projector,
                                       const Tolerances& tol = tols());

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; symmetric in its
// arguments. The pure-target overload is the shortcut <psi|rho|psi>.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double fidelity(const DensityMatrix& rho, const Ket& psi);

double purity(const DensityMatrix& rho);
double sqrt_purity(const DensityMatrix& rho);

// Tr(obs rho) for Hermitian obs; the imaginary residue is checked then dropped.
double expectation(const DensityMatrix& rho, const Mat& obs, const Tolerances& tol = tols());

// Square root of a Hermitian PSD matrix via eigendecomposition; eigenvalues in
// [-clamp, 0) clamp to zero, below -clamp it throws.
Mat matrix_sqrt_psd(const Mat& hermitian, double clamp);

// JSON form: {"dim": d, "entries": [[re, im], ...]} row-major.
nlohmann::json density_matrix_to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

// Pauli matrices and friends, as 2x2 blocks.
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat pauli_i();

} // namespace ghzsim
