#include "ghzsim/gme.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

namespace ghzsim {

namespace {

// Reshape an 8-amplitude ket into the 2x4 (or 4x2 viewed transposed) matrix
// M[single][pair] for the cut that isolates one qubit. Qubits are labeled
// a=0, b=1, c=2 from the most significant bit.
Eigen::MatrixXcd cut_matrix(const Ket& psi, Bipartition cut) {
  if (psi.num_qubits() != 3) throw std::invalid_argument("bipartition cuts expect three qubits");
  const int solo = (cut == Bipartition::a_bc) ? 0 : (cut == Bipartition::b_ac) ? 1 : 2;
  Eigen::MatrixXcd m(2, 4);
  for (int idx = 0; idx < 8; ++idx) {
    int bits[3] = {(idx >> 2) & 1, (idx >> 1) & 1, idx & 1};
    const int row = bits[solo];
    int col = 0;
    for (int q = 0; q < 3; ++q) {
      if (q == solo) continue;
      col = (col << 1) | bits[q];
    }
    m(row, col) = psi.amplitudes()(idx);
  }
  return m;
}

} // namespace

double max_schmidt_sq(const Ket& psi, Bipartition cut) {
  const Eigen::MatrixXcd m = cut_matrix(psi, cut);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const double s = svd.singularValues()(0);
  return std::min(1.0, s * s);
}

BiseparableResult max_biseparable_overlap(const Ket& psi, Bipartition cut, int restarts,
                                          int max_iterations, double tol) {
  if (restarts < 1 || max_iterations < 1)
    throw std::invalid_argument("need at least one restart and one iteration");
  const Eigen::MatrixXcd m = cut_matrix(psi, cut);

  BiseparableResult best;
  Rng rng(0xb15e9a7a11c0ffeeULL);
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXcd chi(4);
    for (int i = 0; i < 4; ++i) chi(i) = std::complex<double>(rng.normal(), rng.normal());
    chi.normalize();

    double prev = -1.0;
    BiseparableResult cur;
    for (int it = 0; it < max_iterations; ++it) {
      // With |phi x chi> overlap <phi|M chi*|, the optimal phi is M chi* scaled
      // to unit norm; then the optimal chi is conj(M^dag phi).
      Eigen::VectorXcd phi = m * chi.conjugate();
      const double np = phi.norm();
      if (np < 1e-300) break;
      phi /= np;
      Eigen::VectorXcd next = (m.adjoint() * phi).conjugate();
      const double nc = next.norm();
      if (nc < 1e-300) break;
      chi = next / nc;
      cur.overlap = nc * nc;
      cur.iterations = it + 1;
      if (std::abs(cur.overlap - prev) < tol) {
        cur.converged = true;
        break;
      }
      prev = cur.overlap;
    }
    if (cur.overlap > best.overlap ||
        (cur.overlap == best.overlap && cur.converged && !best.converged))
      best = cur;
  }
  best.overlap = std::min(1.0, best.overlap);
  return best;
}

double max_biseparable_fidelity(const Ket& psi) {
  double best = 0.0;
  for (Bipartition cut : all_bipartitions())
    best = std::max(best, max_biseparable_overlap(psi, cut).overlap);
  return best;
}

GmeFlag flag_gme(double fidelity_lower_bound, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
  GmeFlag flag;
  const double excess = fidelity_lower_bound - 0.5;
  if (sigma == 0.0) {
    flag.n_sigmas = (excess == 0.0) ? 0.0
                                    : std::copysign(std::numeric_limits<double>::infinity(), excess);
  } else {
    flag.n_sigmas = excess / sigma;
  }
  flag.gme = excess > 0.0;
  return flag;
}

Ket random_ket(int n_qubits, Rng& rng) {
  if (n_qubits < 1 || n_qubits > 12) throw std::invalid_argument("unsupported qubit count");
  Eigen::VectorXcd amp(1 << n_qubits);
  for (int i = 0; i < amp.size(); ++i) amp(i) = std::complex<double>(rng.normal(), rng.normal());
  amp.normalize();
  return Ket(amp);
}

DensityMatrix random_density_matrix(int n_qubits, Rng& rng) {
  if (n_qubits < 1 || n_qubits > 12) throw std::invalid_argument("unsupported qubit count");
  const int dim = 1 << n_qubits;
  Eigen::MatrixXcd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(rho);
}

} // namespace ghzsim
