#include "ghzsim/quantum.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace ghzsim {

const Tolerances& tols() { return mutable_tolerances(); }

Tolerances& mutable_tolerances() {
  static Tolerances t;
  return t;
}

int qubit_count(Eigen::Index dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0)
    throw std::invalid_argument("dimension must be a power of two >= 2, got " + std::to_string(dim));
  return std::bit_width(static_cast<uint64_t>(dim)) - 1;
}

namespace {

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

void check_hermitian(const Mat& m, double tol, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": not square");
  if (max_abs(m - m.adjoint()) > tol)
    throw std::invalid_argument(std::string(what) + ": not Hermitian within tolerance");
}

// bit of qubit q (big-endian) in basis index b of an n-qubit register
inline int bit_of(int b, int q, int n) { return (b >> (n - 1 - q)) & 1; }

} // namespace

Ket::Ket(Vec amplitudes, const Tolerances& tol) : a_(std::move(amplitudes)) {
  qubits_ = qubit_count(a_.size());
  double n2 = a_.squaredNorm();
  if (std::abs(n2 - 1.0) > tol.unit_norm)
    throw std::invalid_argument("ket squared norm deviates from 1 by " + std::to_string(n2 - 1.0));
}

Ket Ket::basis_state(int num_qubits, int index) {
  if (num_qubits < 1) throw std::invalid_argument("need at least one qubit");
  Eigen::Index dim = Eigen::Index(1) << num_qubits;
  if (index < 0 || index >= dim) throw std::invalid_argument("basis index out of range");
  Vec a = Vec::Zero(dim);
  a(index) = 1.0;
  return Ket(std::move(a));
}

DensityMatrix::DensityMatrix(Mat entries, const Tolerances& tol) : m_(std::move(entries)) {
  qubits_ = qubit_count(m_.rows());
  check_hermitian(m_, tol.hermiticity, "density matrix");
  double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > tol.trace_one)
    throw std::invalid_argument("density matrix trace deviates from 1 by " + std::to_string(tr - 1.0));
  Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin < tol.min_eigenvalue)
    throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(lmin));
}

DensityMatrix DensityMatrix::pure(const Ket& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int num_qubits) {
  Eigen::Index dim = Eigen::Index(1) << num_qubits;
  return DensityMatrix(Mat::Identity(dim, dim) / static_cast<double>(dim));
}

UnitaryOp::UnitaryOp(Mat entries, const Tolerances& tol) : m_(std::move(entries)) {
  qubits_ = qubit_count(m_.rows());
  if (m_.rows() != m_.cols()) throw std::invalid_argument("unitary: not square");
  Mat dev = m_ * m_.adjoint() - Mat::Identity(m_.rows(), m_.cols());
  if (max_abs(dev) > tol.unitarity)
    throw std::invalid_argument("operator is not unitary within tolerance");
}

UnitaryOp UnitaryOp::identity(int num_qubits) {
  Eigen::Index dim = Eigen::Index(1) << num_qubits;
  return UnitaryOp(Mat::Identity(dim, dim));
}

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

} // namespace

Ket tensor(const Ket& a, const Ket& b) {
  Vec out(a.dim() * b.dim());
  for (Eigen::Index i = 0; i < a.dim(); ++i)
    out.segment(i * b.dim(), b.dim()) = a.amplitudes()(i) * b.amplitudes();
  return Ket(std::move(out));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.entries(), b.entries()));
}

UnitaryOp tensor(const UnitaryOp& a, const UnitaryOp& b) {
  return UnitaryOp(kron(a.entries(), b.entries()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  const int n = rho.num_qubits();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  for (size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= n) throw std::invalid_argument("partial_trace: qubit index out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw std::invalid_argument("partial_trace: keep indices must be strictly ascending");
  }
  std::vector<int> traced;
  for (int q = 0; q < n; ++q)
    if (!std::binary_search(keep.begin(), keep.end(), q)) traced.push_back(q);

  const int nk = static_cast<int>(keep.size());
  const int nt = static_cast<int>(traced.size());
  const int dk = 1 << nk, dt = 1 << nt;

  // full index from kept sub-index i and traced sub-index b
  auto full_index = [&](int i, int b) {
    int f = 0;
    for (int q = 0; q < nk; ++q) f |= bit_of(i, q, nk) << (n - 1 - keep[q]);
    for (int q = 0; q < nt; ++q) f |= bit_of(b, q, nt) << (n - 1 - traced[q]);
    return f;
  };

  Mat out = Mat::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      cplx s = 0.0;
      for (int b = 0; b < dt; ++b) s += rho.entries()(full_index(i, b), full_index(j, b));
      out(i, j) = s;
    }
  return DensityMatrix(std::move(out));
}

namespace {

std::vector<int> permutation_index_map(const std::vector<int>& new_to_old, int n) {
  if (static_cast<int>(new_to_old.size()) != n)
    throw std::invalid_argument("permute_qubits: permutation size mismatch");
  std::vector<bool> seen(n, false);
  for (int q : new_to_old) {
    if (q < 0 || q >= n || seen[q]) throw std::invalid_argument("permute_qubits: not a permutation");
    seen[q] = true;
  }
  const int dim = 1 << n;
  std::vector<int> old_index(dim);
  for (int b = 0; b < dim; ++b) {
    int ob = 0;
    for (int i = 0; i < n; ++i) ob |= bit_of(b, i, n) << (n - 1 - new_to_old[i]);
    old_index[b] = ob;
  }
  return old_index;
}

} // namespace

DensityMatrix permute_qubits(const DensityMatrix& rho, const std::vector<int>& new_to_old) {
  const int n = rho.num_qubits();
  auto old_index = permutation_index_map(new_to_old, n);
  const int dim = 1 << n;
  Mat out(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out(i, j) = rho.entries()(old_index[i], old_index[j]);
  return DensityMatrix(std::move(out));
}

Ket permute_qubits(const Ket& psi, const std::vector<int>& new_to_old) {
  const int n = psi.num_qubits();
  auto old_index = permutation_index_map(new_to_old, n);
  const int dim = 1 << n;
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out(i) = psi.amplitudes()(old_index[i]);
  return Ket(std::move(out));
}

DensityMatrix evolve(const DensityMatrix& rho, const UnitaryOp& u) {
  if (rho.dim() != u.dim()) throw std::invalid_argument("evolve: dimension mismatch");
  return DensityMatrix(u.entries() * rho.entries() * u.entries().adjoint());
}

Ket evolve(const Ket& psi, const UnitaryOp& u) {
  if (psi.dim() != u.dim()) throw std::invalid_argument("evolve: dimension mismatch");
  return Ket(u.entries() * psi.amplitudes());
}

ProjectionResult project_and_normalize(const DensityMatrix& rho, const Mat& projector,
                                       const Tolerances& tol) {
  if (projector.rows() != rho.dim() || projector.cols() != rho.dim())
    throw std::invalid_argument("project_and_normalize: dimension mismatch");
  check_hermitian(projector, tol.projector, "projector");
  if (max_abs(projector * projector - projector) > tol.projector)
    throw std::invalid_argument("projector is not idempotent within tolerance");

  Mat branch = projector * rho.entries() * projector.adjoint();
  double p = branch.trace().real();
  ProjectionResult out;
  out.probability = std::max(p, 0.0);
  if (p < tol.zero_probability) return out;
  out.state = DensityMatrix(branch / p);
  return out;
}

Mat matrix_sqrt_psd(const Mat& hermitian, double clamp) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian);
  if (es.info() != Eigen::Success) throw std::runtime_error("matrix_sqrt_psd: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -clamp)
      throw std::invalid_argument("matrix_sqrt_psd: eigenvalue " + std::to_string(ev(i)) +
                                  " below clamp tolerance");
    if (ev(i) < 0.0) ev(i) = 0.0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const double clamp = tols().sqrt_clamp;
  Mat root = matrix_sqrt_psd(rho.entries(), clamp);
  Mat inner = root * sigma.entries() * root;
  // Hermitian PSD up to roundoff; sum of square roots of its eigenvalues
  Eigen::SelfAdjointEigenSolver<Mat> es((inner + inner.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev > 0.0) s += std::sqrt(ev);
  }
  return std::min(s * s, 1.0);
}

double fidelity(const DensityMatrix& rho, const Ket& psi) {
  if (rho.dim() != psi.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  cplx v = (psi.amplitudes().adjoint() * rho.entries() * psi.amplitudes())(0);
  return std::clamp(v.real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  return (rho.entries() * rho.entries()).trace().real();
}

double sqrt_purity(const DensityMatrix& rho) { return std::sqrt(purity(rho)); }

double expectation(const DensityMatrix& rho, const Mat& obs, const Tolerances& tol) {
  if (obs.rows() != rho.dim() || obs.cols() != rho.dim())
    throw std::invalid_argument("expectation: dimension mismatch");
  check_hermitian(obs, tol.hermiticity, "observable");
  cplx v = (obs * rho.entries()).trace();
  if (std::abs(v.imag()) > tol.imag_residue)
    throw std::runtime_error("expectation: imaginary residue " + std::to_string(v.imag()));
  return v.real();
}

nlohmann::json density_matrix_to_json(const DensityMatrix& rho) {
  nlohmann::json entries = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rho.dim(); ++i)
    for (Eigen::Index j = 0; j < rho.dim(); ++j) {
      const cplx& c = rho.entries()(i, j);
      entries.push_back({c.real(), c.imag()});
    }
  return {{"dim", rho.dim()}, {"entries", std::move(entries)}};
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("entries"))
    throw std::invalid_argument("density matrix JSON needs dim and entries");
  Eigen::Index dim = j.at("dim").get<Eigen::Index>();
  const auto& entries = j.at("entries");
  if (!entries.is_array() || static_cast<Eigen::Index>(entries.size()) != dim * dim)
    throw std::invalid_argument("density matrix JSON: entries length must be dim^2");
  Mat m(dim, dim);
  Eigen::Index k = 0;
  for (const auto& e : entries) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("density matrix JSON: each entry is [re, im]");
    m(k / dim, k % dim) = cplx(e[0].get<double>(), e[1].get<double>());
    ++k;
  }
  return DensityMatrix(std::move(m));
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Mat pauli_i() { return Mat::Identity(2, 2); }

} // namespace ghzsim
