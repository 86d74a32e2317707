#include "ghzsim/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace ghzsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
} // namespace

IonOutcome IonOutcome::from_index(int idx) {
  if (idx < 0 || idx > 7) throw std::invalid_argument("ion outcome index out of range");
  return IonOutcome{{(idx >> 2) & 1, (idx >> 1) & 1, idx & 1}};
}

IonOutcome IonOutcome::parse(const std::string& s) {
  if (s.size() != 3) throw std::invalid_argument("ion outcome must have three characters");
  IonOutcome o;
  for (int i = 0; i < 3; ++i) {
    if (s[i] == 'd')
      o.bits[i] = 0;
    else if (s[i] == 'u')
      o.bits[i] = 1;
    else
      throw std::invalid_argument("ion outcome characters must be d or u");
  }
  return o;
}

std::string IonOutcome::str() const {
  std::string s(3, 'd');
  for (int i = 0; i < 3; ++i)
    if (bits[i]) s[i] = 'u';
  return s;
}

GhzLabel GhzLabel::from_bits(int j, int k, int sign) {
  if ((j != 0 && j != 1) || (k != 0 && k != 1) || (sign != 1 && sign != -1))
    throw std::invalid_argument("bad GHZ label");
  return GhzLabel{2 * j + k + 1, sign};
}

std::string GhzLabel::str() const {
  return "ghz" + std::to_string(index) + (sign > 0 ? "+" : "-");
}

GhzLabel label_for_outcome(const IonOutcome& o) {
  int l = o.bits[0], m = o.bits[1], n = o.bits[2];
  int j = l ? 1 - m : m;
  int k = l ? 1 - n : n;
  int sign = ((l + m + n) % 2 == 1) ? +1 : -1;
  return GhzLabel::from_bits(j, k, sign);
}

IonOutcome outcome_for_label(const GhzLabel& g) {
  for (int idx = 0; idx < 8; ++idx) {
    IonOutcome o = IonOutcome::from_index(idx);
    if (label_for_outcome(o) == g) return o;
  }
  throw std::logic_error("unreachable: GHZ label bijection");
}

Ket ghz_ket(const GhzLabel& l) {
  Vec a = Vec::Zero(8);
  int lo = (l.j() << 1) | l.k();
  int hi = 4 | ((1 - l.j()) << 1) | (1 - l.k());
  a(lo) = kInvSqrt2;
  a(hi) = l.sign * kInvSqrt2;
  return Ket(std::move(a));
}

DensityMatrix make_bell() {
  Vec a = Vec::Zero(4);
  a(0) = kInvSqrt2;              // |down, A>
  a(3) = cplx(0, -kInvSqrt2);    // -i |up, D>
  return DensityMatrix::pure(Ket(std::move(a)));
}

DensityMatrix make_werner(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("werner p must lie in [0, 1]");
  Mat m = p * make_bell().entries() + (1.0 - p) * Mat::Identity(4, 4) / 4.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix make_ion_photon(const Mat& measured, Frame frame) {
  return photon_to_logical(DensityMatrix(measured), frame);
}

DensityMatrix make_ion_photon(const nlohmann::json& j) {
  Frame frame = Frame::logical;
  if (j.contains("frame")) frame = frame_from_string(j.at("frame").get<std::string>());
  return photon_to_logical(density_matrix_from_json(j), frame);
}

UnitaryOp ms_gate() {
  Mat x = pauli_x(), id = pauli_i();
  auto kron = [](const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  };
  Mat h = kron(kron(x, x), id) + kron(kron(x, id), x) + kron(kron(id, x), x);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Vec phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(cplx(0, -kPi / 4 * es.eigenvalues()(i)));
  return UnitaryOp(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
}

UnitaryOp collective_rotation() {
  // exp(-i pi/4 X) = (I - i X)/sqrt(2)
  Mat u = (pauli_i() - cplx(0, 1) * pauli_x()) * kInvSqrt2;
  UnitaryOp u1(std::move(u));
  return tensor(tensor(u1, u1), u1);
}

ConditionalStateSet ghz_projection_table(const DensityMatrix& pair1, const DensityMatrix& pair2,
                                         const DensityMatrix& pair3) {
  for (const DensityMatrix* p : {&pair1, &pair2, &pair3})
    if (p->dim() != 4) throw std::invalid_argument("ghz_projection_table expects two-qubit pairs");

  // tensor order (ion1, photon1, ion2, photon2, ion3, photon3), then reorder
  // to (ion1, ion2, ion3, photon1, photon2, photon3)
  DensityMatrix rho = tensor(tensor(pair1, pair2), pair3);
  rho = permute_qubits(rho, {0, 2, 4, 1, 3, 5});

  UnitaryOp v = UnitaryOp(collective_rotation().entries() * ms_gate().entries());
  UnitaryOp full = tensor(v, UnitaryOp::identity(3));
  rho = evolve(rho, full);

  ConditionalStateSet set;
  for (int idx = 0; idx < 8; ++idx) {
    Mat proj = Mat::Zero(64, 64);
    proj.block(idx * 8, idx * 8, 8, 8) = Mat::Identity(8, 8);
    ProjectionResult res = project_and_normalize(rho, proj);
    ConditionalBranch& br = set.branches[idx];
    br.probability = res.probability;
    br.defined = res.state.has_value();
    if (br.defined) br.state = partial_trace(*res.state, {3, 4, 5});
  }
  return set;
}

char pauli_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

Mat pauli_matrix(Pauli p) {
  switch (p) {
    case Pauli::I: return pauli_i();
    case Pauli::X: return pauli_x();
    case Pauli::Y: return pauli_y();
    case Pauli::Z: return pauli_z();
  }
  throw std::logic_error("bad Pauli");
}

std::array<Pauli, 3> rsp_correction(const IonOutcome& outcome, const GhzLabel& target) {
  GhzLabel cur = label_for_outcome(outcome);
  std::array<Pauli, 3> ops{Pauli::I, Pauli::I, Pauli::I};
  if (cur.sign != target.sign) ops[0] = Pauli::Z;
  if (cur.j() != target.j()) ops[1] = Pauli::X;
  if (cur.k() != target.k()) ops[2] = Pauli::X;
  return ops;
}

nlohmann::json conditional_set_to_json(const ConditionalStateSet& set) {
  nlohmann::json j = nlohmann::json::object();
  for (int idx = 0; idx < 8; ++idx) {
    const ConditionalBranch& br = set.branches[idx];
    nlohmann::json entry = {{"probability", br.probability}};
    if (br.defined) entry["state"] = density_matrix_to_json(*br.state);
    j[IonOutcome::from_index(idx).str()] = std::move(entry);
  }
  return j;
}

ConditionalStateSet conditional_set_from_json(const nlohmann::json& j) {
  ConditionalStateSet set;
  for (int idx = 0; idx < 8; ++idx) {
    const std::string key = IonOutcome::from_index(idx).str();
    if (!j.contains(key)) throw std::invalid_argument("conditional set JSON misses outcome " + key);
    const auto& entry = j.at(key);
    ConditionalBranch& br = set.branches[idx];
    br.probability = entry.at("probability").get<double>();
    br.defined = entry.contains("state");
    if (br.defined) br.state = density_matrix_from_json(entry.at("state"));
  }
  return set;
}

} // namespace ghzsim
