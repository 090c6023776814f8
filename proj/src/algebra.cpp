#include "caqns/algebra.hpp"

#include <array>
#include <cctype>
#include <map>
#include <mutex>

#include "caqns/errors.hpp"

namespace caqns {

namespace {

const char kDigits[] = "IXYZ";

Mat single_pauli(int digit) {
  Mat m = Mat::Zero(2, 2);
  const cplx i(0, 1);
  switch (digit) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw ValidationError("pauli digit out of range");
  }
  return m;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_nqubits(int nqubits) {
  if (nqubits != 1 && nqubits != 2) throw ValidationError("only one or two qubits are supported");
}

const std::vector<Mat>& basis(int nqubits) {
  static const std::array<std::vector<Mat>, 2> cache = [] {
    std::array<std::vector<Mat>, 2> out;
    for (int c = 0; c < 4; ++c) out[0].push_back(single_pauli(c));
    for (int c = 0; c < 16; ++c) out[1].push_back(kron(single_pauli(c / 4), single_pauli(c % 4)));
    return out;
  }();
  check_nqubits(nqubits);
  return cache[nqubits - 1];
}

}  // namespace

PauliIndex::PauliIndex(int nqubits, int code) : nqubits_(nqubits), code_(code) {
  check_nqubits(nqubits);
  if (code < 0 || code >= (1 << (2 * nqubits))) throw ValidationError("pauli code out of range");
}

PauliIndex PauliIndex::parse(const std::string& label, int nqubits) {
  check_nqubits(nqubits);
  std::string s;
  for (char c : label)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (!s.empty() && (s[0] == 'L' || s.rfind("Lambda", 0) == 0)) {
    const std::string num = s.substr(s[1] == 'a' ? 6 : 1);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
      throw ValidationError("bad pauli label '" + label + "'");
    return PauliIndex(nqubits, std::stoi(num));
  }
  if (static_cast<int>(s.size()) != nqubits) throw ValidationError("bad pauli label '" + label + "'");
  int code = 0;
  for (char c : s) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    int d = -1;
    for (int k = 0; k < 4; ++k)
      if (kDigits[k] == u) d = k;
    if (u == '0') d = 0;
    if (d < 0) throw ValidationError("bad pauli label '" + label + "'");
    code = 4 * code + d;
  }
  return PauliIndex(nqubits, code);
}

int PauliIndex::digit(int q) const {
  if (q < 0 || q >= nqubits_) throw ValidationError("qubit out of range");
  return nqubits_ == 1 ? code_ : (q == 0 ? code_ / 4 : code_ % 4);
}

std::string PauliIndex::label() const {
  std::string s;
  for (int q = 0; q < nqubits_; ++q) s += kDigits[digit(q)];
  return s;
}

const Mat& pauli_matrix(const PauliIndex& p) { return basis(p.nqubits())[p.code()]; }

Mat pauli_matrix(int nqubits, int code) { return pauli_matrix(PauliIndex(nqubits, code)); }

Mat embed_single(int nqubits, int q, int digit) {
  if (nqubits == 1) return pauli_matrix(1, digit);
  return pauli_matrix(2, q == 0 ? 4 * digit : digit);
}

std::pair<cplx, int> pauli_product(int nqubits, int a, int b) {
  // Single-qubit table: σ_a σ_b = δ_ab I + i ε_abc σ_c.
  auto one = [](int x, int y) -> std::pair<cplx, int> {
    if (x == 0) return {1.0, y};
    if (y == 0) return {1.0, x};
    if (x == y) return {1.0, 0};
    const int z = 6 - x - y;
    const bool cyclic = (y - x + 3) % 3 == 1;
    return {cplx(0, cyclic ? 1 : -1), z};
  };
  check_nqubits(nqubits);
  if (nqubits == 1) return one(a, b);
  const auto hi = one(a / 4, b / 4);
  const auto lo = one(a % 4, b % 4);
  return {hi.first * lo.first, 4 * hi.second + lo.second};
}

bool paulis_commute(int nqubits, int a, int b) {
  return pauli_product(nqubits, a, b).first == pauli_product(nqubits, b, a).first;
}

cplx conjugation_factor(int nqubits, int u, int c, const Mat& obs) {
  const auto& b = basis(nqubits);
  const double d = static_cast<double>(1 << nqubits);
  return -(obs.inverse() * b[u] * obs * b[c]).trace() / d;
}

namespace {

// Linear map χ -> R, flattened as R(a,b) and χ(u,v) in row-major order.
const Eigen::PartialPivLU<Mat>& chi_map(int nqubits) {
  static std::mutex mu;
  static std::map<int, Eigen::PartialPivLU<Mat>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nqubits);
  if (it != cache.end()) return it->second;
  const auto& b = basis(nqubits);
  const int n = static_cast<int>(b.size());
  const double d = static_cast<double>(1 << nqubits);
  Mat m(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int bb = 0; bb < n; ++bb)
      for (int u = 0; u < n; ++u) {
        const Mat au = b[a] * b[u] * b[bb];
        for (int v = 0; v < n; ++v) m(a * n + bb, u * n + v) = (au * b[v]).trace() / d;
      }
  return cache.emplace(nqubits, Eigen::PartialPivLU<Mat>(m)).first->second;
}

int nqubits_of(Eigen::Index n) {
  if (n == 4) return 1;
  if (n == 16) return 2;
  throw ValidationError("process matrix must be 4x4 or 16x16");
}

}  // namespace

Mat ptm_to_chi(const Ptm& ptm) {
  const int nq = nqubits_of(ptm.rows());
  const Eigen::Index n = ptm.rows();
  Vec r(n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) r(a * n + b) = ptm(a, b);
  const Vec x = chi_map(nq).solve(r);
  Mat chi(n, n);
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < n; ++v) chi(u, v) = x(u * n + v);
  return chi;
}

Ptm chi_to_ptm(const Mat& chi) {
  const int nq = nqubits_of(chi.rows());
  const auto& b = basis(nq);
  const Eigen::Index n = chi.rows();
  const double d = static_cast<double>(1 << nq);
  Ptm out(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Mat image = Mat::Zero(b[0].rows(), b[0].cols());
    for (Eigen::Index u = 0; u < n; ++u)
      for (Eigen::Index v = 0; v < n; ++v)
        if (chi(u, v) != cplx(0)) image += chi(u, v) * b[u] * b[col] * b[v];
    for (Eigen::Index row = 0; row < n; ++row) out(row, col) = ((b[row] * image).trace() / d).real();
  }
  return out;
}

Mat unitary_chi(const Mat& u) {
  const int nq = u.rows() == 2 ? 1 : 2;
  const auto& b = basis(nq);
  const double d = static_cast<double>(u.rows());
  Vec c(b.size());
  for (size_t k = 0; k < b.size(); ++k) c(k) = (b[k] * u).trace() / d;
  return c * c.adjoint();
}

Ptm unitary_ptm(const Mat& u) {
  const int nq = u.rows() == 2 ? 1 : 2;
  const auto& b = basis(nq);
  const Eigen::Index n = static_cast<Eigen::Index>(b.size());
  const double d = static_cast<double>(u.rows());
  Ptm out(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const Mat image = u * b[col] * u.adjoint();
    for (Eigen::Index row = 0; row < n; ++row) out(row, col) = ((b[row] * image).trace() / d).real();
  }
  return out;
}

double process_fidelity(const Mat& chi, const Mat& chi_ideal) {
  return (chi * chi_ideal).trace().real();
}

}  // namespace caqns
