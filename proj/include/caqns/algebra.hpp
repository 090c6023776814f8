#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace caqns {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Element of the normalized Pauli basis on one or two qubits.
// For two qubits the code is 4*a + b with a the digit of qubit A (left factor),
// so codes 1..15 enumerate II-free products in I,X,Y,Z lexicographic order.
class PauliIndex {
 public:
  PauliIndex() = default;
  PauliIndex(int nqubits, int code);

  static PauliIndex parse(const std::string& label, int nqubits);

  int nqubits() const { return nqubits_; }
  int code() const { return code_; }
  int dim() const { return 1 << nqubits_; }
  int digit(int q) const;  // 0..3 on qubit q (0 = A)
  bool is_identity() const { return code_ == 0; }
  std::string label() const;  // "Z", "XY", ...

  bool operator==(const PauliIndex& o) const { return nqubits_ == o.nqubits_ && code_ == o.code_; }

 private:
  int nqubits_ = 1;
  int code_ = 0;
};

const Mat& pauli_matrix(const PauliIndex& p);
Mat pauli_matrix(int nqubits, int code);

// Single-qubit Pauli on qubit q embedded in an nqubits register.
Mat embed_single(int nqubits, int q, int digit);

// Returns (phase, code) with Λ_a Λ_b = phase Λ_code.
std::pair<cplx, int> pauli_product(int nqubits, int a, int b);

// True when [Λ_a, Λ_b] = 0.
bool paulis_commute(int nqubits, int a, int b);

// f_u(c) = -(1/d) Tr[O^-1 Λ_u O Λ_c].
cplx conjugation_factor(int nqubits, int u, int c, const Mat& obs);

// Pauli transfer matrix R_{v,u} = (1/d) Tr[Λ_v E(Λ_u)].
using Ptm = Eigen::MatrixXd;

// Chi matrix defined by E(ρ) = Σ χ_{uv} Λ_u ρ Λ_v.
Mat ptm_to_chi(const Ptm& ptm);
Ptm chi_to_ptm(const Mat& chi);

// Chi matrix and PTM of a unitary channel ρ -> U ρ U^dagger.
Mat unitary_chi(const Mat& u);
Ptm unitary_ptm(const Mat& u);

// Re Tr[χ χ_ideal].
double process_fidelity(const Mat& chi, const Mat& chi_ideal);

}  // namespace caqns
