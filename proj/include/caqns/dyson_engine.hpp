#pragma once

#include <functional>
#include <vector>

#include "caqns/algebra.hpp"
#include "caqns/digital_control.hpp"
#include "caqns/noise_models.hpp"

namespace caqns {

// (−1)^{μ·π_E} exponent: dot product of the bar-assignment bits of slots 2..k with μ, mod 2.
int sign_function(const std::vector<int>& pi_e, const std::vector<int>& mu);

// Toggled operators of a control together with h̄ = −Õ^{-1} h̃ Õ for one observable.
class TensorContext {
 public:
  TensorContext(const DigitalControl& control, const Mat& toggled_obs);

  int nqubits() const { return nq_; }
  int windows() const { return L_; }
  const Mat& toggled_observable() const { return ot_; }

  // T = Σ_π (−1)^{μ·π_E} [h̄ product, reverse order] [h̃ product, slot order],
  // evaluated by the linear recursion Z_j = s_j h̄_j Z_{j−1} + Z_{j−1} h̃_j.
  Mat tensor(const SpectrumIndex& idx) const;

  // Same tensor by explicit enumeration of all 2^k bar/tilde assignments.
  Mat tensor_enumerated(const SpectrumIndex& idx) const;

  // (−i)^k Tr[T ρ Õ].
  cplx coefficient(const SpectrumIndex& idx, const Mat& rho) const;

 private:
  int nq_ = 1;
  int L_ = 1;
  Mat ot_;
  std::vector<Eigen::Matrix2cd> ht2_, hb2_;
  std::vector<Eigen::Matrix4cd> ht4_, hb4_;
  std::vector<Mat> ht_, hb_;
};

Mat control_tensor(const DigitalControl& control, const Mat& toggled_obs, const SpectrumIndex& idx);

// Affine form of an expectation: offset + Σ_j row_j S_j over the given indices.
struct AffineRow {
  cplx offset;
  std::vector<cplx> row;
};
AffineRow affine_row(const DigitalControl& control, const Mat& rho, const Mat& toggled_obs,
                     const std::vector<SpectrumIndex>& indices);

// Tr[ρ Õ] + Σ_{k=1..K} (−i)^k Σ Tr[T ρ Õ] S over the table entries of order ≤ K.
// The table is read in bound form: each entry stands for its whole symmetry class.
cplx expectation(const DigitalControl& control, const Mat& rho, const Mat& toggled_obs, const SpectrumTable& spectra,
                 int K);
cplx expectation(const DigitalControl& control, const PauliIndex& rho, const PauliIndex& obs,
                 const SpectrumTable& spectra, int K);

// Tr[D^(k) σ_r σ_γ] for a single qubit with Õ = σ_γ, computed from the frame filters
// F_u(n) by Pauli-coefficient expansion (structure constants only, no matrices).
cplx closed_form_trace(const DigitalControl& control, const SpectrumTable& spectra, int k, int gamma_axis,
                       int r_axis);

// Explicit first- and second-order trace formulas in terms of F_u(n) and S(n).
cplx explicit_trace(const DigitalControl& control, const SpectrumTable& spectra, int k, int gamma_axis, int r_axis);

}  // namespace caqns
