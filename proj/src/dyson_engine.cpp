#include "caqns/dyson_engine.hpp"

#include "caqns/errors.hpp"

namespace caqns {

int sign_function(const std::vector<int>& pi_e, const std::vector<int>& mu) {
  if (pi_e.size() != mu.size()) throw ValidationError("sign_function needs equal lengths");
  int s = 0;
  for (size_t j = 0; j < mu.size(); ++j) s ^= (pi_e[j] & mu[j] & 1);
  return s;
}

namespace {

template <class M>
M recursion(const std::vector<M>& ht, const std::vector<M>& hb, int L, const SpectrumIndex& idx) {
  M z = M::Identity();
  for (int j = 0; j < idx.order(); ++j) {
    const size_t slot = static_cast<size_t>(idx.q[j] * L + idx.n[j] - 1);
    const double s = idx.slot_mu(j) ? -1.0 : 1.0;
    z = (s * hb[slot] * z + z * ht[slot]).eval();
  }
  return z;
}

}  // namespace

TensorContext::TensorContext(const DigitalControl& control, const Mat& toggled_obs)
    : nq_(control.nqubits()), L_(control.windows()), ot_(toggled_obs) {
  const Eigen::Index d = Eigen::Index{1} << nq_;
  if (ot_.rows() != d || ot_.cols() != d) throw ValidationError("observable dimension does not match the control");
  const Mat inv = ot_.inverse();
  for (int q = 0; q < nq_; ++q)
    for (int n = 1; n <= L_; ++n) {
      const Mat& h = control.htilde(q, n);
      const Mat b = -inv * h * ot_;
      ht_.push_back(h);
      hb_.push_back(b);
      if (nq_ == 1) {
        ht2_.push_back(h);
        hb2_.push_back(b);
      } else {
        ht4_.push_back(h);
        hb4_.push_back(b);
      }
    }
}

Mat TensorContext::tensor(const SpectrumIndex& idx) const {
  idx.validate(L_, nq_);
  if (nq_ == 1) return recursion(ht2_, hb2_, L_, idx);
  return recursion(ht4_, hb4_, L_, idx);
}

Mat TensorContext::tensor_enumerated(const SpectrumIndex& idx) const {
  idx.validate(L_, nq_);
  const int k = idx.order();
  const Eigen::Index d = Eigen::Index{1} << nq_;
  Mat total = Mat::Zero(d, d);
  for (std::uint64_t pi = 0; pi < (1ULL << k); ++pi) {
    // Bit j of pi set: slot j sits in the h̄ string.
    std::vector<int> pi_e(k - 1);
    for (int j = 1; j < k; ++j) pi_e[j - 1] = (pi >> j) & 1u;
    Mat bar = Mat::Identity(d, d), tilde = Mat::Identity(d, d);
    for (int j = 0; j < k; ++j) {
      const size_t slot = static_cast<size_t>(idx.q[j] * L_ + idx.n[j] - 1);
      if ((pi >> j) & 1u)
        bar = hb_[slot] * bar;
      else
        tilde = tilde * ht_[slot];
    }
    const double s = sign_function(pi_e, idx.mu) ? -1.0 : 1.0;
    total += s * bar * tilde;
  }
  return total;
}

namespace {

cplx minus_i_pow(int k) {
  static const cplx table[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
  return table[k % 4];
}

}  // namespace

cplx TensorContext::coefficient(const SpectrumIndex& idx, const Mat& rho) const {
  return minus_i_pow(idx.order()) * (tensor(idx) * rho * ot_).trace();
}

Mat control_tensor(const DigitalControl& control, const Mat& toggled_obs, const SpectrumIndex& idx) {
  return TensorContext(control, toggled_obs).tensor(idx);
}

AffineRow affine_row(const DigitalControl& control, const Mat& rho, const Mat& toggled_obs,
                     const std::vector<SpectrumIndex>& indices) {
  const TensorContext ctx(control, toggled_obs);
  AffineRow out;
  out.offset = (rho * toggled_obs).trace();
  out.row.reserve(indices.size());
  for (const auto& idx : indices) out.row.push_back(ctx.coefficient(idx, rho));
  return out;
}

cplx expectation(const DigitalControl& control, const Mat& rho, const Mat& toggled_obs, const SpectrumTable& spectra,
                 int K) {
  if (spectra.grid.L != control.windows()) throw ValidationError("spectrum table and control use different grids");
  if (spectra.nqubits != control.nqubits()) throw ValidationError("spectrum table and control differ in qubit count");
  const int saturation = 2 * control.nqubits() * control.windows();
  if (!spectra.entries.empty() && K > spectra.max_order() && spectra.max_order() < saturation)
    throw ValidationError("truncation order exceeds the spectrum table coverage");
  const TensorContext ctx(control, toggled_obs);
  cplx acc = (rho * toggled_obs).trace();
  for (const auto& [idx, entry] : spectra.entries) {
    if (idx.order() > K || entry.value == cplx(0)) continue;
    acc += ctx.coefficient(idx, rho) * entry.value;
  }
  return acc;
}

cplx expectation(const DigitalControl& control, const PauliIndex& rho, const PauliIndex& obs,
                 const SpectrumTable& spectra, int K) {
  return expectation(control, pauli_matrix(rho), control.toggled_observable(pauli_matrix(obs)), spectra, K);
}

// ---------------------------------------------------------------- closed forms

namespace {

void check_single(const DigitalControl& control, int gamma_axis, int r_axis) {
  if (control.nqubits() != 1) throw ValidationError("closed-form traces are single-qubit only");
  if (gamma_axis < 1 || gamma_axis > 3) throw ValidationError("observable axis must be x, y or z");
  if (r_axis < 0 || r_axis > 3) throw ValidationError("state axis must be 0, x, y or z");
}

// Levi-Civita symbol on {1,2,3}.
double epsilon(int a, int b, int c) {
  if (a == b || b == c || a == c || a == 0 || b == 0 || c == 0) return 0.0;
  return ((b - a + 3) % 3 == 1) ? 1.0 : -1.0;
}

// 2 Tr-normalized trace of σ_c σ_r σ_γ via structure constants.
cplx pauli_triple_trace(int c, int r, int g) {
  const auto [p1, d] = pauli_product(1, c, r);
  const auto [p2, e] = pauli_product(1, d, g);
  return e == 0 ? 2.0 * p1 * p2 : cplx(0);
}

}  // namespace

cplx closed_form_trace(const DigitalControl& control, const SpectrumTable& spectra, int k, int gamma_axis,
                       int r_axis) {
  check_single(control, gamma_axis, r_axis);
  if (k < 1 || k > 4) throw ValidationError("closed-form traces cover orders 1..4");
  const Eigen::MatrixXd F = control.frame_filter(0);
  // f_u: h̄ = Σ_u f_u F_u σ_u for Õ = σ_γ.
  double f[4];
  for (int u = 0; u < 4; ++u) f[u] = conjugation_factor(1, u, u, pauli_matrix(1, gamma_axis)).real();
  cplx total = 0.0;
  std::vector<int> us(k);
  for (const auto& [idx, entry] : spectra.entries) {
    if (idx.order() != k) continue;
    cplx idx_sum = 0.0;
    int n_strings = 1;
    for (int j = 0; j < k; ++j) n_strings *= 3;
    for (std::uint64_t pi = 0; pi < (1ULL << k); ++pi) {
      double sign = 1.0;
      for (int j = 1; j < k; ++j)
        if (((pi >> j) & 1u) && idx.mu[j - 1]) sign = -sign;
      for (int code = 0; code < n_strings; ++code) {
        int rest = code;
        double coeff = sign;
        for (int j = 0; j < k; ++j) {
          us[j] = 1 + rest % 3;
          rest /= 3;
          coeff *= F(idx.n[j] - 1, us[j]);
          if ((pi >> j) & 1u) coeff *= f[us[j]];
        }
        if (coeff == 0.0) continue;
        // Bar slots in reverse order, then tilde slots in order.
        cplx phase = 1.0;
        int acc = 0;
        for (int j = k - 1; j >= 0; --j)
          if ((pi >> j) & 1u) {
            const auto [p, c] = pauli_product(1, acc, us[j]);
            phase *= p;
            acc = c;
          }
        for (int j = 0; j < k; ++j)
          if (!((pi >> j) & 1u)) {
            const auto [p, c] = pauli_product(1, acc, us[j]);
            phase *= p;
            acc = c;
          }
        idx_sum += coeff * phase * pauli_triple_trace(acc, r_axis, gamma_axis);
      }
    }
    static const cplx mi[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
    total += mi[k % 4] * idx_sum * entry.value;
  }
  return total;
}

cplx explicit_trace(const DigitalControl& control, const SpectrumTable& spectra, int k, int gamma_axis, int r_axis) {
  check_single(control, gamma_axis, r_axis);
  if (k != 1 && k != 2) throw ValidationError("explicit traces are available for orders 1 and 2");
  const Eigen::MatrixXd F = control.frame_filter(0);
  const int g = gamma_axis, r = r_axis;
  cplx total = 0.0;
  for (const auto& [idx, entry] : spectra.entries) {
    if (idx.order() != k) continue;
    const cplx S = entry.value;
    if (k == 1) {
      // 4 Σ_β ε(β, r, γ) F_β(n) S(n).
      const int n = idx.n[0] - 1;
      for (int b = 1; b <= 3; ++b) total += 4.0 * epsilon(b, r, g) * F(n, b) * S;
      continue;
    }
    const int n1 = idx.n[0] - 1, n2 = idx.n[1] - 1;
    if (r == 0) {
      // -8i Σ_{u,v} ε(u, v, γ) F_u(n1) F_v(n2) S^(1)(n1, n2).
      if (idx.mu[0] != 1) continue;
      for (int u = 1; u <= 3; ++u)
        for (int v = 1; v <= 3; ++v) total += cplx(0, -8) * epsilon(u, v, g) * F(n1, u) * F(n2, v) * S;
    } else if (r == g) {
      // -8 Σ_{u≠γ} F_u(n1) F_u(n2) S^(0)(n1, n2).
      if (idx.mu[0] != 0) continue;
      for (int u = 1; u <= 3; ++u)
        if (u != g) total += -8.0 * F(n1, u) * F(n2, u) * S;
    } else {
      // 8 F_r(n1) F_γ(n2) S^(0)(n1, n2).
      if (idx.mu[0] != 0) continue;
      total += 8.0 * F(n1, r) * F(n2, g) * S;
    }
  }
  return total;
}

}  // namespace caqns
