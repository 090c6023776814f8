#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "caqns/algebra.hpp"
#include "caqns/window_grid.hpp"

namespace caqns {

// Per-window KAK parameters in the order
// θA αA φA θB αB φB Θ ϱ ω θ'A α'A φ'A θ'B α'B φ'B.
using KakParams = std::array<double, 15>;

// exp(-iθ[cosφ sinα X + cosφ cosα Y + sinφ Z]).
Mat single_axis_rotation(double theta, double alpha, double phi);

// Two-qubit unitary from KAK parameters.
Mat kak_propagator(const KakParams& p);

// Piecewise-constant control on a window grid. For one qubit the toggling-frame
// σ_z is given directly by switching vectors y(n); for two qubits it follows from
// the control propagator U_0(nτ) of each window: h_q(n) = U^† σ_z^[q] U.
class DigitalControl {
 public:
  static DigitalControl single_qubit(const std::vector<Eigen::Vector3d>& y, double tolerance = 1e-3);
  static DigitalControl two_qubit_kak(const std::vector<KakParams>& params);
  static DigitalControl identity(int nqubits, int windows);
  // Arbitrary per-window frame unitaries: h_q(n) = U_n^† σ_z^[q] U_n.
  static DigitalControl from_frames(int nqubits, const std::vector<Mat>& frames);

  int nqubits() const { return nqubits_; }
  int windows() const { return static_cast<int>(h_.empty() ? 0 : h_[0].size()); }
  bool is_kak() const { return !kak_.empty(); }
  const std::vector<Eigen::Vector3d>& switching_vectors() const { return y_; }
  const std::vector<KakParams>& kak_params() const { return kak_; }

  // Toggling-frame σ_z of qubit q in window n (1-based).
  const Mat& htilde(int q, int n) const { return h_.at(q).at(n - 1); }

  // Control propagator at the end of window n (KAK controls only).
  Mat propagator(int n) const;

  // Readout observable in the toggling frame. A final gate U_0(T)^† before measurement
  // undoes the last frame, so Õ = O for every control.
  Mat toggled_observable(const Mat& obs) const;

  // F(q, u, n) = (1/d) Tr[h_q(n) Λ_u] as an (L x d^2) matrix for qubit q.
  Eigen::MatrixXd frame_filter(int q) const;

 private:
  int nqubits_ = 1;
  std::vector<Eigen::Vector3d> y_;
  std::vector<KakParams> kak_;
  std::vector<std::vector<Mat>> h_;  // [q][n-1]
};

void to_json(nlohmann::json& j, const DigitalControl& c);
DigitalControl control_from_json(const nlohmann::json& j, int nqubits);

}  // namespace caqns
