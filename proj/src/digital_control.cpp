#include "caqns/digital_control.hpp"

#include <cmath>

#include "caqns/errors.hpp"

namespace caqns {

namespace {

Mat generator_exp(double angle, const Mat& unit_generator) {
  // unit_generator squares to the identity.
  const Eigen::Index d = unit_generator.rows();
  return std::cos(angle) * Mat::Identity(d, d) - cplx(0, std::sin(angle)) * unit_generator;
}

Mat axis_generator(double alpha, double phi) {
  return std::cos(phi) * std::sin(alpha) * pauli_matrix(1, 1) + std::cos(phi) * std::cos(alpha) * pauli_matrix(1, 2) +
         std::sin(phi) * pauli_matrix(1, 3);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

Mat single_axis_rotation(double theta, double alpha, double phi) {
  return generator_exp(theta, axis_generator(alpha, phi));
}

Mat kak_propagator(const KakParams& p) {
  const Mat left = kron(single_axis_rotation(p[0], p[1], p[2]), single_axis_rotation(p[3], p[4], p[5]));
  const Mat right = kron(single_axis_rotation(p[9], p[10], p[11]), single_axis_rotation(p[12], p[13], p[14]));
  const double big = p[6], varrho = p[7], omega = p[8];
  const double cx = std::cos(varrho) * std::sin(omega);
  const double cy = std::cos(varrho) * std::cos(omega);
  const double cz = std::sin(varrho);
  // XX, YY and ZZ commute, so the entangling factor is a product of exponentials.
  const Mat core = generator_exp(big * cx, pauli_matrix(2, 5)) * generator_exp(big * cy, pauli_matrix(2, 10)) *
                   generator_exp(big * cz, pauli_matrix(2, 15));
  return left * core * right;
}

DigitalControl DigitalControl::single_qubit(const std::vector<Eigen::Vector3d>& y, double tolerance) {
  if (y.empty()) throw ValidationError("control needs at least one window");
  DigitalControl c;
  c.nqubits_ = 1;
  c.h_.resize(1);
  for (const auto& v : y) {
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > tolerance) throw ValidationError("switching vector is not a unit vector");
    const Eigen::Vector3d u = v / norm;
    c.y_.push_back(u);
    c.h_[0].push_back(u.x() * pauli_matrix(1, 1) + u.y() * pauli_matrix(1, 2) + u.z() * pauli_matrix(1, 3));
  }
  return c;
}

DigitalControl DigitalControl::two_qubit_kak(const std::vector<KakParams>& params) {
  if (params.empty()) throw ValidationError("control needs at least one window");
  DigitalControl c;
  c.nqubits_ = 2;
  c.kak_ = params;
  c.h_.resize(2);
  for (const auto& p : params) {
    for (double x : p)
      if (!std::isfinite(x)) throw ValidationError("KAK parameters must be finite");
    const Mat u = kak_propagator(p);
    for (int q = 0; q < 2; ++q) c.h_[q].push_back(u.adjoint() * embed_single(2, q, 3) * u);
  }
  return c;
}

DigitalControl DigitalControl::from_frames(int nqubits, const std::vector<Mat>& frames) {
  if (frames.empty()) throw ValidationError("control needs at least one window");
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  DigitalControl c;
  c.nqubits_ = nqubits;
  c.h_.resize(nqubits);
  for (const auto& u : frames) {
    if (u.rows() != d || u.cols() != d) throw ValidationError("frame dimension does not match the qubit count");
    if (!(u.adjoint() * u).isIdentity(1e-9)) throw ValidationError("frame is not unitary");
    for (int q = 0; q < nqubits; ++q) c.h_[q].push_back(u.adjoint() * embed_single(nqubits, q, 3) * u);
  }
  return c;
}

DigitalControl DigitalControl::identity(int nqubits, int windows) {
  if (nqubits == 1) return single_qubit(std::vector<Eigen::Vector3d>(windows, Eigen::Vector3d(0, 0, 1)));
  KakParams zero{};
  return two_qubit_kak(std::vector<KakParams>(windows, zero));
}

Mat DigitalControl::propagator(int n) const {
  if (!is_kak()) throw ValidationError("switching-vector controls carry no propagator");
  return kak_propagator(kak_.at(n - 1));
}

Mat DigitalControl::toggled_observable(const Mat& obs) const { return obs; }

Eigen::MatrixXd DigitalControl::frame_filter(int q) const {
  const int d2 = 1 << (2 * nqubits_);
  const double d = static_cast<double>(1 << nqubits_);
  Eigen::MatrixXd f(windows(), d2);
  for (int n = 1; n <= windows(); ++n)
    for (int u = 0; u < d2; ++u) f(n - 1, u) = ((htilde(q, n) * pauli_matrix(nqubits_, u)).trace() / d).real();
  return f;
}

void to_json(nlohmann::json& j, const DigitalControl& c) {
  if (c.is_kak()) {
    j = nlohmann::json{{"kak", c.kak_params()}};
    return;
  }
  nlohmann::json w = nlohmann::json::array();
  for (const auto& v : c.switching_vectors()) w.push_back({v.x(), v.y(), v.z()});
  j = nlohmann::json{{"windows", w}};
}

DigitalControl control_from_json(const nlohmann::json& j, int nqubits) {
  if (nqubits == 2) {
    if (!j.contains("kak")) throw ValidationError("two-qubit control needs 'kak' parameters");
    std::vector<KakParams> params;
    for (const auto& row : j.at("kak")) {
      if (!row.is_array() || row.size() != 15) throw ValidationError("each KAK row needs 15 entries");
      KakParams p{};
      for (size_t i = 0; i < 15; ++i) p[i] = row.at(i).get<double>();
      params.push_back(p);
    }
    return DigitalControl::two_qubit_kak(params);
  }
  if (!j.contains("windows")) throw ValidationError("single-qubit control needs 'windows' switching vectors");
  std::vector<Eigen::Vector3d> y;
  for (const auto& row : j.at("windows")) {
    if (!row.is_array() || row.size() != 3) throw ValidationError("each switching vector needs 3 entries");
    y.emplace_back(row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>());
  }
  return DigitalControl::single_qubit(y);
}

}  // namespace caqns
