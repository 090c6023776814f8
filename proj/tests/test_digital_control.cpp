#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "caqns/digital_control.hpp"
#include "caqns/errors.hpp"

using namespace caqns;

namespace {

KakParams random_kak(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  KakParams p;
  for (double& x : p) x = u(rng);
  return p;
}

}  // namespace

TEST_CASE("window grid") {
  WindowGrid g(4, 4.0);
  CHECK(g.tau() == 1.0);
  CHECK(g.lower(1) == 0.0);
  CHECK(g.upper(4) == 4.0);
  auto inside = [&](int n, double t) { return g.lower(n) <= t && t < g.upper(n); };
  CHECK(inside(1, 0.5));
  CHECK_FALSE(inside(1, 1.0));
  for (double t = 0.0; t < 4.0; t += 0.37) {
    int hits = 0;
    for (int n = 1; n <= 4; ++n) hits += inside(n, t);
    CHECK(hits == 1);
  }
  CHECK_THROWS_AS(WindowGrid(0, 1.0), ValidationError);
  CHECK_THROWS_AS(WindowGrid(2, 0.0), ValidationError);
}

TEST_CASE("kak propagator examples") {
  KakParams zero{};
  CHECK((kak_propagator(zero) - Mat::Identity(4, 4)).norm() < 1e-14);
  KakParams zz{};
  zz[6] = std::numbers::pi / 4;
  zz[7] = std::numbers::pi / 2;
  const Mat expect = std::cos(std::numbers::pi / 4) * Mat::Identity(4, 4) -
                     cplx(0, std::sin(std::numbers::pi / 4)) * pauli_matrix(2, 15);
  CHECK((kak_propagator(zz) - expect).norm() < 1e-12);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const Mat u = kak_propagator(random_kak(rng));
    CHECK((u * u.adjoint() - Mat::Identity(4, 4)).norm() < 1e-12);
  }
}

TEST_CASE("single qubit toggled paulis") {
  const DigitalControl id = DigitalControl::identity(1, 3);
  for (int n = 1; n <= 3; ++n) CHECK((id.htilde(0, n) - pauli_matrix(1, 3)).norm() < 1e-15);
  const DigitalControl x = DigitalControl::single_qubit({{1, 0, 0}, {0, std::sqrt(0.5), std::sqrt(0.5)}});
  CHECK((x.htilde(0, 1) - pauli_matrix(1, 1)).norm() < 1e-15);
  const Eigen::MatrixXd f = x.frame_filter(0);
  CHECK(f(0, 1) == doctest::Approx(1.0));
  CHECK(f(1, 2) == doctest::Approx(std::sqrt(0.5)));
  for (int n = 0; n < 2; ++n) CHECK(f.row(n).squaredNorm() == doctest::Approx(1.0));
  // The switching function rebuilt from the filter equals the toggled Pauli.
  for (int n = 1; n <= 2; ++n) {
    Mat h = Mat::Zero(2, 2);
    for (int u = 0; u < 4; ++u) h += f(n - 1, u) * pauli_matrix(1, u);
    CHECK((h - x.htilde(0, n)).norm() < 1e-14);
  }
  CHECK_THROWS_AS(DigitalControl::single_qubit({{1, 1, 0}}), ValidationError);
  // Vectors within the tolerance are renormalized.
  const DigitalControl near = DigitalControl::single_qubit({{0.707, 0.0, 0.707}});
  CHECK(near.switching_vectors()[0].norm() == doctest::Approx(1.0));
}

TEST_CASE("two qubit toggled paulis") {
  const DigitalControl id = DigitalControl::identity(2, 2);
  CHECK((id.htilde(0, 1) - pauli_matrix(2, 12)).norm() < 1e-15);
  CHECK((id.htilde(1, 2) - pauli_matrix(2, 3)).norm() < 1e-15);
  CHECK((id.toggled_observable(pauli_matrix(2, 15)) - pauli_matrix(2, 15)).norm() < 1e-15);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const DigitalControl c = DigitalControl::two_qubit_kak({random_kak(rng), random_kak(rng)});
    for (int n = 1; n <= 2; ++n) {
      const Mat& a = c.htilde(0, n);
      const Mat& b = c.htilde(1, n);
      CHECK((a - a.adjoint()).norm() < 1e-12);
      CHECK(std::abs(a.trace()) < 1e-12);
      CHECK((a * a - Mat::Identity(4, 4)).norm() < 1e-12);
      CHECK((a * b - b * a).norm() < 1e-12);
      const Mat u = c.propagator(n);
      CHECK((a * b - u.adjoint() * pauli_matrix(2, 15) * u).norm() < 1e-10);
    }
    const Mat o = c.toggled_observable(pauli_matrix(2, 7));
    CHECK((o * o - Mat::Identity(4, 4)).norm() < 1e-12);
  }
}

TEST_CASE("control json") {
  std::mt19937_64 rng(4);
  const DigitalControl c = DigitalControl::two_qubit_kak({random_kak(rng), random_kak(rng)});
  nlohmann::json j = c;
  const DigitalControl back = control_from_json(j, 2);
  for (int n = 1; n <= 2; ++n) CHECK((back.htilde(1, n) - c.htilde(1, n)).norm() == 0.0);
  nlohmann::json s = {{"windows", {{0, 0, 1}, {1, 0, 0}}}};
  CHECK(control_from_json(s, 1).windows() == 2);
  CHECK_THROWS_AS(control_from_json(nlohmann::json{{"windows", {{0, 1}}}}, 1), ValidationError);
  CHECK_THROWS_AS(control_from_json(nlohmann::json{{"kak", {{0, 1}}}}, 2), ValidationError);
}

TEST_CASE("frames") {
  std::mt19937_64 rng(5);
  const KakParams p = random_kak(rng);
  const DigitalControl a = DigitalControl::two_qubit_kak({p});
  const DigitalControl b = DigitalControl::from_frames(2, {kak_propagator(p)});
  CHECK((a.htilde(0, 1) - b.htilde(0, 1)).norm() < 1e-14);
  CHECK_THROWS_AS(DigitalControl::from_frames(2, {Mat::Identity(4, 4) * 2.0}), ValidationError);
}
