#include <doctest.h>

#include <cmath>
#include <random>

#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"
#include "caqns/symmetry_engine.hpp"
#include "caqns/trajectory_sim.hpp"

using namespace caqns;

namespace {

Experiment free_experiment(double t, int rho = 1, int obs = 1) {
  return {DigitalControl::identity(1, 1), PauliIndex(1, rho), PauliIndex(1, obs), WindowGrid(1, t)};
}

DigitalControl random_single_qubit(int L, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<Eigen::Vector3d> y;
  for (int n = 0; n < L; ++n) y.push_back(Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized());
  return DigitalControl::single_qubit(y);
}

}  // namespace

TEST_CASE("noiseless evolution returns the bare trace") {
  NoiseModel m;
  m.gamma = 0;
  m.g = {0};
  SimulationConfig c;
  c.n_traj = 100;
  for (int r = 0; r < 4; ++r)
    for (int o = 1; o < 4; ++o) {
      const Estimate e = simulate_expectation(free_experiment(1.0, r, o), m, c);
      CHECK(e.value == doctest::Approx(r == o ? 2.0 : 0.0).epsilon(1e-14));
      CHECK(e.stderr_ == 0.0);
    }
}

TEST_CASE("frozen noise rotates the phase at rate 2g") {
  NoiseModel m;
  m.gamma = 0;
  m.g = {0.7};
  m.init = InitLaw::Fixed;
  SimulationConfig c;
  c.n_traj = 3;
  for (double t : {0.1, 0.5, 1.3, 4.0}) {
    const Estimate e = simulate_expectation(free_experiment(t), m, c);
    CHECK(e.value == doctest::Approx(2 * std::cos(2 * 0.7 * t)).epsilon(1e-12));
    const Estimate s = simulate_expectation(free_experiment(t, 1, 2), m, c);
    CHECK(s.value == doctest::Approx(2 * std::sin(2 * 0.7 * t)).epsilon(1e-12));
  }
}

TEST_CASE("propagators stay unitary under dense switching") {
  std::mt19937_64 rng(4);
  for (BathKind bath : {BathKind::Classical, BathKind::Toy}) {
    NoiseModel m;
    m.gamma = 500;
    m.g = {3.0};
    m.bath = bath;
    m.shift = bath == BathKind::Toy ? 0.3 : 0.0;
    const DigitalControl c = random_single_qubit(3, rng);
    const WindowGrid grid(3, 1.0);
    const RtnPath p = sample_path(m, 1.3, rng);
    CHECK(p.switches.size() > 300);
    const Mat u = error_propagator(c, grid, m, {p});
    CHECK((u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).norm() <= 1e-10);
  }
}

TEST_CASE("results are deterministic in the seed and independent of threads") {
  NoiseModel m;
  m.gamma = 2;
  m.g = {1.0, 0.5};
  m.topology = Topology::Independent;
  std::vector<KakParams> ps(2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& p : ps)
    for (double& x : p) x = u(rng);
  const Experiment e{DigitalControl::two_qubit_kak(ps), PauliIndex(2, 6), PauliIndex(2, 9), WindowGrid(2, 1.0)};
  SimulationConfig c;
  c.n_traj = 3000;
  c.seed = 12;
  c.threads = 1;
  const Estimate a = simulate_expectation(e, m, c);
  c.threads = 4;
  const Estimate b = simulate_expectation(e, m, c);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  c.seed = 13;
  CHECK(simulate_expectation(e, m, c).value != a.value);
}

TEST_CASE("standard error shrinks as one over root n") {
  NoiseModel m;
  m.gamma = 1;
  m.g = {1.0};
  SimulationConfig c;
  double ratio = 0;
  for (int rep = 0; rep < 10; ++rep) {
    c.seed = 100 + static_cast<std::uint64_t>(rep);
    c.n_traj = 4000;
    const double s1 = simulate_expectation(free_experiment(1.0), m, c).stderr_;
    c.n_traj = 8000;
    const double s2 = simulate_expectation(free_experiment(1.0), m, c).stderr_;
    ratio += s2 / s1 / 10;
  }
  CHECK(ratio == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("monte carlo matches the saturated dyson series at strong coupling") {
  // g/γ = 20 on two windows; bound-form spectra at K = 4 stand for the full series.
  NoiseModel m;
  m.gamma = 1;
  m.g = {20.0};
  const WindowGrid grid(2, 0.05);
  const SpectrumTable bound = bound_form(exact_table(m, grid, all_indices(2, 1, 12, true)));
  std::mt19937_64 rng(8);
  SimulationConfig c;
  c.n_traj = 40000;
  for (int trial = 0; trial < 4; ++trial) {
    const DigitalControl ctl = random_single_qubit(2, rng);
    const PauliIndex rho(1, static_cast<int>(rng() % 4)), obs(1, 1 + static_cast<int>(rng() % 3));
    const Estimate mc = simulate_expectation({ctl, rho, obs, grid}, m, c);
    const double dyson = expectation(ctl, rho, obs, bound, 4).real();
    CHECK(std::abs(mc.value - dyson) <= 3 * mc.stderr_ + 1e-3);
  }
}

TEST_CASE("toy bath agrees with the weak coupling dyson series") {
  NoiseModel m;
  m.gamma = 1;
  m.g = {0.1};
  m.bath = BathKind::Toy;
  const WindowGrid grid(2, 1.0);
  m.shift = grid.T;
  const SpectrumTable raw = exact_table(m, grid, all_indices(2, 1, 4, false));
  std::mt19937_64 rng(2);
  SimulationConfig c;
  c.n_traj = 20000;
  for (int trial = 0; trial < 3; ++trial) {
    const DigitalControl ctl = random_single_qubit(2, rng);
    const PauliIndex rho(1, 1 + trial), obs(1, 1 + trial);
    const Estimate mc = simulate_expectation({ctl, rho, obs, grid}, m, c);
    const double dyson = expectation(ctl, rho, obs, raw, 4).real();
    CHECK(std::abs(mc.value - dyson) <= 3 * mc.stderr_ + 1e-3);
  }
}

TEST_CASE("free coherence curve") {
  NoiseModel m;
  m.gamma = 1;
  m.g = {1.0};
  SimulationConfig c;
  c.n_traj = 20000;
  const std::vector<double> times = {0.0, 0.5, 1.0, 2.0};
  const auto slow = free_coherence_curve(m, times, c);
  CHECK(slow[0].value == doctest::Approx(1.0).epsilon(1e-15));
  // Symmetric frozen-start RTN: E[exp(−2ig∫β)] matches the free-evolution trace.
  const Estimate e = simulate_expectation(free_experiment(1.0), m, c);
  CHECK(slow[2].value == doctest::Approx(0.5 * std::abs(e.value)).epsilon(1e-3));
  // Motional narrowing: faster switching at equal g decays more slowly.
  NoiseModel fast = m;
  fast.gamma = 20;
  const auto narrowed = free_coherence_curve(fast, times, c);
  CHECK(narrowed[3].value > slow[3].value + 5 * (narrowed[3].stderr_ + slow[3].stderr_));
}

TEST_CASE("batches, shots and validation") {
  NoiseModel m;
  m.gamma = 1;
  m.g = {1.0};
  SimulationConfig c;
  c.n_traj = 4000;
  const std::vector<Experiment> ex = {free_experiment(1.0), free_experiment(1.0, 2, 2)};
  const Eigen::MatrixXd b = simulate_batches(ex, m, c, 8);
  const auto full = simulate_experiments(ex, m, c);
  CHECK(b.rows() == 8);
  CHECK(b.col(0).mean() == doctest::Approx(full[0].value).epsilon(1e-12));
  CHECK_THROWS_AS(simulate_batches(ex, m, c, 1), ValidationError);

  c.shots = 1000;
  const auto shot = simulate_experiments(ex, m, c);
  CHECK(shot[0].stderr_ > full[0].stderr_);
  CHECK(std::abs(shot[0].value - full[0].value) <= 5 * shot[0].stderr_);
  CHECK(simulate_experiments(ex, m, c)[0].value == shot[0].value);

  c.n_traj = 0;
  CHECK_THROWS_AS(simulate_experiments(ex, m, c), ValidationError);
  c.n_traj = 10;
  NoiseModel toy = m;
  toy.bath = BathKind::Toy;
  toy.g = {1.0, 1.0};
  CHECK_THROWS_AS(simulate_experiments(ex, toy, c), ValidationError);
  NoiseModel two = m;
  two.g = {1.0, 1.0};
  CHECK_THROWS_AS(simulate_experiments(ex, two, c), ValidationError);
}

TEST_CASE("noiseless process tomography is the identity") {
  NoiseModel m;
  m.gamma = 0;
  m.g = {0, 0};
  SimulationConfig c;
  c.n_traj = 2;
  std::vector<KakParams> ps(2);
  ps[0][6] = 0.4;
  const Ptm r = simulate_ptm(DigitalControl::two_qubit_kak(ps), WindowGrid(2, 1.0), m, c);
  CHECK((r - Ptm::Identity(16, 16)).norm() <= 1e-12);
}
