#include "caqns/trajectory_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "caqns/errors.hpp"

namespace caqns {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CAQNS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

constexpr std::int64_t kChunk = 512;

void check_model(const NoiseModel& model, int nqubits) {
  model.validate();
  if (model.nqubits() != nqubits) throw ValidationError("noise model and control differ in qubit count");
}

std::vector<RtnPath> sample_paths(const NoiseModel& model, double horizon, std::uint64_t seed, std::int64_t t) {
  std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(t)));
  std::vector<RtnPath> paths;
  for (int p = 0; p < model.process_count(); ++p) paths.push_back(sample_path(model, horizon, rng));
  return paths;
}

template <int D>
using MatD = Eigen::Matrix<cplx, D, D>;

// Classical noise: each window contributes exp(−i Σ_q g_q φ_q(n) h_q(n)) with commuting h_q(n).
template <int D>
MatD<D> classical_propagator(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model,
                             const std::vector<RtnPath>& paths) {
  MatD<D> u = MatD<D>::Identity();
  for (int n = 1; n <= grid.L; ++n) {
    MatD<D> step = MatD<D>::Identity();
    for (int q = 0; q < control.nqubits(); ++q) {
      const RtnPath& p = paths[static_cast<size_t>(model.process_of(q))];
      const double phi = model.g[static_cast<size_t>(q)] * p.modulated_integral(grid.lower(n), grid.upper(n), model.omega);
      const MatD<D> h = control.htilde(q, n);
      step = (step * (std::cos(phi) * MatD<D>::Identity() - cplx(0, std::sin(phi)) * h)).eval();
    }
    u = (step * u).eval();
  }
  return u;
}

// Toy bath: joint system ⊗ bath evolution with H = g h(n) ⊗ (β(t) τ_x + β(t + shift) τ_y).
Mat toy_propagator(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model, const RtnPath& p) {
  const double g = model.g[0];
  Eigen::Matrix2cd tx, ty;
  tx << 0, 1, 1, 0;
  ty << 0, cplx(0, -1), cplx(0, 1), 0;
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  const double r2 = std::sqrt(2.0);
  for (int n = 1; n <= grid.L; ++n) {
    const double lo = grid.lower(n), hi = grid.upper(n);
    std::vector<double> cuts{lo, hi};
    for (double s : p.switches) {
      if (s > lo && s < hi) cuts.push_back(s);
      if (s - model.shift > lo && s - model.shift < hi) cuts.push_back(s - model.shift);
    }
    std::sort(cuts.begin(), cuts.end());
    const Eigen::Matrix2cd h = control.htilde(0, n);
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double dt = cuts[c + 1] - cuts[c];
      if (dt <= 0) continue;
      const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
      const Eigen::Matrix2cd bath = (p.value(mid) * tx + p.value(mid + model.shift) * ty) / r2;
      Eigen::Matrix4cd gen;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) gen.block<2, 2>(2 * i, 2 * j) = h(i, j) * bath;
      const double a = r2 * g * dt;
      const Eigen::Matrix4cd step = std::cos(a) * Eigen::Matrix4cd::Identity() - cplx(0, std::sin(a)) * gen;
      u = (step * u).eval();
    }
  }
  return u;
}

struct Prepared {
  Mat rho;
  Mat obs;
};

double trajectory_value(const Experiment& e, const Prepared& prep, const NoiseModel& model,
                        const std::vector<RtnPath>& paths) {
  if (model.bath == BathKind::Toy) {
    const Mat u = toy_propagator(e.control, e.grid, model, paths[0]);
    Eigen::Matrix2cd rb;
    rb << 1, 0, 0, 0;
    Eigen::Matrix4cd rho, obs;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        rho.block<2, 2>(2 * i, 2 * j) = prep.rho(i, j) * rb;
        obs.block<2, 2>(2 * i, 2 * j) = prep.obs(i, j) * Eigen::Matrix2cd::Identity();
      }
    return (u * rho * u.adjoint() * obs).trace().real();
  }
  if (e.control.nqubits() == 1) {
    const MatD<2> u = classical_propagator<2>(e.control, e.grid, model, paths);
    const MatD<2> rho = prep.rho, obs = prep.obs;
    return (u * rho * u.adjoint() * obs).trace().real();
  }
  const MatD<4> u = classical_propagator<4>(e.control, e.grid, model, paths);
  const MatD<4> rho = prep.rho, obs = prep.obs;
  return (u * rho * u.adjoint() * obs).trace().real();
}

// Sums and squared sums per experiment, chunked for a deterministic reduction.
struct Accumulated {
  std::vector<double> sum, sum2;
  Eigen::MatrixXd batches;
};

Accumulated accumulate(const std::vector<Experiment>& experiments, const NoiseModel& model,
                       const SimulationConfig& config, int batches) {
  if (experiments.empty()) throw ValidationError("no experiments to simulate");
  if (config.n_traj < 1) throw ValidationError("n_traj must be at least 1");
  const size_t ne = experiments.size();
  double horizon = 0.0;
  std::vector<Prepared> prep;
  for (const auto& e : experiments) {
    check_model(model, e.control.nqubits());
    if (model.bath == BathKind::Toy && e.control.nqubits() != 1) throw ValidationError("toy bath needs one qubit");
    horizon = std::max(horizon, e.grid.T);
    prep.push_back({e.rho_matrix(), e.toggled_observable()});
  }
  horizon += model.shift;
  const std::int64_t nchunks = (config.n_traj + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> csum(static_cast<size_t>(nchunks), std::vector<double>(ne, 0.0));
  std::vector<std::vector<double>> csum2(static_cast<size_t>(nchunks), std::vector<double>(ne, 0.0));
  const bool want_batches = batches > 0;
  std::vector<std::vector<double>> values;
  if (want_batches) values.assign(ne, std::vector<double>(static_cast<size_t>(config.n_traj), 0.0));
  const int threads = resolve_threads(config.threads);
  (void)threads;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t end = std::min(config.n_traj, (c + 1) * kChunk);
    for (std::int64_t t = c * kChunk; t < end; ++t) {
      const auto paths = sample_paths(model, horizon, config.seed, t);
      for (size_t i = 0; i < ne; ++i) {
        const double v = trajectory_value(experiments[i], prep[i], model, paths);
        csum[static_cast<size_t>(c)][i] += v;
        csum2[static_cast<size_t>(c)][i] += v * v;
        if (want_batches) values[i][static_cast<size_t>(t)] = v;
      }
    }
  }
  Accumulated acc;
  acc.sum.assign(ne, 0.0);
  acc.sum2.assign(ne, 0.0);
  for (std::int64_t c = 0; c < nchunks; ++c)
    for (size_t i = 0; i < ne; ++i) {
      acc.sum[i] += csum[static_cast<size_t>(c)][i];
      acc.sum2[i] += csum2[static_cast<size_t>(c)][i];
    }
  if (want_batches) {
    if (config.n_traj < batches) throw ValidationError("fewer trajectories than batches");
    acc.batches = Eigen::MatrixXd::Zero(batches, static_cast<Eigen::Index>(ne));
    const std::int64_t per = config.n_traj / batches;
    for (int b = 0; b < batches; ++b)
      for (size_t i = 0; i < ne; ++i) {
        double s = 0.0;
        for (std::int64_t t = b * per; t < (b + 1) * per; ++t) s += values[i][static_cast<size_t>(t)];
        acc.batches(b, static_cast<Eigen::Index>(i)) = s / static_cast<double>(per);
      }
  }
  return acc;
}

void apply_shots(std::vector<Estimate>& out, const std::vector<Experiment>& experiments, const SimulationConfig& config) {
  if (config.shots <= 0) return;
  std::mt19937_64 rng(stream_seed(config.seed, 0xC0FFEEULL));
  for (size_t i = 0; i < out.size(); ++i) {
    // Outcome ±d with probability fixed by the exact mean, d = Hilbert-space dimension.
    const double d = static_cast<double>(experiments[i].rho.dim());
    const double p = std::clamp(0.5 * (1.0 + out[i].value / d), 0.0, 1.0);
    std::binomial_distribution<std::int64_t> bin(config.shots, p);
    const double frac = static_cast<double>(bin(rng)) / static_cast<double>(config.shots);
    out[i].value = d * (2.0 * frac - 1.0);
    out[i].stderr_ = std::hypot(out[i].stderr_, 2.0 * d * std::sqrt(p * (1 - p) / static_cast<double>(config.shots)));
  }
}

}  // namespace

Mat error_propagator(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model,
                     const std::vector<RtnPath>& paths) {
  check_model(model, control.nqubits());
  if (static_cast<int>(paths.size()) != model.process_count()) throw ValidationError("one path per process is required");
  if (model.bath == BathKind::Toy) return toy_propagator(control, grid, model, paths[0]);
  if (control.nqubits() == 1) return classical_propagator<2>(control, grid, model, paths);
  return classical_propagator<4>(control, grid, model, paths);
}

std::vector<Estimate> simulate_experiments(const std::vector<Experiment>& experiments, const NoiseModel& model,
                                           const SimulationConfig& config) {
  const Accumulated acc = accumulate(experiments, model, config, 0);
  const double n = static_cast<double>(config.n_traj);
  std::vector<Estimate> out;
  for (size_t i = 0; i < experiments.size(); ++i) {
    const double mean = acc.sum[i] / n;
    const double var = n > 1 ? std::max(0.0, (acc.sum2[i] - n * mean * mean) / (n - 1)) : 0.0;
    out.push_back({mean, std::sqrt(var / n)});
  }
  apply_shots(out, experiments, config);
  return out;
}

Estimate simulate_expectation(const Experiment& experiment, const NoiseModel& model, const SimulationConfig& config) {
  return simulate_experiments({experiment}, model, config).front();
}

Eigen::MatrixXd simulate_batches(const std::vector<Experiment>& experiments, const NoiseModel& model,
                                 const SimulationConfig& config, int batches) {
  if (batches < 2) throw ValidationError("at least two batches are required");
  return accumulate(experiments, model, config, batches).batches;
}

std::vector<Estimate> free_coherence_curve(const NoiseModel& model, const std::vector<double>& times,
                                           const SimulationConfig& config) {
  model.validate();
  if (model.nqubits() != 1 || model.bath != BathKind::Classical)
    throw ValidationError("free coherence curves need a classical single-qubit model");
  if (times.empty()) return {};
  for (double t : times)
    if (!(t >= 0)) throw ValidationError("times must be nonnegative");
  const double horizon = std::max(*std::max_element(times.begin(), times.end()), 1e-300);
  const size_t nt = times.size();
  std::vector<size_t> order(nt);
  for (size_t i = 0; i < nt; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return times[a] < times[b]; });
  const std::int64_t nchunks = (config.n_traj + kChunk - 1) / kChunk;
  // Per chunk: Σ re, Σ im, Σ re², Σ im².
  std::vector<std::vector<double>> part(static_cast<size_t>(nchunks), std::vector<double>(4 * nt, 0.0));
  const int threads = resolve_threads(config.threads);
  (void)threads;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t end = std::min(config.n_traj, (c + 1) * kChunk);
    auto& acc = part[static_cast<size_t>(c)];
    for (std::int64_t t = c * kChunk; t < end; ++t) {
      const auto paths = sample_paths(model, horizon, config.seed, t);
      double phi = 0.0, last = 0.0;
      for (size_t oi : order) {
        phi += model.g[0] * paths[0].modulated_integral(last, times[oi], model.omega);
        last = times[oi];
        const double re = std::cos(2 * phi), im = -std::sin(2 * phi);
        acc[4 * oi] += re;
        acc[4 * oi + 1] += im;
        acc[4 * oi + 2] += re * re;
        acc[4 * oi + 3] += im * im;
      }
    }
  }
  std::vector<double> tot(4 * nt, 0.0);
  for (const auto& p : part)
    for (size_t i = 0; i < tot.size(); ++i) tot[i] += p[i];
  const double n = static_cast<double>(config.n_traj);
  std::vector<Estimate> out;
  for (size_t i = 0; i < nt; ++i) {
    const double mr = tot[4 * i] / n, mi = tot[4 * i + 1] / n;
    const double vr = std::max(0.0, tot[4 * i + 2] / n - mr * mr);
    const double vi = std::max(0.0, tot[4 * i + 3] / n - mi * mi);
    out.push_back({std::hypot(mr, mi), n > 1 ? std::sqrt((vr + vi) / (n - 1)) : 0.0});
  }
  return out;
}

Ptm simulate_ptm(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model,
                 const SimulationConfig& config) {
  check_model(model, control.nqubits());
  if (model.bath != BathKind::Classical) throw ValidationError("process tomography needs a classical model");
  const int nq = control.nqubits();
  const int n = 1 << (2 * nq);
  const std::int64_t nchunks = (config.n_traj + kChunk - 1) / kChunk;
  std::vector<Ptm> part(static_cast<size_t>(nchunks), Ptm::Zero(n, n));
  const int threads = resolve_threads(config.threads);
  (void)threads;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t end = std::min(config.n_traj, (c + 1) * kChunk);
    for (std::int64_t t = c * kChunk; t < end; ++t) {
      const auto paths = sample_paths(model, grid.T, config.seed, t);
      const Mat u = error_propagator(control, grid, model, paths);
      part[static_cast<size_t>(c)] += unitary_ptm(u);
    }
  }
  Ptm tot = Ptm::Zero(n, n);
  for (const auto& p : part) tot += p;
  return tot / static_cast<double>(config.n_traj);
}

}  // namespace caqns
