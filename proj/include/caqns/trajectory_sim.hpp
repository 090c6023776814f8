#pragma once

#include <cstdint>
#include <vector>

#include "caqns/algebra.hpp"
#include "caqns/noise_models.hpp"
#include "caqns/qns_protocols.hpp"

namespace caqns {

struct SimulationConfig {
  std::int64_t n_traj = 10000;
  std::uint64_t seed = 1;
  std::int64_t shots = 0;  // 0: exact trajectory average
  int threads = 0;         // 0: library default
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Toggling-frame error propagator of one experiment for given noise paths
// (one path per process, covering [0, T + shift]).
Mat error_propagator(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model,
                     const std::vector<RtnPath>& paths);

// Tr[Ũ ρ Ũ^† Õ] averaged over trajectories.
Estimate simulate_expectation(const Experiment& experiment, const NoiseModel& model, const SimulationConfig& config);

// All experiments share trajectory i (same seed stream), so one ensemble drives the whole
// protocol. Paths are prefix-consistent, so experiments of different duration also share them.
std::vector<Estimate> simulate_experiments(const std::vector<Experiment>& experiments, const NoiseModel& model,
                                           const SimulationConfig& config);

// Means of consecutive trajectory batches, one row per batch.
Eigen::MatrixXd simulate_batches(const std::vector<Experiment>& experiments, const NoiseModel& model,
                                 const SimulationConfig& config, int batches);

// |E[exp(−2i ∫_0^t B(s) ds)]| for a single qubit without control.
std::vector<Estimate> free_coherence_curve(const NoiseModel& model, const std::vector<double>& times,
                                           const SimulationConfig& config);

// Monte Carlo Pauli transfer matrix of the toggling-frame error channel (classical noise).
Ptm simulate_ptm(const DigitalControl& control, const WindowGrid& grid, const NoiseModel& model,
                 const SimulationConfig& config);

// Thread count from an explicit request or the CAQNS_THREADS environment variable.
int resolve_threads(int requested);

}  // namespace caqns
