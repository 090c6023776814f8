#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "caqns/algebra.hpp"
#include "caqns/digital_control.hpp"
#include "caqns/noise_models.hpp"
#include "caqns/trajectory_sim.hpp"

namespace caqns {

struct ProcessMatrices {
  Ptm ptm;
  Mat chi;
};

// Toggling-frame error channel predicted by the truncated Dyson series:
// R_{v,u} = (1/d) E(ρ = Λ_u, Õ = Λ_v), with the Λ_0 row fixed by trace preservation.
ProcessMatrices predict_ptm(const DigitalControl& control, const SpectrumTable& spectra, int K);

// Fidelity of a predicted channel against the identity.
double identity_fidelity(const ProcessMatrices& pm);

// Control parameterization: two-qubit controls use 15 KAK angles per window;
// single-qubit controls use polar angles (θ, φ) of the switching vector per window.
int parameter_count(int nqubits, int windows);
DigitalControl control_from_params(int nqubits, int windows, const std::vector<double>& params);

struct NelderMeadOptions {
  int max_iter = 2000;
  double scale = 0.1;
  int restarts = 3;
  double ftol = 1e-12;
  double restart_spread = 1.0;
  std::uint64_t seed = 7;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value per iteration, concatenated over restarts
};

// Minimizes f by Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2)
// with restarts; the first start is x0, the others are x0 plus uniform offsets.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x0,
                             const NelderMeadOptions& options);

struct OptimizationProblem {
  SpectrumTable spectra;
  int K = 0;
  int nqubits = 2;
  std::vector<double> initial_params;  // empty: all zeros (bare control)
  NelderMeadOptions options;
};

struct OptimizationResult {
  std::vector<double> params;
  double fidelity = 0.0;      // clamped to [0, 1]
  double raw_fidelity = 0.0;  // unclamped surrogate value
  double bare_fidelity = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

void to_json(nlohmann::json& j, const OptimizationResult& r);

OptimizationResult optimize(const OptimizationProblem& problem);

struct SweepConfig {
  WindowGrid grid{2, 1.0};
  int K = 8;
  SimulationConfig sim;  // Monte Carlo fidelity evaluation
  NelderMeadOptions options;
};

struct SweepRow {
  double g_over_gamma = 0.0;
  double bare_surrogate = 0.0;
  double opt_surrogate = 0.0;
  double bare_mc = 0.0;
  double opt_mc = 0.0;
};

// For each coupling: exact bound-form spectra, optimization, and Monte Carlo fidelities.
std::vector<SweepRow> fidelity_sweep(const NoiseModel& model, const std::vector<double>& g_over_gamma,
                                     const SweepConfig& config);

}  // namespace caqns
