#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "caqns/digital_control.hpp"
#include "caqns/noise_models.hpp"

namespace caqns {

// One QNS experiment: control, pseudo-initial Pauli operator, observable and duration.
struct Experiment {
  DigitalControl control;
  PauliIndex rho;
  PauliIndex obs;
  WindowGrid grid;

  Mat rho_matrix() const { return pauli_matrix(rho); }
  Mat toggled_observable() const { return control.toggled_observable(pauli_matrix(obs)); }
};

struct DesignSystem {
  Mat matrix;  // rows: experiments, columns: learnable indices
  Vec offset;  // Tr[ρ Õ]
};

// Affine coefficients of each learnable spectrum (order ≤ K) in each experiment.
DesignSystem assemble_design_matrix(const std::vector<Experiment>& experiments,
                                    const std::vector<SpectrumIndex>& learnable, int K);

double condition_number(const Mat& m);

struct Protocol {
  int nqubits = 1;
  int K = 0;
  std::vector<Experiment> experiments;
  std::vector<SpectrumIndex> learnable;
  DesignSystem system;
  double condition_number = 0.0;
};

Protocol make_protocol(std::vector<Experiment> experiments, std::vector<SpectrumIndex> learnable, int K);

struct DesignOptions {
  int pool_size = 0;  // 0 means 5 N
  int shuffles = 50;
  bool snap = false;  // snap switching vectors to axis and diagonal directions
  double rank_tolerance = 1e-8;
};

struct DesignReport {
  Protocol protocol;
  std::vector<double> shuffle_conditions;  // infinite when a shuffle failed
};

DesignReport design_protocol(const std::vector<SpectrumIndex>& learnable, int nqubits, const WindowGrid& grid, int K,
                             const DesignOptions& options, std::uint64_t seed);

// Minimum-norm least-squares solve of design · x = measurements − offset.
SpectrumTable reconstruct(const Protocol& protocol, const std::vector<double>& measurements);

// Protocol files: {"nqubits", "windows", "experiments": [rows]}.
std::vector<Experiment> experiments_from_json(const nlohmann::json& j, const WindowGrid& grid);
nlohmann::json experiments_to_json(const std::vector<Experiment>& experiments);
std::vector<Experiment> load_protocol_table(const std::string& path, double T);
void save_protocol_table(const std::string& path, const std::vector<Experiment>& experiments);

// Same experiments on a rescaled duration.
std::vector<Experiment> with_duration(std::vector<Experiment> experiments, double T);

}  // namespace caqns
