#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "caqns/algebra.hpp"
#include "caqns/window_grid.hpp"

namespace caqns {

// Label of a window-integrated correlation spectrum S^(μ)_q(n).
// n is nonincreasing with entries in 1..L, q[j] is 0 (qubit A) or 1 (qubit B),
// mu has k-1 bits. Slot j (0-based) carries the bit mu[j-1]; slot 0 carries none.
struct SpectrumIndex {
  std::vector<int> n;
  std::vector<int> mu;
  std::vector<int> q;

  SpectrumIndex() = default;
  SpectrumIndex(std::vector<int> n_, std::vector<int> mu_, std::vector<int> q_);

  int order() const { return static_cast<int>(n.size()); }
  int slot_mu(int j) const { return j == 0 ? 0 : mu[j - 1]; }
  bool classical() const;
  bool time_ordered() const;
  // Unordered n-strings are accepted only when allow_unordered is set.
  void validate(int windows, int nqubits, bool allow_unordered = false) const;
  std::string label() const;

  auto operator<=>(const SpectrumIndex&) const = default;
};

void to_json(nlohmann::json& j, const SpectrumIndex& s);
void from_json(const nlohmann::json& j, SpectrumIndex& s);

enum class InitLaw { Fixed, Symmetric };
enum class Topology { Independent, Shared };
enum class BathKind { Classical, Toy };

// Random telegraph noise coupled to σ_z of each qubit with strength g[q].
// The classical bath has B_q(t) = g_q β(t) cos(Ω t); the toy quantum bath
// has B(t) = g (β(t) τ_x + β(t + shift) τ_y) on a bath qubit prepared in |0>.
struct NoiseModel {
  double gamma = 1.0;
  std::vector<double> g{1.0};
  InitLaw init = InitLaw::Symmetric;
  Topology topology = Topology::Shared;
  BathKind bath = BathKind::Classical;
  double shift = 0.0;
  double omega = 0.0;

  int nqubits() const { return static_cast<int>(g.size()); }
  int process_count() const;
  int process_of(int q) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const NoiseModel& m);
void from_json(const nlohmann::json& j, NoiseModel& m);

// One sample path of a ±1 telegraph process with switching rate γ on [0, horizon].
struct RtnPath {
  int initial = 1;
  std::vector<double> switches;  // increasing switching times
  double horizon = 0.0;

  double value(double t) const;
  // ∫_a^b β(t) dt.
  double integral(double a, double b) const;
  // ∫_a^b β(t) cos(Ω t + φ) dt.
  double modulated_integral(double a, double b, double omega, double phase = 0.0) const;
};

RtnPath sample_path(const NoiseModel& model, double horizon, std::mt19937_64& rng);

// E[β(t1) ... β(tk)] for one process with t1 >= t2 >= ... >= tk.
double pure_moment(const NoiseModel& model, const std::vector<double>& times);

// A correlator term: weight times a product of telegraph moments.
// Slot j samples process src[j].process at time t_j + src[j].shift.
struct SlotSource {
  int process = 0;
  double shift = 0.0;
};
struct CorrelatorTerm {
  cplx weight;
  std::vector<SlotSource> src;
};

// Expansion of the nested-bracket correlator of an index into telegraph moments.
// Modulation by cos(Ω t) is not included.
std::vector<CorrelatorTerm> correlator_terms(const NoiseModel& model, const std::vector<int>& mu,
                                             const std::vector<int>& q);

// Nested-bracket correlator at times t1 >= ... >= tk.
cplx nested_bracket_correlator(const NoiseModel& model, const std::vector<int>& mu,
                               const std::vector<int>& q, const std::vector<double>& times);

// Table of spectrum values keyed by index, with provenance for each entry.
struct SpectrumEntry {
  cplx value;
  std::string provenance;
};

struct SpectrumTable {
  WindowGrid grid;
  int nqubits = 1;
  std::map<SpectrumIndex, SpectrumEntry> entries;

  void set(const SpectrumIndex& idx, cplx v, const std::string& provenance);
  bool contains(const SpectrumIndex& idx) const { return entries.count(idx) != 0; }
  cplx value(const SpectrumIndex& idx) const;
  std::optional<cplx> find(const SpectrumIndex& idx) const;
  int max_order() const;
};

void to_json(nlohmann::json& j, const SpectrumTable& t);
void from_json(const nlohmann::json& j, SpectrumTable& t);

// Exact window-integrated spectrum of one index. An unordered n-string gives 0.
// Supported when all shifted-time orderings inside the region are fixed,
// i.e. shift == 0 or shift >= T. Throws ValidationError otherwise.
cplx ca_spectrum_exact(const NoiseModel& model, const WindowGrid& grid, const SpectrumIndex& idx);

struct McEstimate {
  cplx value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

// Monte Carlo estimate of a window-integrated spectrum from sampled paths.
McEstimate ca_spectrum_mc(const NoiseModel& model, const WindowGrid& grid, const SpectrumIndex& idx,
                          std::int64_t n_traj, std::uint64_t seed);

// All indices of order 1..K (every n-string, μ-string and q-string), for raw tables.
std::vector<SpectrumIndex> all_indices(int windows, int nqubits, int max_order, bool classical_only);

// Exact table over the given indices.
SpectrumTable exact_table(const NoiseModel& model, const WindowGrid& grid,
                          const std::vector<SpectrumIndex>& indices);

// Per-trajectory seed derived from a base seed and a stream index.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace caqns
