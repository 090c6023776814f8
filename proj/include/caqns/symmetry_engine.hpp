#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "caqns/noise_models.hpp"

namespace caqns {

enum class NoiseClass { Classical, Quantum };
enum class SymmetryKind { Learnable, Dark, Bound, SwapBound };

std::string to_string(SymmetryKind k);
NoiseClass parse_noise_class(const std::string& s);

// Outcome of classifying one index. A member contributes factor * S(member)
// to the Dyson coefficient of its representative, so folding is linear.
struct Resolution {
  SymmetryKind kind = SymmetryKind::Learnable;
  SpectrumIndex rep;
  cplx factor = 1.0;
};

// Result of one contraction step: the lower-order index and the tensor ratio
// T(member) = c T(contracted). c = 0 means the index is dark instead.
struct Contraction {
  SpectrumIndex index;
  double c = 4.0;
};

// Contracts three same-qubit slots sharing a window (a 3-streak for one qubit,
// implied by any 5-streak for two qubits), repeated to a fixed point.
// Returns nothing when the index has no such triple or the triple is dark.
std::optional<Contraction> detect_contraction(const SpectrumIndex& idx, int nqubits);

// Analytic darkness: two same-qubit slots in one window carrying different μ bits
// (slot 0 counts as bit 0). Exact for one qubit up to order 4.
bool is_dark_analytic(const SpectrumIndex& idx);

// Numerical darkness over 20 random controls and observables, cached.
bool is_dark_numeric(const SpectrumIndex& idx, int windows, int nqubits);

// Analytic rule, then numerical certification of every remaining quantum index.
bool is_dark(const SpectrumIndex& idx, int windows, int nqubits);

// Swap canonical form: inside a window whose slots share one μ bit, qubit-A slots come first.
SpectrumIndex swap_representative(const SpectrumIndex& idx);

// Full classification of a raw index.
Resolution resolve(const SpectrumIndex& idx, int windows, int nqubits, bool numeric_darkness = true);

// Learnable representatives up to order K (default: saturation 2|Q|L).
std::vector<SpectrumIndex> enumerate_learnable(int L, int nqubits, NoiseClass cls, int K = -1);

struct ComplexityReport {
  int L = 1;
  int nqubits = 1;
  NoiseClass noise_class = NoiseClass::Classical;
  int saturation_order = 2;
  std::vector<std::string> per_order_counts;  // exact decimal integers
  std::string total;
  bool upper_bound = false;  // true for the quantum envelope formula
};

void to_json(nlohmann::json& j, const ComplexityReport& r);

// Binomial-sum counts. Quantum counts are the 2^{k−1} envelope (an upper bound).
ComplexityReport count_learnable_closed_form(int L, int nqubits, NoiseClass cls);

// Counts by enumeration (used for quantum noise).
ComplexityReport count_learnable_enumerated(int L, int nqubits, NoiseClass cls);

// (L / L_ω)^k.
double resource_ratio(int L, int L_omega, int k);

// Folds bound and swap members into representatives and drops dark entries.
SpectrumTable bound_form(const SpectrumTable& raw);

struct SymmetryClass {
  SpectrumIndex rep;
  SymmetryKind kind = SymmetryKind::Learnable;
  std::vector<std::pair<SpectrumIndex, Resolution>> members;
};

// Groups all raw indices up to order K by representative; dark indices form one class.
std::vector<SymmetryClass> symmetry_classes(int L, int nqubits, NoiseClass cls, int K);

}  // namespace caqns
