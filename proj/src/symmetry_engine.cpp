#include "caqns/symmetry_engine.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include <boost/multiprecision/cpp_int.hpp>

#include "caqns/digital_control.hpp"
#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"

namespace caqns {

using BigInt = boost::multiprecision::cpp_int;

std::string to_string(SymmetryKind k) {
  switch (k) {
    case SymmetryKind::Learnable: return "learnable";
    case SymmetryKind::Dark: return "dark";
    case SymmetryKind::Bound: return "bound";
    case SymmetryKind::SwapBound: return "swap_bound";
  }
  return "unknown";
}

NoiseClass parse_noise_class(const std::string& s) {
  if (s == "classical") return NoiseClass::Classical;
  if (s == "quantum") return NoiseClass::Quantum;
  throw ValidationError("noise class must be 'classical' or 'quantum'");
}

namespace {

// Slot ranges [begin, end) of equal window index.
std::vector<std::pair<int, int>> window_blocks(const SpectrumIndex& idx) {
  std::vector<std::pair<int, int>> out;
  int start = 0;
  const int k = idx.order();
  while (start < k) {
    int end = start;
    while (end < k && idx.n[end] == idx.n[start]) ++end;
    out.emplace_back(start, end);
    start = end;
  }
  return out;
}

SpectrumIndex delete_slots(const SpectrumIndex& idx, int b, int c) {
  SpectrumIndex out;
  for (int j = 0; j < idx.order(); ++j) {
    if (j == b || j == c) continue;
    out.n.push_back(idx.n[j]);
    out.q.push_back(idx.q[j]);
    if (out.n.size() > 1) out.mu.push_back(idx.slot_mu(j));
  }
  return out;
}

// One contraction step, ignoring darkness.
std::optional<SpectrumIndex> contract_once(const SpectrumIndex& idx) {
  for (const auto& [s, e] : window_blocks(idx))
    for (int q = 0; q < 2; ++q) {
      std::vector<int> slots;
      for (int j = s; j < e; ++j)
        if (idx.q[j] == q) slots.push_back(j);
      if (slots.size() >= 3) return delete_slots(idx, slots[1], slots[2]);
    }
  return std::nullopt;
}

}  // namespace

bool is_dark_analytic(const SpectrumIndex& idx) {
  for (const auto& [s, e] : window_blocks(idx))
    for (int q = 0; q < 2; ++q) {
      int seen = -1;
      for (int j = s; j < e; ++j) {
        if (idx.q[j] != q) continue;
        if (seen >= 0 && seen != idx.slot_mu(j)) return true;
        seen = idx.slot_mu(j);
      }
    }
  return false;
}

std::optional<Contraction> detect_contraction(const SpectrumIndex& idx, int nqubits) {
  (void)nqubits;
  SpectrumIndex cur = idx;
  double c = 1.0;
  bool any = false;
  while (true) {
    if (is_dark_analytic(cur)) return std::nullopt;
    auto next = contract_once(cur);
    if (!next) break;
    cur = *next;
    c *= 4.0;
    any = true;
  }
  if (!any) return std::nullopt;
  return Contraction{cur, c};
}

bool is_dark_numeric(const SpectrumIndex& idx, int windows, int nqubits) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, SpectrumIndex>, bool> cache;
  const auto key = std::make_tuple(windows, nqubits, idx);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  idx.validate(windows, nqubits);
  std::mt19937_64 rng(0x5eed0dac1ULL + static_cast<std::uint64_t>(windows) * 7919 + nqubits);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::normal_distribution<double> gauss;
  bool dark = true;
  for (int trial = 0; trial < 20 && dark; ++trial) {
    Mat obs;
    DigitalControl control;
    if (nqubits == 1) {
      std::vector<Eigen::Vector3d> y;
      for (int n = 0; n < windows; ++n) {
        Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
        y.push_back(v.normalized());
      }
      control = DigitalControl::single_qubit(y);
      const Mat v = single_axis_rotation(ang(rng), ang(rng), ang(rng));
      obs = v * pauli_matrix(1, 3) * v.adjoint();
    } else {
      std::vector<KakParams> ps(windows);
      for (auto& p : ps)
        for (double& x : p) x = ang(rng);
      control = DigitalControl::two_qubit_kak(ps);
      KakParams p{};
      for (double& x : p) x = ang(rng);
      const Mat v = kak_propagator(p);
      obs = v * pauli_matrix(2, 15) * v.adjoint();
    }
    if (control_tensor(control, obs, idx).norm() > 1e-10) dark = false;
  }
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, dark);
  return dark;
}

bool is_dark(const SpectrumIndex& idx, int windows, int nqubits) {
  return resolve(idx, windows, nqubits, true).kind == SymmetryKind::Dark;
}

SpectrumIndex swap_representative(const SpectrumIndex& idx) {
  SpectrumIndex out = idx;
  for (const auto& [s, e] : window_blocks(idx)) {
    bool uniform = true;
    for (int j = s + 1; j < e; ++j)
      if (idx.slot_mu(j) != idx.slot_mu(s)) uniform = false;
    if (!uniform) continue;
    int a = 0;
    for (int j = s; j < e; ++j) a += idx.q[j] == 0;
    for (int j = s; j < e; ++j) out.q[j] = (j - s < a) ? 0 : 1;
  }
  return out;
}

Resolution resolve(const SpectrumIndex& idx, int windows, int nqubits, bool numeric_darkness) {
  idx.validate(windows, nqubits);
  Resolution r;
  SpectrumIndex cur = idx;
  bool contracted = false;
  while (true) {
    if (is_dark_analytic(cur)) {
      r.kind = SymmetryKind::Dark;
      r.rep = idx;
      r.factor = 0.0;
      return r;
    }
    auto next = contract_once(cur);
    if (!next) break;
    cur = *next;
    // T_k = 4 T_{k-2} and (−i)^k = −(−i)^{k−2}.
    r.factor *= -4.0;
    contracted = true;
  }
  if (nqubits == 2) cur = swap_representative(cur);
  // The same-window rule misses cancellations across distinct windows, e.g. S^(1,0)(3,2,1).
  if (numeric_darkness && !cur.classical() && is_dark_numeric(cur, windows, nqubits)) {
    r.kind = SymmetryKind::Dark;
    r.rep = idx;
    r.factor = 0.0;
    return r;
  }
  r.rep = cur;
  if (contracted)
    r.kind = SymmetryKind::Bound;
  else if (cur != idx)
    r.kind = SymmetryKind::SwapBound;
  else
    r.kind = SymmetryKind::Learnable;
  return r;
}

std::vector<SpectrumIndex> enumerate_learnable(int L, int nqubits, NoiseClass cls, int K) {
  if (L < 1) throw ValidationError("L must be positive");
  if (nqubits != 1 && nqubits != 2) throw ValidationError("nqubits must be 1 or 2");
  if (K < 0) K = 2 * nqubits * L;
  std::vector<SpectrumIndex> out;
  for (const auto& idx : all_indices(L, nqubits, K, cls == NoiseClass::Classical))
    if (resolve(idx, L, nqubits).kind == SymmetryKind::Learnable) out.push_back(idx);
  std::sort(out.begin(), out.end());
  return out;
}

void to_json(nlohmann::json& j, const ComplexityReport& r) {
  j = nlohmann::json{{"L", r.L},
                     {"nqubits", r.nqubits},
                     {"noise_class", r.noise_class == NoiseClass::Classical ? "classical" : "quantum"},
                     {"saturation_order", r.saturation_order},
                     {"per_order_counts", r.per_order_counts},
                     {"total", r.total},
                     {"upper_bound", r.upper_bound}};
}

namespace {

BigInt binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

BigInt pow_big(int base, int e) {
  BigInt out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace

ComplexityReport count_learnable_closed_form(int L, int nqubits, NoiseClass cls) {
  if (L < 1) throw ValidationError("L must be positive");
  if (nqubits != 1 && nqubits != 2) throw ValidationError("nqubits must be 1 or 2");
  ComplexityReport r;
  r.L = L;
  r.nqubits = nqubits;
  r.noise_class = cls;
  r.saturation_order = 2 * nqubits * L;
  r.upper_bound = cls == NoiseClass::Quantum;
  BigInt total = 0;
  for (int k = 1; k <= r.saturation_order; ++k) {
    BigInt count = 0;
    if (nqubits == 1) {
      // t distinct windows, k - t of them holding a 2-streak.
      for (int t = (k + 1) / 2; t <= std::min(k, L); ++t) count += binom(L, t) * binom(t, k - t);
    } else {
      // Per occupied window: multiplicity 1 (A or B), 2 (AA, AB, BB), 3 (AAB, ABB) or 4 (AABB).
      for (int t = 1; t <= std::min(k, L); ++t)
        for (int p4 = 0; p4 <= t; ++p4)
          for (int p3 = 0; p3 + p4 <= t; ++p3) {
            const int p2 = k - t - 2 * p3 - 3 * p4;
            const int p1 = t - p4 - p3 - p2;
            if (p2 < 0 || p1 < 0) continue;
            count += binom(L, t) * binom(t, p4) * binom(t - p4, p3) * pow_big(2, p3) * binom(t - p4 - p3, p2) *
                     pow_big(3, p2) * pow_big(2, p1);
          }
    }
    if (cls == NoiseClass::Quantum) count *= pow_big(2, k - 1);
    r.per_order_counts.push_back(count.str());
    total += count;
  }
  r.total = total.str();
  return r;
}

ComplexityReport count_learnable_enumerated(int L, int nqubits, NoiseClass cls) {
  ComplexityReport r;
  r.L = L;
  r.nqubits = nqubits;
  r.noise_class = cls;
  r.saturation_order = 2 * nqubits * L;
  std::vector<long long> per(r.saturation_order, 0);
  const auto learnable = enumerate_learnable(L, nqubits, cls);
  for (const auto& idx : learnable) ++per[idx.order() - 1];
  for (long long c : per) r.per_order_counts.push_back(std::to_string(c));
  r.total = std::to_string(learnable.size());
  return r;
}

double resource_ratio(int L, int L_omega, int k) {
  if (L < 1 || L_omega < 1) throw ValidationError("window counts must be positive");
  return std::pow(static_cast<double>(L) / L_omega, k);
}

SpectrumTable bound_form(const SpectrumTable& raw) {
  SpectrumTable out;
  out.grid = raw.grid;
  out.nqubits = raw.nqubits;
  std::map<SpectrumIndex, cplx> acc;
  for (const auto& [idx, e] : raw.entries) {
    const Resolution r = resolve(idx, raw.grid.L, raw.nqubits);
    if (r.kind == SymmetryKind::Dark) continue;
    acc[r.rep] += r.factor * e.value;
  }
  for (const auto& [idx, v] : acc) out.set(idx, v, "bound");
  return out;
}

std::vector<SymmetryClass> symmetry_classes(int L, int nqubits, NoiseClass cls, int K) {
  std::map<SpectrumIndex, SymmetryClass> classes;
  SymmetryClass dark;
  dark.kind = SymmetryKind::Dark;
  for (const auto& idx : all_indices(L, nqubits, K, cls == NoiseClass::Classical)) {
    const Resolution r = resolve(idx, L, nqubits);
    if (r.kind == SymmetryKind::Dark) {
      dark.members.emplace_back(idx, r);
      continue;
    }
    auto& c = classes[r.rep];
    c.rep = r.rep;
    c.members.emplace_back(idx, r);
  }
  std::vector<SymmetryClass> out;
  for (auto& [rep, c] : classes) {
    c.kind = SymmetryKind::Learnable;
    out.push_back(std::move(c));
  }
  if (!dark.members.empty()) out.push_back(std::move(dark));
  return out;
}

}  // namespace caqns
