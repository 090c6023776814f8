#include "caqns/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "caqns/errors.hpp"

namespace caqns {

// ---------------------------------------------------------------- indices

SpectrumIndex::SpectrumIndex(std::vector<int> n_, std::vector<int> mu_, std::vector<int> q_)
    : n(std::move(n_)), mu(std::move(mu_)), q(std::move(q_)) {
  if (q.empty()) q.assign(n.size(), 0);
  if (mu.empty() && n.size() > 1) mu.assign(n.size() - 1, 0);
}

bool SpectrumIndex::classical() const {
  return std::all_of(mu.begin(), mu.end(), [](int b) { return b == 0; });
}

bool SpectrumIndex::time_ordered() const {
  for (size_t j = 1; j < n.size(); ++j)
    if (n[j] > n[j - 1]) return false;
  return true;
}

void SpectrumIndex::validate(int windows, int nqubits, bool allow_unordered) const {
  const size_t k = n.size();
  if (k == 0) throw ValidationError("spectrum index must have order >= 1");
  if (q.size() != k) throw ValidationError("q-string length must equal the order");
  if (mu.size() != k - 1) throw ValidationError("mu-string length must be order - 1");
  for (size_t j = 0; j < k; ++j) {
    if (n[j] < 1 || n[j] > windows) throw ValidationError("window index out of range in " + label());
    if (!allow_unordered && j > 0 && n[j] > n[j - 1]) throw ValidationError("window indices must be nonincreasing in " + label());
    if (q[j] < 0 || q[j] >= nqubits) throw ValidationError("qubit label out of range in " + label());
  }
  for (int b : mu)
    if (b != 0 && b != 1) throw ValidationError("mu bits must be 0 or 1");
}

std::string SpectrumIndex::label() const {
  std::ostringstream os;
  os << "S^(";
  for (size_t j = 0; j < mu.size(); ++j) os << (j ? "," : "") << mu[j];
  os << ")_{";
  for (size_t j = 0; j < q.size(); ++j) os << (j ? "," : "") << (q[j] == 0 ? 'A' : 'B');
  os << "}(";
  for (size_t j = 0; j < n.size(); ++j) os << (j ? "," : "") << n[j];
  os << ")";
  return os.str();
}

void to_json(nlohmann::json& j, const SpectrumIndex& s) {
  j = nlohmann::json{{"k", s.order()}, {"n", s.n}, {"mu", s.mu}, {"q", s.q}};
}

void from_json(const nlohmann::json& j, SpectrumIndex& s) {
  std::vector<int> n = j.at("n").get<std::vector<int>>();
  std::vector<int> mu = j.contains("mu") ? j.at("mu").get<std::vector<int>>() : std::vector<int>{};
  std::vector<int> q = j.contains("q") ? j.at("q").get<std::vector<int>>() : std::vector<int>{};
  s = SpectrumIndex(std::move(n), std::move(mu), std::move(q));
  if (j.contains("k") && j.at("k").get<int>() != s.order()) throw ValidationError("record k does not match n");
}

// ---------------------------------------------------------------- model

int NoiseModel::process_count() const {
  return topology == Topology::Shared ? 1 : nqubits();
}

int NoiseModel::process_of(int q) const { return topology == Topology::Shared ? 0 : q; }

void NoiseModel::validate() const {
  if (!(gamma >= 0)) throw ValidationError("gamma must be nonnegative");
  if (g.empty() || g.size() > 2) throw ValidationError("one or two coupling strengths are required");
  if (!(shift >= 0)) throw ValidationError("shift must be nonnegative");
  if (!(omega >= 0)) throw ValidationError("omega must be nonnegative");
  if (bath == BathKind::Toy && nqubits() != 1) throw ValidationError("the toy quantum bath is single-qubit");
  if (bath == BathKind::Toy && omega != 0) throw ValidationError("the toy quantum bath has no modulation");
}

void to_json(nlohmann::json& j, const NoiseModel& m) {
  j = nlohmann::json{{"gamma", m.gamma},
                     {"g", m.g},
                     {"init", m.init == InitLaw::Fixed ? "fixed" : "symmetric"},
                     {"topology", m.topology == Topology::Shared ? "shared" : "independent"},
                     {"bath", m.bath == BathKind::Classical ? "classical" : "toy"},
                     {"shift", m.shift},
                     {"omega", m.omega}};
}

void from_json(const nlohmann::json& j, NoiseModel& m) {
  m = NoiseModel{};
  m.gamma = j.value("gamma", 1.0);
  if (j.contains("g")) {
    if (j.at("g").is_array())
      m.g = j.at("g").get<std::vector<double>>();
    else
      m.g = {j.at("g").get<double>()};
  }
  if (j.contains("nqubits") && m.g.size() == 1 && j.at("nqubits").get<int>() == 2) m.g = {m.g[0], m.g[0]};
  const std::string init = j.value("init", "symmetric");
  if (init == "fixed")
    m.init = InitLaw::Fixed;
  else if (init == "symmetric")
    m.init = InitLaw::Symmetric;
  else
    throw ValidationError("init must be 'fixed' or 'symmetric'");
  const std::string topo = j.value("topology", "shared");
  if (topo == "shared")
    m.topology = Topology::Shared;
  else if (topo == "independent")
    m.topology = Topology::Independent;
  else
    throw ValidationError("topology must be 'shared' or 'independent'");
  const std::string bath = j.value("bath", "classical");
  if (bath == "classical")
    m.bath = BathKind::Classical;
  else if (bath == "toy")
    m.bath = BathKind::Toy;
  else
    throw ValidationError("bath must be 'classical' or 'toy'");
  m.shift = j.value("shift", 0.0);
  m.omega = j.value("omega", 0.0);
  m.validate();
}

// ---------------------------------------------------------------- paths

double RtnPath::value(double t) const {
  const auto flips = std::upper_bound(switches.begin(), switches.end(), t) - switches.begin();
  return (flips % 2 == 0) ? initial : -initial;
}

namespace {

// Calls f(a, b, sign) for each constant piece of the path inside [a, b].
template <class F>
void for_each_piece(const RtnPath& p, double a, double b, F&& f) {
  if (b <= a) return;
  auto it = std::upper_bound(p.switches.begin(), p.switches.end(), a);
  double sign = ((it - p.switches.begin()) % 2 == 0) ? p.initial : -p.initial;
  double start = a;
  for (; it != p.switches.end() && *it < b; ++it) {
    f(start, *it, sign);
    start = *it;
    sign = -sign;
  }
  f(start, b, sign);
}

}  // namespace

double RtnPath::integral(double a, double b) const {
  double acc = 0.0;
  for_each_piece(*this, a, b, [&](double u, double v, double s) { acc += s * (v - u); });
  return acc;
}

double RtnPath::modulated_integral(double a, double b, double omega, double phase) const {
  if (omega == 0.0) return std::cos(phase) * integral(a, b);
  double acc = 0.0;
  for_each_piece(*this, a, b, [&](double u, double v, double s) {
    acc += s * (std::sin(omega * v + phase) - std::sin(omega * u + phase)) / omega;
  });
  return acc;
}

RtnPath sample_path(const NoiseModel& model, double horizon, std::mt19937_64& rng) {
  RtnPath p;
  p.horizon = horizon;
  if (model.init == InitLaw::Symmetric) p.initial = (rng() & 1u) ? 1 : -1;
  if (model.gamma > 0) {
    std::exponential_distribution<double> wait(model.gamma);
    double t = wait(rng);
    while (t < horizon) {
      p.switches.push_back(t);
      t += wait(rng);
    }
  }
  return p;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- moments

double pure_moment(const NoiseModel& model, const std::vector<double>& times) {
  for (size_t j = 1; j < times.size(); ++j)
    if (times[j] > times[j - 1]) throw ValidationError("pure_moment expects nonincreasing times");
  double out = 1.0;
  size_t j = 0;
  for (; j + 1 < times.size(); j += 2) out *= std::exp(-2.0 * model.gamma * (times[j] - times[j + 1]));
  if (j < times.size()) {
    if (model.init == InitLaw::Symmetric) return 0.0;
    out *= std::exp(-2.0 * model.gamma * times[j]);
  }
  return out;
}

namespace {

// Nested bracket of bath operators (toy bath), returns Tr[ρ_B N] with ρ_B = |0><0|.
cplx toy_bracket(const std::vector<int>& channels, const std::vector<int>& mu) {
  Eigen::Matrix2cd tx, ty;
  tx << 0, 1, 1, 0;
  ty << 0, cplx(0, -1), cplx(0, 1), 0;
  auto op = [&](int c) { return c == 0 ? tx : ty; };
  Eigen::Matrix2cd x = op(channels[0]);
  for (size_t j = 1; j < channels.size(); ++j) {
    const Eigen::Matrix2cd y = op(channels[j]);
    const double s = mu[j - 1] ? -1.0 : 1.0;
    x = (x * y + s * y * x).eval();
  }
  return x(0, 0);
}

}  // namespace

std::vector<CorrelatorTerm> correlator_terms(const NoiseModel& model, const std::vector<int>& mu,
                                             const std::vector<int>& q) {
  const size_t k = q.size();
  if (mu.size() + 1 != k) throw ValidationError("mu-string length must be order - 1");
  cplx coupling = 1.0;
  for (int qq : q) coupling *= model.g.at(qq);
  std::vector<CorrelatorTerm> out;
  if (model.bath == BathKind::Classical) {
    if (std::any_of(mu.begin(), mu.end(), [](int b) { return b != 0; })) return out;
    CorrelatorTerm t{coupling, {}};
    for (int qq : q) t.src.push_back({model.process_of(qq), 0.0});
    out.push_back(std::move(t));
    return out;
  }
  const double norm = std::ldexp(1.0, -static_cast<int>(k - 1));
  std::vector<int> ch(k, 0);
  for (std::uint64_t bits = 0; bits < (1ULL << k); ++bits) {
    for (size_t j = 0; j < k; ++j) ch[j] = (bits >> j) & 1u;
    const cplx w = toy_bracket(ch, mu);
    if (std::abs(w) < 1e-15) continue;
    CorrelatorTerm t{coupling * w * norm, {}};
    for (size_t j = 0; j < k; ++j) t.src.push_back({0, ch[j] ? model.shift : 0.0});
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

cplx term_moment(const NoiseModel& model, const CorrelatorTerm& term, const std::vector<double>& times) {
  std::vector<std::vector<double>> per(model.process_count());
  for (size_t j = 0; j < times.size(); ++j) per[term.src[j].process].push_back(times[j] + term.src[j].shift);
  double m = 1.0;
  for (auto& ts : per) {
    std::sort(ts.begin(), ts.end(), std::greater<>());
    m *= pure_moment(model, ts);
  }
  return term.weight * m;
}

}  // namespace

cplx nested_bracket_correlator(const NoiseModel& model, const std::vector<int>& mu, const std::vector<int>& q,
                               const std::vector<double>& times) {
  if (times.size() != q.size()) throw ValidationError("one time per slot is required");
  cplx acc = 0.0;
  for (const auto& term : correlator_terms(model, mu, q)) {
    cplx mod = 1.0;
    for (size_t j = 0; j < times.size(); ++j) mod *= std::cos(model.omega * (times[j] + term.src[j].shift));
    acc += mod * term_moment(model, term, times);
  }
  return acc;
}

// ---------------------------------------------------------------- tables

void SpectrumTable::set(const SpectrumIndex& idx, cplx v, const std::string& provenance) {
  entries[idx] = SpectrumEntry{v, provenance};
}

cplx SpectrumTable::value(const SpectrumIndex& idx) const {
  auto it = entries.find(idx);
  if (it == entries.end()) throw ValidationError("missing spectrum " + idx.label());
  return it->second.value;
}

std::optional<cplx> SpectrumTable::find(const SpectrumIndex& idx) const {
  auto it = entries.find(idx);
  if (it == entries.end()) return std::nullopt;
  return it->second.value;
}

int SpectrumTable::max_order() const {
  int k = 0;
  for (const auto& [idx, e] : entries) k = std::max(k, idx.order());
  return k;
}

void to_json(nlohmann::json& j, const SpectrumTable& t) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& [idx, e] : t.entries) {
    nlohmann::json r = idx;
    r["re"] = e.value.real();
    r["im"] = e.value.imag();
    r["provenance"] = e.provenance;
    recs.push_back(std::move(r));
  }
  j = nlohmann::json{{"windows", t.grid.L}, {"T", t.grid.T}, {"nqubits", t.nqubits}, {"records", recs}};
}

void from_json(const nlohmann::json& j, SpectrumTable& t) {
  t = SpectrumTable{};
  t.grid = WindowGrid(j.at("windows").get<int>(), j.at("T").get<double>());
  t.nqubits = j.value("nqubits", 1);
  for (const auto& r : j.at("records")) {
    SpectrumIndex idx = r.get<SpectrumIndex>();
    idx.validate(t.grid.L, t.nqubits);
    t.set(idx, cplx(r.at("re").get<double>(), r.value("im", 0.0)), r.value("provenance", "input"));
  }
}

std::vector<SpectrumIndex> all_indices(int windows, int nqubits, int max_order, bool classical_only) {
  std::vector<SpectrumIndex> out;
  for (int k = 1; k <= max_order; ++k) {
    std::vector<int> n(k, windows);
    while (true) {
      const std::uint64_t nmu = classical_only ? 1 : (1ULL << (k - 1));
      const std::uint64_t nq = 1ULL << (k * (nqubits - 1));
      for (std::uint64_t mb = 0; mb < nmu; ++mb)
        for (std::uint64_t qb = 0; qb < nq; ++qb) {
          std::vector<int> mu(k - 1), q(k, 0);
          for (int j = 0; j < k - 1; ++j) mu[j] = (mb >> (k - 2 - j)) & 1u;
          if (nqubits == 2)
            for (int j = 0; j < k; ++j) q[j] = (qb >> (k - 1 - j)) & 1u;
          out.emplace_back(n, mu, q);
        }
      // Next nonincreasing string in reverse-lexicographic order.
      int j = k - 1;
      while (j >= 0 && n[j] == 1) --j;
      if (j < 0) break;
      --n[j];
      for (int i = j + 1; i < k; ++i) n[i] = n[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------- exact integration

namespace {

// ∫_{1 >= u_1 >= ... >= u_m >= 0} exp(Σ b_i u_i) equals the divided difference
// of exp over the prefix sums {0, b_1, b_1 + b_2, ...}.
cplx ordered_simplex_integral(const std::vector<cplx>& b) {
  const int m = static_cast<int>(b.size());
  Mat a = Mat::Zero(m + 1, m + 1);
  cplx prefix = 0.0;
  for (int i = 0; i < m; ++i) {
    prefix += b[i];
    a(i + 1, i + 1) = prefix;
    a(i, i + 1) = 1.0;
  }
  const Mat e = a.exp();
  return e(0, m);
}

// ∫ over the ordered region of the index of C exp(Σ a_j t_j).
cplx integrate_exponential(const WindowGrid& grid, const std::vector<int>& n, const std::vector<cplx>& a) {
  const double tau = grid.tau();
  cplx out = 1.0;
  size_t start = 0;
  while (start < n.size()) {
    size_t end = start;
    while (end < n.size() && n[end] == n[start]) ++end;
    const double lo = grid.lower(n[start]);
    std::vector<cplx> b;
    cplx total = 0.0;
    for (size_t j = start; j < end; ++j) {
      b.push_back(a[j] * tau);
      total += a[j];
    }
    out *= std::exp(lo * total) * std::pow(tau, static_cast<double>(end - start)) * ordered_simplex_integral(b);
    start = end;
  }
  return out;
}

}  // namespace

cplx ca_spectrum_exact(const NoiseModel& model, const WindowGrid& grid, const SpectrumIndex& idx) {
  idx.validate(grid.L, model.nqubits(), true);
  if (!idx.time_ordered()) return 0.0;
  const size_t k = idx.n.size();
  cplx total = 0.0;
  for (const auto& term : correlator_terms(model, idx.mu, idx.q)) {
    // Fixed ordering of shifted times for each process.
    std::vector<std::vector<size_t>> per(model.process_count());
    for (size_t j = 0; j < k; ++j) per[term.src[j].process].push_back(j);
    std::vector<cplx> a(k, 0.0);
    cplx c = term.weight;
    bool vanishes = false;
    for (auto& slots : per) {
      for (size_t x = 0; x < slots.size(); ++x)
        for (size_t y = x + 1; y < slots.size(); ++y) {
          const double gap = term.src[slots[y]].shift - term.src[slots[x]].shift;
          if (gap > 0 && gap < grid.T)
            throw ValidationError("exact integration needs shift == 0 or shift >= T; use Monte Carlo");
        }
      std::stable_sort(slots.begin(), slots.end(),
                       [&](size_t x, size_t y) { return term.src[x].shift > term.src[y].shift; });
      size_t p = 0;
      for (; p + 1 < slots.size(); p += 2) {
        const size_t hi = slots[p], lo = slots[p + 1];
        a[hi] += -2.0 * model.gamma;
        a[lo] += 2.0 * model.gamma;
        c *= std::exp(-2.0 * model.gamma * (term.src[hi].shift - term.src[lo].shift));
      }
      if (p < slots.size()) {
        if (model.init == InitLaw::Symmetric) {
          vanishes = true;
          break;
        }
        a[slots[p]] += -2.0 * model.gamma;
        c *= std::exp(-2.0 * model.gamma * term.src[slots[p]].shift);
      }
    }
    if (vanishes) continue;
    if (model.omega == 0.0) {
      total += c * integrate_exponential(grid, idx.n, a);
      continue;
    }
    // cos(Ω(t + s)) = (e^{iΩ(t+s)} + e^{-iΩ(t+s)}) / 2 for every slot.
    for (std::uint64_t bits = 0; bits < (1ULL << k); ++bits) {
      std::vector<cplx> aa = a;
      cplx cc = c;
      for (size_t j = 0; j < k; ++j) {
        const double s = ((bits >> j) & 1u) ? -1.0 : 1.0;
        aa[j] += cplx(0, s * model.omega);
        cc *= 0.5 * std::exp(cplx(0, s * model.omega * term.src[j].shift));
      }
      total += cc * integrate_exponential(grid, idx.n, aa);
    }
  }
  return total;
}

SpectrumTable exact_table(const NoiseModel& model, const WindowGrid& grid, const std::vector<SpectrumIndex>& indices) {
  SpectrumTable t;
  t.grid = grid;
  t.nqubits = model.nqubits();
  for (const auto& idx : indices) t.set(idx, ca_spectrum_exact(model, grid, idx), "exact");
  return t;
}

// ---------------------------------------------------------------- Monte Carlo

namespace {

// ∫_{hi >= t_1 >= ... >= t_m >= lo} Π f_j(t_j) for piecewise-constant f_j.
double iterated_block_integral(const std::vector<const RtnPath*>& paths, const std::vector<double>& shifts, double lo,
                               double hi) {
  const size_t m = paths.size();
  std::vector<double> cuts{lo, hi};
  for (size_t j = 0; j < m; ++j)
    for (double s : paths[j]->switches) {
      const double t = s - shifts[j];
      if (t > lo && t < hi) cuts.push_back(t);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // g[j] = G_j at the current cut, where G_m = ∫ f_m and G_j = ∫ f_j G_{j+1}.
  std::vector<double> g(m + 1, 0.0);
  g[m] = 1.0;  // G_{m+1} = 1
  std::vector<std::vector<double>> poly(m + 1);
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], h = cuts[c + 1] - a;
    const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
    // Polynomials in x = t - a on this piece, built from the innermost slot outward.
    poly[m] = {1.0};
    for (size_t jj = m; jj-- > 0;) {
      const double f = paths[jj]->value(mid + shifts[jj]);
      const auto& inner = poly[jj + 1];
      std::vector<double> p(inner.size() + 1, 0.0);
      p[0] = g[jj];
      for (size_t d = 0; d < inner.size(); ++d) p[d + 1] = f * inner[d] / static_cast<double>(d + 1);
      poly[jj] = std::move(p);
    }
    for (size_t jj = 0; jj < m; ++jj) {
      double v = 0.0;
      for (size_t d = poly[jj].size(); d-- > 0;) v = v * h + poly[jj][d];
      g[jj] = v;
    }
  }
  return g[0];
}

}  // namespace

McEstimate ca_spectrum_mc(const NoiseModel& model, const WindowGrid& grid, const SpectrumIndex& idx,
                          std::int64_t n_traj, std::uint64_t seed) {
  idx.validate(grid.L, model.nqubits(), true);
  if (model.omega != 0.0) throw ValidationError("Monte Carlo spectra do not support modulation");
  if (n_traj < 2) throw ValidationError("at least two trajectories are required");
  if (!idx.time_ordered()) return {};
  const auto terms = correlator_terms(model, idx.mu, idx.q);
  const double horizon = grid.T + model.shift;
  double sr = 0, sr2 = 0, si = 0, si2 = 0;
  for (std::int64_t t = 0; t < n_traj; ++t) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<RtnPath> paths;
    for (int p = 0; p < model.process_count(); ++p) paths.push_back(sample_path(model, horizon, rng));
    cplx v = 0.0;
    for (const auto& term : terms) {
      double prod = 1.0;
      size_t start = 0;
      while (start < idx.n.size() && prod != 0.0) {
        size_t end = start;
        while (end < idx.n.size() && idx.n[end] == idx.n[start]) ++end;
        std::vector<const RtnPath*> ps;
        std::vector<double> sh;
        for (size_t j = start; j < end; ++j) {
          ps.push_back(&paths[term.src[j].process]);
          sh.push_back(term.src[j].shift);
        }
        prod *= iterated_block_integral(ps, sh, grid.lower(idx.n[start]), grid.upper(idx.n[start]));
        start = end;
      }
      v += term.weight * prod;
    }
    sr += v.real();
    sr2 += v.real() * v.real();
    si += v.imag();
    si2 += v.imag() * v.imag();
  }
  const double n = static_cast<double>(n_traj);
  McEstimate e;
  e.value = cplx(sr / n, si / n);
  e.stderr_re = std::sqrt(std::max(0.0, sr2 / n - (sr / n) * (sr / n)) / (n - 1));
  e.stderr_im = std::sqrt(std::max(0.0, si2 / n - (si / n) * (si / n)) / (n - 1));
  return e;
}

}  // namespace caqns
