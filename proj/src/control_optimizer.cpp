#include "caqns/control_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"
#include "caqns/symmetry_engine.hpp"

namespace caqns {

ProcessMatrices predict_ptm(const DigitalControl& control, const SpectrumTable& spectra, int K) {
  const int nq = control.nqubits();
  if (spectra.nqubits != nq) throw ValidationError("spectrum table and control differ in qubit count");
  if (spectra.grid.L != control.windows()) throw ValidationError("spectrum table and control use different grids");
  const int n = 1 << (2 * nq);
  const Eigen::Index d = Eigen::Index{1} << nq;
  static const cplx mi[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
  ProcessMatrices pm;
  pm.ptm = Ptm::Zero(n, n);
  pm.ptm(0, 0) = 1.0;
  for (int v = 1; v < n; ++v) {
    const Mat& lv = pauli_matrix(nq, v);
    const TensorContext ctx(control, lv);
    Mat m = Mat::Identity(d, d);
    for (const auto& [idx, e] : spectra.entries) {
      if (idx.order() > K || e.value == cplx(0)) continue;
      m += mi[idx.order() % 4] * e.value * ctx.tensor(idx);
    }
    const Mat right = lv;
    for (int u = 0; u < n; ++u)
      pm.ptm(v, u) = ((m * pauli_matrix(nq, u) * right).trace() / static_cast<double>(d)).real();
  }
  pm.chi = ptm_to_chi(pm.ptm);
  return pm;
}

double identity_fidelity(const ProcessMatrices& pm) { return pm.chi(0, 0).real(); }

int parameter_count(int nqubits, int windows) { return (nqubits == 1 ? 2 : 15) * windows; }

DigitalControl control_from_params(int nqubits, int windows, const std::vector<double>& params) {
  if (static_cast<int>(params.size()) != parameter_count(nqubits, windows))
    throw ValidationError("parameter vector has the wrong length");
  if (nqubits == 1) {
    std::vector<Eigen::Vector3d> y;
    for (int n = 0; n < windows; ++n) {
      const double th = params[2 * n], ph = params[2 * n + 1];
      y.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
    }
    return DigitalControl::single_qubit(y);
  }
  std::vector<KakParams> ps(windows);
  for (int n = 0; n < windows; ++n)
    for (int i = 0; i < 15; ++i) ps[n][i] = params[15 * n + i];
  return DigitalControl::two_qubit_kak(ps);
}

namespace {

NelderMeadResult nelder_mead_once(const std::function<double(const std::vector<double>&)>& f,
                                  const std::vector<double>& x0, const NelderMeadOptions& o) {
  const size_t dim = x0.size();
  NelderMeadResult r;
  std::vector<std::vector<double>> pts(dim + 1, x0);
  std::vector<double> vals(dim + 1);
  for (size_t i = 0; i < dim; ++i) pts[i + 1][i] += o.scale;
  for (size_t i = 0; i <= dim; ++i) vals[i] = f(pts[i]);
  r.evaluations = static_cast<int>(dim + 1);
  std::vector<size_t> idx(dim + 1);
  auto combine = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> out(dim);
    for (size_t k = 0; k < dim; ++k) out[k] = c[k] + t * (w[k] - c[k]);
    return out;
  };
  for (r.iterations = 0; r.iterations < o.max_iter; ++r.iterations) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    const size_t best = idx.front(), worst = idx.back(), second = idx[dim - 1];
    r.trace.push_back(vals[best]);
    if (std::abs(vals[worst] - vals[best]) <= o.ftol * (std::abs(vals[best]) + 1e-30) + 1e-300) {
      r.converged = true;
      break;
    }
    std::vector<double> c(dim, 0.0);
    for (size_t i = 0; i <= dim; ++i)
      if (i != worst)
        for (size_t k = 0; k < dim; ++k) c[k] += pts[i][k] / static_cast<double>(dim);
    const auto xr = combine(c, pts[worst], -1.0);
    const double fr = f(xr);
    ++r.evaluations;
    if (fr < vals[best]) {
      const auto xe = combine(c, pts[worst], -2.0);
      const double fe = f(xe);
      ++r.evaluations;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    // Outside contraction when the reflection beats the worst point, inside otherwise.
    const bool outside = fr < vals[worst];
    const auto xc = outside ? combine(c, xr, 0.5) : combine(c, pts[worst], 0.5);
    const double fc = f(xc);
    ++r.evaluations;
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      pts[i] = combine(pts[best], pts[i], 0.5);
      vals[i] = f(pts[i]);
      ++r.evaluations;
    }
  }
  const size_t best = static_cast<size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  r.x = pts[best];
  r.f = vals[best];
  return r;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x0,
                             const NelderMeadOptions& options) {
  if (x0.empty()) throw ValidationError("Nelder-Mead needs at least one parameter");
  if (options.restarts < 1 || options.max_iter < 0) throw ValidationError("invalid Nelder-Mead options");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-options.restart_spread, options.restart_spread);
  NelderMeadResult best;
  bool have = false;
  std::vector<double> all_trace;
  int iterations = 0;
  for (int s = 0; s < options.restarts; ++s) {
    std::vector<double> start = x0;
    if (s > 0)
      for (double& x : start) x += u(rng);
    NelderMeadResult r = nelder_mead_once(f, start, options);
    all_trace.insert(all_trace.end(), r.trace.begin(), r.trace.end());
    iterations += r.iterations;
    if (!have || r.f < best.f) {
      best = std::move(r);
      have = true;
    }
  }
  best.trace = std::move(all_trace);
  best.iterations = iterations;
  return best;
}

void to_json(nlohmann::json& j, const OptimizationResult& r) {
  j = nlohmann::json{{"params", r.params},         {"fidelity", r.fidelity},     {"raw_fidelity", r.raw_fidelity},
                     {"bare_fidelity", r.bare_fidelity}, {"iterations", r.iterations}, {"converged", r.converged}};
}

OptimizationResult optimize(const OptimizationProblem& problem) {
  const int L = problem.spectra.grid.L;
  const int np = parameter_count(problem.nqubits, L);
  std::vector<double> x0 = problem.initial_params;
  if (x0.empty()) x0.assign(static_cast<size_t>(np), 0.0);
  if (static_cast<int>(x0.size()) != np) throw ValidationError("initial parameters have the wrong length");
  auto fidelity = [&](const std::vector<double>& x) {
    return identity_fidelity(predict_ptm(control_from_params(problem.nqubits, L, x), problem.spectra, problem.K));
  };
  OptimizationResult out;
  out.bare_fidelity = fidelity(std::vector<double>(static_cast<size_t>(np), 0.0));
  const NelderMeadResult r = nelder_mead([&](const std::vector<double>& x) { return -fidelity(x); }, x0, problem.options);
  out.params = r.x;
  out.raw_fidelity = -r.f;
  out.fidelity = std::clamp(out.raw_fidelity, 0.0, 1.0);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.trace.reserve(r.trace.size());
  for (double v : r.trace) out.trace.push_back(-v);
  return out;
}

std::vector<SweepRow> fidelity_sweep(const NoiseModel& model, const std::vector<double>& g_over_gamma,
                                     const SweepConfig& config) {
  std::vector<SweepRow> rows;
  const int nq = model.nqubits();
  const auto raw_indices = all_indices(config.grid.L, nq, config.K + 2, true);
  for (double ratio : g_over_gamma) {
    NoiseModel m = model;
    for (double& g : m.g) g = ratio * model.gamma;
    const SpectrumTable spectra = bound_form(exact_table(m, config.grid, raw_indices));
    OptimizationProblem p;
    p.spectra = spectra;
    p.K = config.K;
    p.nqubits = nq;
    p.options = config.options;
    const OptimizationResult r = optimize(p);
    SweepRow row;
    row.g_over_gamma = ratio;
    row.bare_surrogate = r.bare_fidelity;
    row.opt_surrogate = r.fidelity;
    const auto mc = [&](const std::vector<double>& x) {
      const Ptm ptm = simulate_ptm(control_from_params(nq, config.grid.L, x), config.grid, m, config.sim);
      return ptm_to_chi(ptm)(0, 0).real();
    };
    row.bare_mc = mc(std::vector<double>(r.params.size(), 0.0));
    row.opt_mc = mc(r.params);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace caqns
