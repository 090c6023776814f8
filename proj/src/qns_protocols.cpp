#include "caqns/qns_protocols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"

namespace caqns {

DesignSystem assemble_design_matrix(const std::vector<Experiment>& experiments,
                                    const std::vector<SpectrumIndex>& learnable, int K) {
  std::vector<SpectrumIndex> cols;
  for (const auto& idx : learnable)
    if (idx.order() <= K) cols.push_back(idx);
  DesignSystem s;
  s.matrix = Mat::Zero(static_cast<Eigen::Index>(experiments.size()), static_cast<Eigen::Index>(cols.size()));
  s.offset = Vec::Zero(static_cast<Eigen::Index>(experiments.size()));
  for (size_t i = 0; i < experiments.size(); ++i) {
    const auto& e = experiments[i];
    const AffineRow row = affine_row(e.control, e.rho_matrix(), e.toggled_observable(), cols);
    s.offset(static_cast<Eigen::Index>(i)) = row.offset;
    for (size_t j = 0; j < cols.size(); ++j) s.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.row[j];
  }
  return s;
}

double condition_number(const Mat& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  // Fewer rows than unknowns, or numerically zero singular values, mean no unique solution.
  if (m.rows() < m.cols()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  if (lo <= sv(0) * 1e-12 * static_cast<double>(std::max(m.rows(), m.cols())))
    return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

Protocol make_protocol(std::vector<Experiment> experiments, std::vector<SpectrumIndex> learnable, int K) {
  Protocol p;
  if (experiments.empty()) throw ValidationError("protocol has no experiments");
  p.nqubits = experiments.front().control.nqubits();
  p.K = K;
  learnable.erase(std::remove_if(learnable.begin(), learnable.end(), [&](const SpectrumIndex& s) { return s.order() > K; }),
                  learnable.end());
  p.system = assemble_design_matrix(experiments, learnable, K);
  p.experiments = std::move(experiments);
  p.learnable = std::move(learnable);
  p.condition_number = condition_number(p.system.matrix);
  return p;
}

namespace {

Eigen::Vector3d snap_vector(const Eigen::Vector3d& v) {
  const double h = std::sqrt(0.5);
  static const Eigen::Vector3d alphabet[] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {h, h, 0}, {h, 0, h}, {0, h, h}};
  Eigen::Vector3d best = alphabet[0];
  double score = -1;
  for (const auto& a : alphabet)
    if (std::abs(a.dot(v)) > score) {
      score = std::abs(a.dot(v));
      best = a;
    }
  return best;
}

Experiment random_experiment(int nqubits, const WindowGrid& grid, bool snap, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Experiment e;
  e.grid = grid;
  if (nqubits == 1) {
    std::vector<Eigen::Vector3d> y;
    for (int n = 0; n < grid.L; ++n) {
      Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
      v.normalize();
      y.push_back(snap ? snap_vector(v) : v);
    }
    e.control = DigitalControl::single_qubit(y);
    e.rho = PauliIndex(1, static_cast<int>(rng() % 4));
    e.obs = PauliIndex(1, 1 + static_cast<int>(rng() % 3));
  } else {
    std::vector<KakParams> ps(grid.L);
    for (auto& p : ps)
      for (double& x : p) x = unit(rng);
    e.control = DigitalControl::two_qubit_kak(ps);
    e.rho = PauliIndex(2, static_cast<int>(rng() % 16));
    e.obs = PauliIndex(2, 1 + static_cast<int>(rng() % 15));
  }
  return e;
}

// Greedy selection of the first rows that raise the rank. The floor uses the
// largest row norm so rows made of roundoff alone are never accepted.
std::vector<size_t> greedy_rows(const Mat& pool, const std::vector<size_t>& order, size_t want, double tol) {
  const Eigen::Index cols = pool.cols();
  const double scale = pool.rowwise().norm().maxCoeff();
  Mat basis(cols, 0);
  std::vector<size_t> picked;
  for (size_t r : order) {
    const Vec v = pool.row(static_cast<Eigen::Index>(r)).transpose();
    const double nv = v.norm();
    if (nv <= tol * scale) continue;
    Vec res = v;
    for (int pass = 0; pass < 2; ++pass)
      if (basis.cols() > 0) res -= basis * (basis.adjoint() * res);
    const double nr = res.norm();
    if (nr <= tol * std::max(nv, 1e-3 * scale)) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = res / nr;
    picked.push_back(r);
    if (picked.size() == want) break;
  }
  return picked;
}

}  // namespace

DesignReport design_protocol(const std::vector<SpectrumIndex>& learnable, int nqubits, const WindowGrid& grid, int K,
                             const DesignOptions& options, std::uint64_t seed) {
  std::vector<SpectrumIndex> cols;
  for (const auto& idx : learnable)
    if (idx.order() <= K) cols.push_back(idx);
  const size_t N = cols.size();
  if (N == 0) throw ValidationError("learnable set is empty");
  if (options.shuffles < 1) throw ValidationError("at least one shuffle is required");
  const size_t m = options.pool_size > 0 ? static_cast<size_t>(options.pool_size) : 5 * N;
  if (m < N) throw ValidationError("candidate pool is smaller than the learnable set");
  std::mt19937_64 rng(seed);
  std::vector<Experiment> pool;
  pool.reserve(m);
  for (size_t i = 0; i < m; ++i) pool.push_back(random_experiment(nqubits, grid, options.snap, rng));
  const DesignSystem all = assemble_design_matrix(pool, cols, K);
  // Column equilibration for the rank test only: high orders carry much smaller coefficients.
  Mat scaled = all.matrix;
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const double nc = scaled.col(c).norm();
    if (nc > 0) scaled.col(c) /= nc;
  }

  DesignReport report;
  double best = std::numeric_limits<double>::infinity();
  std::vector<size_t> best_rows;
  std::vector<size_t> order(m);
  for (int s = 0; s < options.shuffles; ++s) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto rows = greedy_rows(scaled, order, N, options.rank_tolerance);
    if (rows.size() < N) {
      report.shuffle_conditions.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    Mat sub(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (size_t i = 0; i < N; ++i) sub.row(static_cast<Eigen::Index>(i)) = all.matrix.row(static_cast<Eigen::Index>(rows[i]));
    const double kappa = condition_number(sub);
    report.shuffle_conditions.push_back(kappa);
    if (kappa < best) {
      best = kappa;
      best_rows = rows;
    }
  }
  if (best_rows.empty()) throw NumericalError("candidate pool has fewer independent rows than learnable spectra; increase the pool");
  std::vector<Experiment> chosen;
  for (size_t r : best_rows) chosen.push_back(pool[r]);
  report.protocol = make_protocol(std::move(chosen), cols, K);
  return report;
}

SpectrumTable reconstruct(const Protocol& protocol, const std::vector<double>& measurements) {
  const Mat& a = protocol.system.matrix;
  if (static_cast<Eigen::Index>(measurements.size()) != a.rows())
    throw ValidationError("measurement count does not match the protocol");
  Vec b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) b(i) = measurements[static_cast<size_t>(i)] - protocol.system.offset(i);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double threshold = sv.size() ? sv(0) * 1e-12 * std::max(a.rows(), a.cols()) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > threshold;
  if (rank < a.cols()) throw NumericalError("design matrix is rank deficient");
  const Vec x = svd.solve(b);
  SpectrumTable t;
  t.grid = protocol.experiments.front().grid;
  t.nqubits = protocol.nqubits;
  for (size_t j = 0; j < protocol.learnable.size(); ++j) t.set(protocol.learnable[j], x(static_cast<Eigen::Index>(j)), "reconstructed");
  return t;
}

std::vector<Experiment> experiments_from_json(const nlohmann::json& j, const WindowGrid& grid) {
  const int nq = j.value("nqubits", 1);
  if (!j.contains("experiments") || !j.at("experiments").is_array())
    throw ValidationError("protocol file needs an 'experiments' array");
  std::vector<Experiment> out;
  size_t row = 0;
  for (const auto& e : j.at("experiments")) {
    try {
      Experiment x;
      x.control = control_from_json(e, nq);
      if (x.control.windows() != grid.L) throw ValidationError("window count differs from the protocol header");
      x.rho = PauliIndex::parse(e.at("rho").get<std::string>(), nq);
      x.obs = PauliIndex::parse(e.at("obs").get<std::string>(), nq);
      x.grid = grid;
      out.push_back(std::move(x));
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError("experiments[" + std::to_string(row) + "]: " + ex.what());
    } catch (const ValidationError& ex) {
      throw ValidationError("experiments[" + std::to_string(row) + "]: " + ex.what());
    }
    ++row;
  }
  return out;
}

namespace {

std::string rho_label(const PauliIndex& p) {
  if (p.nqubits() == 2) return "L" + std::to_string(p.code());
  return p.label();
}

}  // namespace

nlohmann::json experiments_to_json(const std::vector<Experiment>& experiments) {
  if (experiments.empty()) throw ValidationError("no experiments to write");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : experiments) {
    nlohmann::json r = e.control;
    r["rho"] = rho_label(e.rho);
    r["obs"] = e.obs.label();
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"nqubits", experiments.front().control.nqubits()},
                        {"windows", experiments.front().control.windows()},
                        {"experiments", rows}};
}

std::vector<Experiment> load_protocol_table(const std::string& path, double T) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open protocol file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(path + ": " + ex.what());
  }
  if (!j.contains("windows")) throw ValidationError(path + ": missing 'windows'");
  return experiments_from_json(j, WindowGrid(j.at("windows").get<int>(), T));
}

void save_protocol_table(const std::string& path, const std::vector<Experiment>& experiments) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << experiments_to_json(experiments).dump(1) << "\n";
}

std::vector<Experiment> with_duration(std::vector<Experiment> experiments, double T) {
  for (auto& e : experiments) e.grid = WindowGrid(e.grid.L, T);
  return experiments;
}

}  // namespace caqns
