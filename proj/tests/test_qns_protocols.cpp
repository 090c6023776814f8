#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"
#include "caqns/qns_protocols.hpp"
#include "caqns/symmetry_engine.hpp"

using namespace caqns;

namespace {

std::string fixture(const std::string& name) { return std::string(CAQNS_DATA_DIR) + "/protocols/" + name + ".json"; }

std::vector<double> synthetic_measurements(const Protocol& p, const std::vector<double>& x) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < p.system.matrix.rows(); ++i) {
    cplx v = p.system.offset(i);
    for (size_t j = 0; j < x.size(); ++j) v += p.system.matrix(i, static_cast<Eigen::Index>(j)) * x[j];
    out.push_back(v.real());
  }
  return out;
}

}  // namespace

TEST_CASE("protocol fixtures load with the published row counts") {
  const std::vector<std::pair<std::string, size_t>> rows = {{"k2c", 14},           {"k4c", 49},
                                                            {"k2q", 20},           {"k4q", 85},
                                                            {"fundamental_l4", 80}, {"two_qubit_l2", 80}};
  for (const auto& [name, count] : rows) {
    const auto ex = load_protocol_table(fixture(name), 4.0);
    CHECK(ex.size() == count);
    CHECK(ex.front().grid.T == 4.0);
  }
  CHECK_THROWS_AS(load_protocol_table(fixture("missing"), 1.0), ValidationError);
}

TEST_CASE("single qubit fixtures are square and well posed") {
  struct Case {
    std::string name;
    NoiseClass cls;
    int K;
  };
  for (const Case& c : {Case{"k2c", NoiseClass::Classical, 2}, Case{"k4c", NoiseClass::Classical, 4},
                        Case{"k2q", NoiseClass::Quantum, 2}, Case{"fundamental_l4", NoiseClass::Classical, 8}}) {
    const auto learnable = enumerate_learnable(4, 1, c.cls, c.K);
    const Protocol p = make_protocol(load_protocol_table(fixture(c.name), 1.0), learnable, c.K);
    CHECK(p.system.matrix.rows() == static_cast<Eigen::Index>(learnable.size()));
    CHECK(std::isfinite(p.condition_number));
    CHECK(p.condition_number < 1e5);
  }
}

TEST_CASE("design rows equal dyson coefficients") {
  const auto ex = load_protocol_table(fixture("k2c"), 1.0);
  const auto learnable = enumerate_learnable(4, 1, NoiseClass::Classical, 2);
  const DesignSystem sys = assemble_design_matrix(ex, learnable, 2);
  for (size_t i = 0; i < ex.size(); i += 5) {
    const AffineRow row = affine_row(ex[i].control, ex[i].rho_matrix(), ex[i].toggled_observable(), learnable);
    CHECK(row.offset == sys.offset(static_cast<Eigen::Index>(i)));
    for (size_t j = 0; j < learnable.size(); ++j)
      CHECK(row.row[j] == sys.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
}

TEST_CASE("reconstruction round trip on the fundamental protocol") {
  const auto learnable = enumerate_learnable(4, 1, NoiseClass::Classical);
  const Protocol p = make_protocol(load_protocol_table(fixture("fundamental_l4"), 1.0), learnable, 8);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> x(learnable.size());
  for (double& v : x) v = g(rng);
  const SpectrumTable t = reconstruct(p, synthetic_measurements(p, x));
  for (size_t j = 0; j < learnable.size(); ++j) CHECK(std::abs(t.value(learnable[j]) - x[j]) <= 1e-6 * (1.0 + std::abs(x[j])));
  CHECK(t.entries.begin()->second.provenance == "reconstructed");

  // Reordering the experiments does not change the estimate.
  std::vector<Experiment> shuffled = p.experiments;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const Protocol q = make_protocol(shuffled, learnable, 8);
  const SpectrumTable u = reconstruct(q, synthetic_measurements(q, x));
  for (size_t j = 0; j < learnable.size(); ++j) CHECK(std::abs(u.value(learnable[j]) - t.value(learnable[j])) <= 1e-8);
  CHECK_THROWS_AS(reconstruct(p, std::vector<double>(3, 0.0)), ValidationError);
}

TEST_CASE("rank deficient systems are rejected") {
  const auto learnable = enumerate_learnable(2, 2, NoiseClass::Classical);
  const Protocol p = make_protocol(load_protocol_table(fixture("two_qubit_l2"), 1.0), learnable, 8);
  CHECK_FALSE(std::isfinite(p.condition_number));
  CHECK_THROWS_AS(reconstruct(p, std::vector<double>(80, 0.0)), NumericalError);
}

TEST_CASE("design a gaussian protocol") {
  const auto learnable = enumerate_learnable(4, 1, NoiseClass::Classical, 2);
  DesignOptions opts;
  opts.shuffles = 10;
  opts.snap = true;
  const DesignReport r = design_protocol(learnable, 1, WindowGrid(4, 1.0), 2, opts, 5);
  CHECK(r.protocol.experiments.size() == 14);
  CHECK(std::isfinite(r.protocol.condition_number));
  CHECK(r.shuffle_conditions.size() == 10);
  CHECK(r.protocol.condition_number == *std::min_element(r.shuffle_conditions.begin(), r.shuffle_conditions.end()));
  // The same seed gives the same design.
  const DesignReport again = design_protocol(learnable, 1, WindowGrid(4, 1.0), 2, opts, 5);
  CHECK(again.protocol.condition_number == r.protocol.condition_number);
}

TEST_CASE("design a two qubit fundamental protocol") {
  const auto learnable = enumerate_learnable(2, 2, NoiseClass::Classical);
  DesignOptions opts;
  opts.shuffles = 3;
  const DesignReport r = design_protocol(learnable, 2, WindowGrid(2, 1.0), 8, opts, 9);
  CHECK(r.protocol.experiments.size() == 80);
  CHECK(std::isfinite(r.protocol.condition_number));
}

TEST_CASE("protocol files round trip") {
  const auto ex = load_protocol_table(fixture("two_qubit_l2"), 1.0);
  const std::string path = "caqns_protocol_roundtrip.json";
  save_protocol_table(path, ex);
  const auto back = load_protocol_table(path, 1.0);
  std::remove(path.c_str());
  REQUIRE(back.size() == ex.size());
  for (size_t i = 0; i < ex.size(); ++i) {
    CHECK(back[i].rho == ex[i].rho);
    CHECK(back[i].control.kak_params() == ex[i].control.kak_params());
  }
  const auto longer = with_duration(ex, 3.0);
  CHECK(longer[0].grid.T == 3.0);
  CHECK(longer[0].grid.L == 2);
  CHECK_THROWS_AS(experiments_from_json(nlohmann::json{{"nqubits", 1}}, WindowGrid(1, 1.0)), ValidationError);
}
