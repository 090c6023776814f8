#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "caqns/qns_protocols.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
};

// Runs the CLI, capturing stdout; stderr goes to a file in the work directory.
Result run(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + CAQNS_CLI_PATH + "' " + args + " 2>stderr.txt";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

fs::path workdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("caqns_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string protocol(const std::string& name) { return std::string(CAQNS_DATA_DIR) + "/protocols/" + name + ".json"; }

}  // namespace

TEST_CASE("count reproduces the published totals") {
  const fs::path d = workdir("count");
  struct Case {
    std::string args;
    std::string total;
  };
  for (const Case& c : {Case{"--L 4 --qubits 1 --noise-class classical", "80"},
                        Case{"--L 2 --qubits 2 --noise-class classical", "80"}, Case{"--L 1 --qubits 1", "2"},
                        Case{"--L 2 --qubits 1 --noise-class quantum", "12"}}) {
    const Result r = run("count " + c.args, d);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("total").get<std::string>() == c.total);
  }
}

TEST_CASE("exit codes separate validation and numerical failures") {
  const fs::path d = workdir("codes");
  CHECK(run("count", d).code == 1);
  CHECK(run("count --L 0", d).code == 1);
  CHECK(run("simulate --config missing.json", d).code == 1);
  CHECK(run("--help", d).code == 0);

  write(d / "bad.json", R"({"model": {"gamma": "fast"}, "protocol": "p.json"})");
  CHECK(run("simulate --config bad.json", d).code == 1);
  CHECK(slurp(d / "stderr.txt").find("/model") != std::string::npos);
  write(d / "bad2.json", R"({"model": {"gamma": 1}, "protocol": 3})");
  CHECK(run("simulate --config bad2.json", d).code == 1);
  CHECK(slurp(d / "stderr.txt").find("/protocol") != std::string::npos);

  // The printed two-qubit table is rank deficient: reconstruction is a numerical failure.
  std::string csv = "experiment_id,value,stderr\n";
  for (int i = 0; i < 80; ++i) csv += std::to_string(i) + ",0,0\n";
  write(d / "m.csv", csv);
  write(d / "rec.json", json{{"protocol", protocol("two_qubit_l2")}, {"measurements", "m.csv"}, {"K", 8}}.dump());
  CHECK(run("reconstruct --config rec.json --out r", d).code == 2);
}

TEST_CASE("design emits a gaussian protocol with a manifest") {
  const fs::path d = workdir("design");
  REQUIRE(run("design --learnable gaussian --L 4 --seed 3 --out g", d).code == 0);
  const json p = json::parse(slurp(d / "g/protocol.json"));
  CHECK(p.at("experiments").size() == 14);
  CHECK(p.at("K") == 2);
  const json m = json::parse(slurp(d / "g/manifest.json"));
  CHECK(m.at("command") == "design");
  CHECK(m.at("seed") == 3);
  CHECK(m.at("artifacts").contains("protocol.json"));
  CHECK(m.at("artifacts").at("protocol.json").get<std::string>().size() == 64);
  // Same seed, same bytes.
  REQUIRE(run("design --learnable gaussian --L 4 --seed 3 --out h", d).code == 0);
  CHECK(slurp(d / "g/protocol.json") == slurp(d / "h/protocol.json"));
}

TEST_CASE("simulate is byte identical across reruns and thread counts") {
  const fs::path d = workdir("simulate");
  write(d / "sim.json", json{{"model", {{"gamma", 1.0}, {"g", 2.0}}},
                             {"protocol", protocol("k2c")},
                             {"T", 1.0},
                             {"n_traj", 3000}}
                            .dump());
  REQUIRE(run("simulate --config sim.json --seed 5 --threads 1 --out a", d).code == 0);
  REQUIRE(run("simulate --config sim.json --seed 5 --threads 3 --out b", d).code == 0);
  const std::string a = slurp(d / "a/measurements.csv");
  CHECK(a == slurp(d / "b/measurements.csv"));
  CHECK(a.rfind("experiment_id,value,stderr\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 15);
  // Seventeen significant digits.
  const std::string first = a.substr(a.find('\n') + 1, a.find('\n', a.find('\n') + 1) - a.find('\n') - 1);
  const std::string value = first.substr(2, first.find(',', 2) - 2);
  std::string mantissa = value.substr(0, value.find('e'));
  mantissa.erase(std::remove_if(mantissa.begin(), mantissa.end(), [](char ch) { return ch == '-' || ch == '.'; }),
                 mantissa.end());
  mantissa.erase(0, mantissa.find_first_not_of('0'));
  CHECK(mantissa.size() >= 16);
  CHECK(mantissa.size() <= 17);
  REQUIRE(run("simulate --config sim.json --seed 6 --out c", d).code == 0);
  CHECK(a != slurp(d / "c/measurements.csv"));
}

TEST_CASE("noiseless pipeline: simulate, reconstruct, predict") {
  const fs::path d = workdir("pipeline");
  write(d / "sim.json",
        json{{"model", {{"gamma", 1.0}, {"g", 0.0}}}, {"protocol", protocol("k4c")}, {"n_traj", 10}}.dump());
  REQUIRE(run("simulate --config sim.json --out s", d).code == 0);
  write(d / "rec.json", json{{"protocol", protocol("k4c")}, {"measurements", "s/measurements.csv"}, {"K", 4}}.dump());
  REQUIRE(run("reconstruct --config rec.json --out r", d).code == 0);
  const json t = json::parse(slurp(d / "r/spectra.json"));
  CHECK(t.at("records").size() == 49);
  for (const auto& rec : t.at("records")) CHECK(std::abs(rec.at("re").get<double>()) <= 1e-9);

  // Zero spectra predict the noiseless offsets Tr[ρ Õ].
  write(d / "pred.json",
        json{{"spectra", "r/spectra.json"}, {"mode", "protocol"}, {"protocol", protocol("k4c")}, {"K", 4}}.dump());
  REQUIRE(run("predict --config pred.json --out p", d).code == 0);
  const auto ex = caqns::load_protocol_table(protocol("k4c"), 1.0);
  std::istringstream csv(slurp(d / "p/predictions.csv"));
  std::string line;
  std::getline(csv, line);
  for (const auto& e : ex) {
    REQUIRE(std::getline(csv, line));
    const double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v == doctest::Approx(e.rho == e.obs ? 2.0 : 0.0).epsilon(1e-9));
  }

  write(d / "curve.json", json{{"spectra", "r/spectra.json"}, {"K", 4}}.dump());
  REQUIRE(run("predict --config curve.json --out c", d).code == 0);
  const std::string curve = slurp(d / "c/curve.csv");
  CHECK(curve.rfind("time,value,stderr\n", 0) == 0);
  CHECK(curve.find("\n1,1,0\n") != std::string::npos);
}

TEST_CASE("spectra, optimize and symmetry report run from files") {
  const fs::path d = workdir("optimize");
  write(d / "sp.json", json{{"model", {{"gamma", 1.0}, {"g", {1.0, 1.0}}}},
                            {"windows", 1},
                            {"T", 0.3},
                            {"max_order", 6},
                            {"form", "bound"}}
                           .dump());
  REQUIRE(run("spectra --config sp.json --out sp", d).code == 0);
  write(d / "opt.json", json{{"spectra", "sp/spectra.json"}, {"K", 4}, {"max_iter", 100}, {"restarts", 1}}.dump());
  REQUIRE(run("optimize --config opt.json --out o", d).code == 0);
  const json r = json::parse(slurp(d / "o/optimize.json"));
  CHECK(r.at("params").size() == 15);
  CHECK(r.at("fidelity").get<double>() >= r.at("bare_fidelity").get<double>());

  const Result s = run("symmetry-report --L 2 --qubits 1 --noise-class quantum --out sr", d);
  REQUIRE(s.code == 0);
  CHECK(s.out.find("learnable 12") != std::string::npos);
  const json classes = json::parse(slurp(d / "sr/symmetry_report.json"));
  CHECK(classes.size() == 13);
}
