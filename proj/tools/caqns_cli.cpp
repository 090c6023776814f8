// caqns: command-line front end. Each subcommand is a pure function of its
// config and seed; outputs go to --out together with a manifest.json.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "caqns/control_optimizer.hpp"
#include "caqns/dyson_engine.hpp"
#include "caqns/errors.hpp"
#include "caqns/qns_protocols.hpp"
#include "caqns/symmetry_engine.hpp"
#include "caqns/trajectory_sim.hpp"

using namespace caqns;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;  // empty: current directory (count prints only)
  int threads = 0;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Typed config access that reports the offending key path.
template <typename T>
T field(const json& j, const std::string& key, const T& fallback, const std::string& where = "") {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "/" + key + ": " + e.what());
  }
}

template <typename T>
T required(const json& j, const std::string& key, const std::string& where = "") {
  if (!j.contains(key)) throw ValidationError(where + "/" + key + ": missing");
  return field<T>(j, key, T{}, where);
}

NoiseModel model_from(const json& cfg) {
  if (!cfg.contains("model")) throw ValidationError("/model: missing");
  try {
    NoiseModel m = cfg.at("model").get<NoiseModel>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("/model: ") + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("/model: ") + e.what());
  }
}

// Resolves a path in the config relative to the config file.
std::string config_path(const Common& c, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || c.config.empty()) return p;
  return (fs::path(c.config).parent_path() / p).string();
}

class Run {
 public:
  Run(std::string command, const Common& common, json config)
      : command_(std::move(command)), common_(common), config_(std::move(config)), started_(utc_now()) {
    if (common_.out.empty()) common_.out = ".";
    fs::create_directories(common_.out);
  }

  std::uint64_t seed() const {
    if (common_.seed_set) return common_.seed;
    return field<std::uint64_t>(config_, "seed", 1);
  }

  fs::path path(const std::string& name) {
    artifacts_.push_back(name);
    return fs::path(common_.out) / name;
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream out(path(name));
    out << j.dump(1) << "\n";
  }

  void finish() {
    json hashes = json::object();
    for (const auto& a : artifacts_) hashes[a] = sha256_file(fs::path(common_.out) / a);
    json m{{"command", command_},         {"config_path", common_.config}, {"config", config_},
           {"seed", seed()},              {"threads", resolve_threads(common_.threads)},
           {"started", started_},         {"finished", utc_now()},         {"artifacts", hashes}};
    std::ofstream out(fs::path(common_.out) / "manifest.json");
    out << m.dump(1) << "\n";
  }

 private:
  std::string command_;
  Common common_;
  json config_;
  std::string started_;
  std::vector<std::string> artifacts_;
};

class CsvWriter {
 public:
  CsvWriter(const fs::path& p, const std::string& header) : out_(p) {
    if (!out_) throw ValidationError("cannot write " + p.string());
    out_ << std::setprecision(17) << header << "\n";
  }
  template <typename... Args>
  void row(const Args&... args) {
    bool first = true;
    ((out_ << (first ? "" : ",") << args, first = false), ...);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

std::vector<double> read_measurements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream s(line);
    std::string id, value;
    std::getline(s, id, ',');
    std::getline(s, value, ',');
    try {
      if (std::stoul(id) != out.size()) throw ValidationError("");
      out.push_back(std::stod(value));
    } catch (const std::exception&) {
      throw ValidationError(path + ": line " + std::to_string(row) + ": expected experiment_id,value");
    }
  }
  return out;
}

json load_config(const Common& c) { return c.config.empty() ? json::object() : read_json(c.config); }

SimulationConfig sim_config(const json& cfg, const Common& c, std::uint64_t seed) {
  SimulationConfig s;
  s.n_traj = field<std::int64_t>(cfg, "n_traj", 10000);
  s.shots = field<std::int64_t>(cfg, "shots", 0);
  s.seed = seed;
  s.threads = c.threads;
  return s;
}

int default_order(int L, int nq, int K) { return K > 0 ? K : 2 * nq * L; }

// Subcommands.

void cmd_count(const Common& c, int L, int nq, const std::string& cls_name, const std::string& method) {
  const NoiseClass cls = parse_noise_class(cls_name);
  const bool enumerate = method == "enumerated" || (method.empty() && cls == NoiseClass::Quantum);
  if (!method.empty() && method != "enumerated" && method != "closed")
    throw ValidationError("--method must be 'closed' or 'enumerated'");
  const ComplexityReport r = enumerate ? count_learnable_enumerated(L, nq, cls) : count_learnable_closed_form(L, nq, cls);
  const json j = r;
  std::cout << j.dump(1) << "\n";
  if (!c.out.empty()) {
    Run run("count", c, json{{"L", L}, {"qubits", nq}, {"noise_class", cls_name}, {"method", method}});
    run.write_json("count.json", j);
    run.finish();
  }
}

void cmd_simulate(const Common& c) {
  const json cfg = load_config(c);
  Run run("simulate", c, cfg);
  const NoiseModel model = model_from(cfg);
  const double T = field<double>(cfg, "T", 1.0);
  const auto experiments = load_protocol_table(config_path(c, required<std::string>(cfg, "protocol")), T);
  const auto est = simulate_experiments(experiments, model, sim_config(cfg, c, run.seed()));
  CsvWriter csv(run.path("measurements.csv"), "experiment_id,value,stderr");
  for (size_t i = 0; i < est.size(); ++i) csv.row(i, est[i].value, est[i].stderr_);
  run.finish();
}

void cmd_spectra(const Common& c) {
  const json cfg = load_config(c);
  Run run("spectra", c, cfg);
  const NoiseModel model = model_from(cfg);
  const WindowGrid grid(field<int>(cfg, "windows", 1), field<double>(cfg, "T", 1.0));
  const int order = field<int>(cfg, "max_order", 2 * model.nqubits() * grid.L);
  const bool classical = field<bool>(cfg, "classical_only", model.bath == BathKind::Classical);
  const std::string method = field<std::string>(cfg, "method", "exact");
  const std::string form = field<std::string>(cfg, "form", "raw");
  const auto indices = all_indices(grid.L, model.nqubits(), order, classical);
  SpectrumTable t;
  if (method == "exact") {
    t = exact_table(model, grid, indices);
  } else if (method == "mc") {
    t.grid = grid;
    t.nqubits = model.nqubits();
    const std::int64_t n = field<std::int64_t>(cfg, "n_traj", 10000);
    for (const auto& idx : indices) t.set(idx, ca_spectrum_mc(model, grid, idx, n, run.seed()).value, "mc");
  } else {
    throw ValidationError("/method: expected 'exact' or 'mc'");
  }
  if (form == "bound")
    t = bound_form(t);
  else if (form != "raw")
    throw ValidationError("/form: expected 'raw' or 'bound'");
  run.write_json("spectra.json", t);
  run.finish();
}

void cmd_design(const Common& c, json flags) {
  json cfg = load_config(c);
  for (auto& [k, v] : flags.items()) cfg[k] = v;
  Run run("design", c, cfg);
  const int L = field<int>(cfg, "L", 4);
  const int nq = field<int>(cfg, "qubits", 1);
  const std::string learnable = field<std::string>(cfg, "learnable", "fundamental");
  const std::string cls_name = field<std::string>(cfg, "noise_class", "classical");
  int K = field<int>(cfg, "K", 0);
  if (learnable == "gaussian")
    K = 2;
  else if (learnable == "fundamental")
    K = default_order(L, nq, 0);
  else if (learnable != "custom" || K < 1)
    throw ValidationError("/learnable: expected 'gaussian', 'fundamental', or 'custom' with K >= 1");
  DesignOptions o;
  o.shuffles = field<int>(cfg, "shuffles", o.shuffles);
  o.pool_size = field<int>(cfg, "pool", 0);
  o.snap = field<bool>(cfg, "snap", nq == 1);
  const NoiseClass cls = parse_noise_class(cls_name);
  const DesignReport r =
      design_protocol(enumerate_learnable(L, nq, cls, K), nq, WindowGrid(L, field<double>(cfg, "T", 1.0)), K, o, run.seed());
  json proto = experiments_to_json(r.protocol.experiments);
  proto["K"] = K;
  proto["noise_class"] = cls_name;
  run.write_json("protocol.json", proto);
  run.write_json("design_report.json", json{{"rows", r.protocol.experiments.size()},
                                            {"learnable", r.protocol.learnable.size()},
                                            {"condition_number", r.protocol.condition_number},
                                            {"shuffle_conditions", r.shuffle_conditions}});
  std::cerr << "designed " << r.protocol.experiments.size() << " experiments, condition number "
            << r.protocol.condition_number << "\n";
  run.finish();
}

void cmd_reconstruct(const Common& c) {
  const json cfg = load_config(c);
  Run run("reconstruct", c, cfg);
  const std::string ppath = config_path(c, required<std::string>(cfg, "protocol"));
  const json pj = read_json(ppath);
  const double T = field<double>(cfg, "T", 1.0);
  const auto experiments = load_protocol_table(ppath, T);
  const int L = experiments.front().grid.L, nq = experiments.front().control.nqubits();
  const int K = default_order(L, nq, field<int>(cfg, "K", field<int>(pj, "K", 0, ppath)));
  const NoiseClass cls =
      parse_noise_class(field<std::string>(cfg, "noise_class", field<std::string>(pj, "noise_class", "classical", ppath)));
  const Protocol p = make_protocol(experiments, enumerate_learnable(L, nq, cls, K), K);
  if (p.system.matrix.rows() < p.system.matrix.cols())
    throw NumericalError("protocol has fewer experiments than learnable spectra");
  const SpectrumTable t = reconstruct(p, read_measurements(config_path(c, required<std::string>(cfg, "measurements"))));
  run.write_json("spectra.json", t);
  run.finish();
}

// Table restricted to the first j windows, i.e. the spectra of a shorter grid.
SpectrumTable prefix_table(const SpectrumTable& t, int j) {
  SpectrumTable s;
  s.grid = WindowGrid(j, t.grid.tau() * j);
  s.nqubits = t.nqubits;
  for (const auto& [idx, e] : t.entries)
    if (idx.n.front() <= j) s.set(idx, e.value, e.provenance);
  return s;
}

void cmd_predict(const Common& c) {
  const json cfg = load_config(c);
  Run run("predict", c, cfg);
  std::vector<std::string> paths;
  if (cfg.contains("spectra") && cfg.at("spectra").is_array())
    paths = required<std::vector<std::string>>(cfg, "spectra");
  else
    paths = {required<std::string>(cfg, "spectra")};
  std::vector<SpectrumTable> tables;
  for (const auto& p : paths) {
    try {
      tables.push_back(read_json(config_path(c, p)).get<SpectrumTable>());
    } catch (const json::exception& e) {
      throw ValidationError(p + ": " + e.what());
    }
  }
  const std::string mode = field<std::string>(cfg, "mode", "coherence");
  if (mode == "coherence") {
    // |<ρ_01(t)>| of free evolution at every window boundary of every table.
    CsvWriter csv(run.path("curve.csv"), "time,value,stderr");
    for (const auto& t : tables) {
      if (t.nqubits != 1) throw ValidationError("coherence curves need single-qubit spectra");
      const int K = default_order(t.grid.L, 1, field<int>(cfg, "K", 0));
      for (int j = 1; j <= t.grid.L; ++j) {
        const SpectrumTable s = prefix_table(t, j);
        const DigitalControl free = DigitalControl::identity(1, j);
        const double xx = expectation(free, PauliIndex(1, 1), PauliIndex(1, 1), s, K).real();
        const double xy = expectation(free, PauliIndex(1, 1), PauliIndex(1, 2), s, K).real();
        csv.row(s.grid.T, 0.5 * std::hypot(xx, xy), 0.0);
      }
    }
  } else if (mode == "protocol") {
    if (tables.size() != 1) throw ValidationError("/spectra: protocol mode takes one table");
    const SpectrumTable& t = tables.front();
    const auto experiments = load_protocol_table(config_path(c, required<std::string>(cfg, "protocol")), t.grid.T);
    const int K = default_order(t.grid.L, t.nqubits, field<int>(cfg, "K", 0));
    CsvWriter csv(run.path("predictions.csv"), "experiment_id,value,stderr");
    for (size_t i = 0; i < experiments.size(); ++i) {
      const auto& e = experiments[i];
      csv.row(i, expectation(e.control, e.rho_matrix(), e.toggled_observable(), t, K).real(), 0.0);
    }
  } else {
    throw ValidationError("/mode: expected 'coherence' or 'protocol'");
  }
  run.finish();
}

void cmd_optimize(const Common& c) {
  const json cfg = load_config(c);
  Run run("optimize", c, cfg);
  NelderMeadOptions o;
  o.max_iter = field<int>(cfg, "max_iter", o.max_iter);
  o.restarts = field<int>(cfg, "restarts", o.restarts);
  o.scale = field<double>(cfg, "simplex_scale", o.scale);
  o.seed = run.seed();
  if (cfg.contains("spectra")) {
    OptimizationProblem p;
    try {
      p.spectra = read_json(config_path(c, required<std::string>(cfg, "spectra"))).get<SpectrumTable>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("/spectra: ") + e.what());
    }
    p.nqubits = p.spectra.nqubits;
    p.K = default_order(p.spectra.grid.L, p.nqubits, field<int>(cfg, "K", 0));
    p.initial_params = field<std::vector<double>>(cfg, "initial_params", {});
    p.options = o;
    const OptimizationResult r = optimize(p);
    json j = r;
    j["trace"] = r.trace;
    run.write_json("optimize.json", j);
  } else {
    const NoiseModel model = model_from(cfg);
    SweepConfig sc;
    sc.grid = WindowGrid(field<int>(cfg, "windows", 2), field<double>(cfg, "T", 1.0));
    sc.K = default_order(sc.grid.L, model.nqubits(), field<int>(cfg, "K", 0));
    sc.sim = sim_config(cfg, c, run.seed());
    sc.options = o;
    const auto rows = fidelity_sweep(model, required<std::vector<double>>(cfg, "g_over_gamma"), sc);
    CsvWriter csv(run.path("sweep.csv"), "g_over_gamma,bare_F,opt_F,bare_surrogate,opt_surrogate");
    for (const auto& r : rows) csv.row(r.g_over_gamma, r.bare_mc, r.opt_mc, r.bare_surrogate, r.opt_surrogate);
  }
  run.finish();
}

void cmd_symmetry_report(const Common& c, int L, int nq, const std::string& cls_name, int K) {
  const NoiseClass cls = parse_noise_class(cls_name);
  K = default_order(L, nq, K);
  const auto classes = symmetry_classes(L, nq, cls, K);
  json out = json::array();
  std::size_t learnable = 0;
  for (const auto& sc : classes) {
    json members = json::array();
    for (const auto& [idx, res] : sc.members)
      members.push_back(json{{"index", idx.label()},
                             {"kind", to_string(res.kind)},
                             {"factor", {res.factor.real(), res.factor.imag()}}});
    out.push_back(json{{"representative", sc.rep.label()}, {"kind", to_string(sc.kind)}, {"members", members}});
    learnable += sc.kind != SymmetryKind::Dark;
  }
  std::cout << "classes " << classes.size() << ", learnable " << learnable << "\n";
  Run run("symmetry-report", c, json{{"L", L}, {"qubits", nq}, {"noise_class", cls_name}, {"K", K}});
  run.write_json("symmetry_report.json", out);
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caqns: control-adapted quantum noise spectroscopy"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { common.seed = s, common.seed_set = true; }, "random seed");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--threads", common.threads, "worker threads (default: CAQNS_THREADS or all cores)");
  };

  int L = 1, nq = 1, K = 0;
  std::string cls = "classical", method;
  auto* count = app.add_subcommand("count", "count learnable spectra");
  add_common(count);
  count->add_option("--L", L, "number of windows")->required();
  count->add_option("--qubits", nq, "number of qubits (1 or 2)");
  count->add_option("--noise-class", cls, "classical or quantum");
  count->add_option("--method", method, "closed or enumerated");

  auto* simulate = app.add_subcommand("simulate", "run a protocol through the trajectory simulator");
  auto* spectra = app.add_subcommand("spectra", "compute exact or Monte Carlo spectra");
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "solve a protocol for its spectra");
  auto* predict = app.add_subcommand("predict", "predict curves or expectations from a spectrum table");
  auto* optimize_cmd = app.add_subcommand("optimize", "optimize control, or sweep couplings");
  for (auto* s : {simulate, spectra, reconstruct_cmd, predict, optimize_cmd}) add_common(s);

  auto* design = app.add_subcommand("design", "design a protocol by random shuffle search");
  add_common(design);
  std::string learnable;
  int shuffles = 0;
  bool snap = false;
  design->add_option("--learnable", learnable, "gaussian, fundamental, or custom");
  design->add_option("--L", L, "number of windows");
  design->add_option("--qubits", nq, "number of qubits");
  design->add_option("--noise-class", cls, "classical or quantum");
  design->add_option("--K", K, "truncation order for custom sets");
  design->add_option("--shuffles", shuffles, "number of shuffles");
  design->add_flag("--snap", snap, "snap switching vectors to the axis and diagonal alphabet");

  auto* report = app.add_subcommand("symmetry-report", "dump symmetry classes");
  add_common(report);
  report->add_option("--L", L, "number of windows")->required();
  report->add_option("--qubits", nq, "number of qubits");
  report->add_option("--noise-class", cls, "classical or quantum");
  report->add_option("--K", K, "maximum order (default: saturation)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*count) cmd_count(common, L, nq, cls, method);
    if (*simulate) cmd_simulate(common);
    if (*spectra) cmd_spectra(common);
    if (*reconstruct_cmd) cmd_reconstruct(common);
    if (*predict) cmd_predict(common);
    if (*optimize_cmd) cmd_optimize(common);
    if (*report) cmd_symmetry_report(common, L, nq, cls, K);
    if (*design) {
      json flags = json::object();
      if (design->count("--learnable")) flags["learnable"] = learnable;
      if (design->count("--L")) flags["L"] = L;
      if (design->count("--qubits")) flags["qubits"] = nq;
      if (design->count("--noise-class")) flags["noise_class"] = cls;
      if (design->count("--K")) flags["K"] = K;
      if (design->count("--shuffles")) flags["shuffles"] = shuffles;
      if (snap) flags["snap"] = true;
      cmd_design(common, flags);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
