#pragma once

// Command-line pipeline: validate -> abstract -> pareto -> synth -> simulate -> report.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "etpareto/etpareto.hpp"

namespace etpareto::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { Ok = 0, Validation = 1, Io = 2, Infeasible = 3, Convergence = 4 };

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("ETPARETO_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && end != env) return v;
  }
  return 1;
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// FNV-1a over the canonical dump of everything that affects results.
inline std::string config_hash(const Json& config) { return hex64(hash_label(config.dump())); }

struct Manifest {
  Manifest(std::string cmd, std::vector<std::string> in, Json cfg, std::uint64_t s)
      : command(std::move(cmd)), inputs(std::move(in)), config(std::move(cfg)), seed(s) {}

  std::string command;
  std::vector<std::string> inputs;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& dir) const {
    Json j;
    j["command"] = command;
    j["tool_version"] = kVersion;
    j["inputs"] = inputs;
    j["seed"] = seed;
    j["config"] = config;
    j["config_hash"] = config_hash(config);
    j["outputs"] = outputs;
    j["started"] = started;
    j["finished"] = utc_now();
    write_text_file(dir / ("manifest." + command + ".json"), j.dump(2) + "\n");
  }
};

inline Abstraction load_abstraction(const fs::path& path) { return abstraction_from_json(read_json_file(path)); }

inline std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

// --- Commands ----------------------------------------------------------------

inline int cmd_validate(const fs::path& scenario, std::ostream& out) {
  const Scenario sc = load_scenario(scenario);
  const SteadyStateCovariance ss = steady_state_kf_covariance(sc.params);
  out << "scenario '" << sc.name << "' is valid\n";
  out << "  state dim " << sc.dim() << ", measurement dim " << sc.params.meas_dim() << ", input dim "
      << sc.params.input_dim() << "\n";
  out << "  waypoints " << sc.waypoints.size() << " (" << sc.segments() << " segments), obstacles "
      << sc.obstacles.size() << "\n";
  out << "  thresholds";
  for (double d : sc.deltas) out << ' ' << d << " (rate " << fmt(expected_trigger_rate(d, sc.params.meas_dim()), 4) << ")";
  out << "\n  steady-state KF covariance eigenvalues";
  for (double l : sym_eigen(ss.posterior).values) out << ' ' << l;
  out << "\n";
  return Ok;
}

struct AbstractOptions {
  int method = 2;
  std::size_t bins_theta = 3, bins_lambda = 6;
  std::size_t samples = 500, pool_cap = 2000, calibration_runs = 300;
  std::uint64_t seed = 1;
  fs::path out;
};

inline int cmd_abstract(const fs::path& scenario, const AbstractOptions& o, std::ostream& out) {
  const Scenario sc = load_scenario(scenario);
  AbstractionConfig cfg;
  if (o.method != 1 && o.method != 2) throw InputError("--method must be 1 or 2");
  cfg.method = static_cast<Method>(o.method);
  cfg.bins_theta = o.bins_theta;
  cfg.bins_lambda = o.bins_lambda;
  cfg.samples_per_action = o.samples;
  cfg.pool_cap = o.pool_cap;
  cfg.calibration_runs = o.calibration_runs;
  cfg.seed = o.seed;
  const Abstraction abs = build_abstraction(sc, cfg);
  abs.mdp.validate(1e-9);

  Manifest man{"abstract", {scenario.string()}, Json{{"scenario", to_json(sc)}, {"abstraction", config_to_json(cfg)}}, cfg.seed};
  write_text_file(o.out / "mdp.json", to_json(abs).dump(1) + "\n");
  man.outputs.push_back((o.out / "mdp.json").string());
  if (cfg.method == Method::DiscretizedBelief) {
    write_text_file(o.out / "calibration.json", regions_to_json(abs.regions).dump(2) + "\n");
    man.outputs.push_back((o.out / "calibration.json").string());
  }
  write_text_file(o.out / "mdp.prism", export_prism(abs.mdp));
  man.outputs.push_back((o.out / "mdp.prism").string());
  man.write(o.out);

  out << "method " << o.method << ": " << abs.mdp.size() << " states (" << abs.mdp.non_terminal_count()
      << " non-terminal), " << abs.diagnostics.rollouts << " rollouts\n";
  out << "  eigenvalues above cap " << abs.diagnostics.lambda_above_cap << ", below floor "
      << abs.diagnostics.lambda_below_floor << ", segment timeouts " << abs.diagnostics.segment_timeouts << "\n";
  out << "  wrote " << (o.out / "mdp.json").string() << "\n";
  return Ok;
}

inline int cmd_pareto(const fs::path& mdp_path, std::size_t grid, const fs::path& dir, std::ostream& out) {
  const Abstraction abs = load_abstraction(mdp_path);
  abs.mdp.validate(1e-9);
  const ParetoFront front = pareto_front(abs.mdp, grid);
  write_text_file(dir / "front.csv", front_csv(front));
  Json fj = front_to_json(front, abs.mdp);
  fj["mdp"] = fs::absolute(mdp_path).lexically_normal().string();
  write_text_file(dir / "front.json", fj.dump(1) + "\n");
  Manifest man{"pareto", {mdp_path.string()}, Json{{"grid", grid}, {"mdp_hash", config_hash(read_json_file(mdp_path))}}, 0};
  man.outputs = {(dir / "front.csv").string(), (dir / "front.json").string()};
  man.write(dir);
  out << front.vertices.size() << " Pareto vertices\n";
  out << "  id  p_tar     p_coll    e_c\n";
  for (const auto& v : front.vertices)
    out << "  " << std::setw(2) << v.id << "  " << fmt(v.point.p_tar) << "  " << fmt(v.point.p_coll) << "  "
        << fmt(v.point.e_c, 3) << "\n";
  return Ok;
}

struct SynthOptions {
  std::string query = "max-ptar";
  std::optional<double> ptar;
  std::optional<double> energy;
  std::optional<std::size_t> vertex;
  std::size_t grid = 40;
  fs::path out;
};

inline Query parse_query(const SynthOptions& o) {
  if (o.query == "max-ptar") return MaxPtar{};
  if (o.query == "min-energy") {
    if (!o.ptar) throw InputError("--query min-energy needs --ptar");
    return MinEnergyGivenPtar{*o.ptar};
  }
  if (o.query == "min-coll") {
    if (!o.energy) throw InputError("--query min-coll needs --energy");
    return MinCollGivenEnergy{*o.energy};
  }
  throw InputError("unknown query '" + o.query + "' (max-ptar, min-energy, min-coll, vertex)");
}

// Input is a front document (from `pareto`) or an MDP document (front computed here).
inline int cmd_synth(const fs::path& input, const SynthOptions& o, std::ostream& out) {
  const Json doc = read_json_file(input);
  ParetoFront front;
  std::string mdp_path;
  std::size_t num_states = 0;
  if (doc.value("format", std::string()) == "etpareto-front") {
    front = front_from_json(doc);
    mdp_path = doc.value("mdp", std::string());
    num_states = doc.at("num_states").get<std::size_t>();
  } else {
    const Abstraction abs = abstraction_from_json(doc);
    front = pareto_front(abs.mdp, o.grid);
    mdp_path = fs::absolute(input).lexically_normal().string();
    num_states = abs.mdp.size();
  }
  Selection sel;
  if (o.query == "vertex") {
    if (!o.vertex) throw InputError("--query vertex needs --id");
    if (*o.vertex >= front.vertices.size()) throw InputError("--id out of range");
    const FrontVertex& fv = front.vertices[*o.vertex];
    sel = Selection{{fv.policy, std::nullopt, 1.0}, fv.point, *o.vertex, std::nullopt, 1.0};
  } else {
    sel = select_point(front, parse_query(o));
  }
  Json j;
  j["format"] = "etpareto-strategy";
  j["mdp"] = mdp_path;
  j["num_states"] = num_states;
  j["query"] = o.query;
  if (o.ptar) j["ptar"] = *o.ptar;
  if (o.energy) j["energy"] = *o.energy;
  j["predicted"] = point_to_json(sel.predicted);
  j["vertex"] = front.vertices[sel.primary_vertex].id;
  if (sel.secondary_vertex) j["secondary_vertex"] = front.vertices[*sel.secondary_vertex].id;
  j["strategy"] = strategy_to_json(sel.strategy);
  write_text_file(o.out, j.dump(1) + "\n");
  out << "predicted p_tar " << fmt(sel.predicted.p_tar) << ", p_coll " << fmt(sel.predicted.p_coll) << ", e_c "
      << fmt(sel.predicted.e_c, 3);
  if (sel.secondary_vertex)
    out << " (mixture of vertices " << sel.primary_vertex << " and " << *sel.secondary_vertex << ", weight "
        << fmt(sel.alpha) << ")";
  out << "\n";
  return Ok;
}

struct SimulateOptions {
  std::optional<fs::path> mdp;
  std::size_t runs = 3000;
  std::uint64_t seed = 1;
  std::size_t trace_cap = 300;
  double tol_pp = 2.0;
  double tol_rel = 0.05;
  fs::path out;
  std::string name;
};

inline int cmd_simulate(const fs::path& scenario, const fs::path& strategy_path, const SimulateOptions& o,
                        std::ostream& out) {
  const Scenario sc = load_scenario(scenario);
  const Json sj = read_json_file(strategy_path);
  fs::path mdp_path = o.mdp ? *o.mdp : fs::path(sj.value("mdp", std::string()));
  if (mdp_path.empty()) throw InputError("no MDP given and the strategy file names none (use --mdp)");
  const Abstraction abs = load_abstraction(mdp_path);
  const Strategy strat = strategy_from_json(sj.at("strategy"), abs.mdp.size());
  SimulationOptions so;
  so.trace_cap = o.trace_cap;
  const SimulationResult res = simulate_strategy(sc, abs, strat, o.runs, RngStream(o.seed), so);
  const std::string name = o.name.empty() ? strategy_path.stem().string() : o.name;

  Json j;
  j["name"] = name;
  j["empirical"] = objectives_to_json(res.objectives);
  j["state_misses"] = res.state_misses;
  j["decisions"] = res.decisions;
  if (sj.contains("predicted")) {
    const ObjectivePoint pred = point_from_json(sj["predicted"]);
    const Comparison c = compare_theory_empirical(pred, res.objectives, o.tol_pp, o.tol_rel);
    j["predicted"] = point_to_json(pred);
    j["comparison"] = Json{{"p_tar_pp", c.p_tar_pp}, {"p_coll_pp", c.p_coll_pp}, {"e_c_rel", c.e_c_rel},
                           {"tol_pp", o.tol_pp}, {"tol_rel", o.tol_rel}, {"pass", c.pass}};
    out << "theory vs simulation: p_tar " << fmt(c.p_tar_pp, 2) << " pp, p_coll " << fmt(c.p_coll_pp, 2)
        << " pp, e_c " << fmt(100 * c.e_c_rel, 2) << "% -> " << (c.pass ? "within" : "outside") << " tolerance\n";
  }
  write_text_file(o.out / (name + ".objectives.json"), j.dump(2) + "\n");
  write_text_file(o.out / (name + ".trace.csv"), trace_csv(res.traces, sc.dim()));
  Manifest man{"simulate." + name, {scenario.string(), strategy_path.string(), mdp_path.string()},
               Json{{"scenario", to_json(sc)}, {"strategy", sj}, {"runs", o.runs}, {"trace_cap", o.trace_cap}}, o.seed};
  man.outputs = {(o.out / (name + ".objectives.json")).string(), (o.out / (name + ".trace.csv")).string()};
  man.write(o.out);
  out << name << ": " << o.runs << " runs, p_tar " << fmt(res.objectives.p_tar, 4) << ", p_coll "
      << fmt(res.objectives.p_coll, 4) << ", e_c " << fmt(res.objectives.e_c_mean, 3) << " +- "
      << fmt(res.objectives.e_c_stderr, 3) << ", state misses " << res.state_misses << "\n";
  return Ok;
}

inline int cmd_baseline(const fs::path& scenario, std::size_t runs, std::uint64_t seed, const fs::path& dir,
                        std::ostream& out) {
  const Scenario sc = load_scenario(scenario);
  const EmpiricalObjectives e = full_kf_baseline(sc, runs, RngStream(seed));
  Json j;
  j["name"] = "full_kf";
  j["empirical"] = objectives_to_json(e);
  write_text_file(dir / "full_kf.objectives.json", j.dump(2) + "\n");
  Manifest man{"baseline", {scenario.string()}, Json{{"scenario", to_json(sc)}, {"runs", runs}}, seed};
  man.outputs = {(dir / "full_kf.objectives.json").string()};
  man.write(dir);
  out << "full KF: " << runs << " runs, p_tar " << fmt(e.p_tar, 4) << ", p_coll " << fmt(e.p_coll, 4) << ", e_c "
      << fmt(e.e_c_mean, 3) << "\n";
  return Ok;
}

// Collects front.csv and every *.objectives.json in `dir` into points.csv and report.txt.
inline int cmd_report(const fs::path& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw IoError("run directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.size() > 16 && fname.ends_with(".objectives.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const bool have_front = fs::exists(dir / "front.csv");
  if (files.empty() && !have_front)
    throw IoError("run directory '" + dir.string() + "' has no front.csv and no *.objectives.json");

  struct Row {
    std::string name;
    EmpiricalObjectives e;
    std::optional<ObjectivePoint> pred;
  };
  std::vector<Row> rows;
  std::optional<Row> kf;
  for (const auto& f : files) {
    const Json j = read_json_file(f);
    Row r{j.at("name").get<std::string>(), objectives_from_json(j.at("empirical")), std::nullopt};
    if (j.contains("predicted")) r.pred = point_from_json(j["predicted"]);
    if (r.name == "full_kf")
      kf = r;
    else
      rows.push_back(r);
  }

  std::ostringstream csv;
  csv << "strategy,p_tar,p_coll,e_c,runs,pred_p_tar,pred_p_coll,pred_e_c\n";
  auto csv_row = [&](const std::string& label, const Row& r) {
    csv << label << ',' << format_double(r.e.p_tar) << ',' << format_double(r.e.p_coll) << ','
        << format_double(r.e.e_c_mean) << ',' << r.e.runs;
    if (r.pred)
      csv << ',' << format_double(r.pred->p_tar) << ',' << format_double(r.pred->p_coll) << ','
          << format_double(r.pred->e_c);
    else
      csv << ",,,";
    csv << '\n';
  };
  for (const auto& r : rows) csv_row(r.name, r);
  if (kf) csv_row("Full KF", *kf);
  write_text_file(dir / "points.csv", csv.str());

  std::ostringstream txt;
  if (have_front) {
    std::ifstream in(dir / "front.csv");
    std::string line;
    std::getline(in, line);
    std::size_t n = 0;
    txt << "Pareto front\n  id     P_tar    P_coll       E_c\n";
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      if (cells.size() < 7) throw ParseError("front.csv: malformed row");
      txt << "  " << std::setw(2) << cells[6] << "  " << std::setw(7) << fmt(100 * std::stod(cells[0]), 2) << "%  "
          << std::setw(7) << fmt(100 * std::stod(cells[1]), 2) << "%  " << std::setw(8) << fmt(std::stod(cells[2]), 2)
          << "\n";
      ++n;
    }
    txt << "  (" << n << " vertices)\n\n";
  }
  txt << "Selected points (simulated)\n";
  txt << "  " << std::left << std::setw(20) << "Strategy" << std::right << std::setw(10) << "P_tar" << std::setw(10)
      << "P_coll" << std::setw(12) << "E_c" << std::setw(12) << "pred P_tar" << std::setw(12) << "pred P_coll"
      << std::setw(12) << "pred E_c" << "\n";
  auto txt_row = [&](const std::string& label, const Row& r) {
    txt << "  " << std::left << std::setw(20) << label << std::right << std::setw(9) << fmt(100 * r.e.p_tar, 2) << "%"
        << std::setw(9) << fmt(100 * r.e.p_coll, 2) << "%" << std::setw(12) << fmt(r.e.e_c_mean, 2);
    if (r.pred)
      txt << std::setw(11) << fmt(100 * r.pred->p_tar, 2) << "%" << std::setw(11) << fmt(100 * r.pred->p_coll, 2)
          << "%" << std::setw(12) << fmt(r.pred->e_c, 2);
    txt << "\n";
  };
  for (const auto& r : rows) txt_row(r.name, r);
  if (kf) txt_row("Full KF", *kf);
  write_text_file(dir / "report.txt", txt.str());
  out << txt.str();
  return Ok;
}

inline int cmd_probe(const fs::path& scenario, const AbstractOptions& o, std::ostream& out) {
  const Scenario sc = load_scenario(scenario);
  AbstractionConfig cfg;
  cfg.method = Method::DiscretizedBelief;
  cfg.bins_theta = o.bins_theta;
  cfg.bins_lambda = o.bins_lambda;
  cfg.samples_per_action = o.samples;
  cfg.pool_cap = o.pool_cap;
  cfg.calibration_runs = o.calibration_runs;
  cfg.seed = o.seed;
  const RefinementReport r = refinement_probe(sc, cfg);
  out << "refinement (" << cfg.bins_theta << "," << cfg.bins_lambda << ") -> (" << 2 * cfg.bins_theta << ","
      << 2 * cfg.bins_lambda << "): median dP_max " << fmt(r.median, 4) << ", max " << fmt(r.max, 4) << " over "
      << r.coarse_states.size() << " states\n";
  return Ok;
}

// --- Entry point ---------------------------------------------------------------

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InfeasibleError*>(&e)) return Infeasible;
  if (dynamic_cast<const IoError*>(&e)) return Io;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const NumericalError*>(&e)) return Convergence;
  return Validation;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Event-triggered estimation strategy synthesis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string scenario, input, strategy;
  std::string out_path = ".";
  AbstractOptions ao;
  ao.seed = default_seed();
  std::size_t grid = 40;
  SynthOptions so;
  SimulateOptions sim;
  sim.seed = default_seed();
  std::string mdp_opt;
  std::size_t runs = 3000;
  std::uint64_t seed = default_seed();
  std::vector<std::size_t> bins;

  auto* v = app.add_subcommand("validate", "Check a scenario file");
  v->add_option("scenario", scenario, "Scenario JSON")->required();

  auto add_abstract_opts = [&](CLI::App* c) {
    c->add_option("scenario", scenario, "Scenario JSON")->required();
    c->add_option("--bins", bins, "Theta and lambda bin counts, e.g. --bins 3 3")->expected(2);
    c->add_option("--samples", ao.samples, "Rollouts per state-action pair")->capture_default_str();
    c->add_option("--pool-cap", ao.pool_cap, "Belief reservoir size per state")->capture_default_str();
    c->add_option("--calibration-runs", ao.calibration_runs, "Runs used to calibrate regions")->capture_default_str();
    c->add_option("--seed", ao.seed, "RNG seed (default: ETPARETO_SEED or 1)");
  };
  auto* a = app.add_subcommand("abstract", "Build the abstract MDP");
  add_abstract_opts(a);
  a->add_option("--method", ao.method, "1 = enforced convergence, 2 = discretized belief")->capture_default_str();
  a->add_option("--out", out_path, "Output directory")->required();

  auto* pr = app.add_subcommand("probe", "Compare an abstraction with its bin refinement");
  add_abstract_opts(pr);

  auto* p = app.add_subcommand("pareto", "Compute the Pareto front of an MDP");
  p->add_option("mdp", input, "mdp.json")->required();
  p->add_option("--grid", grid, "Barycentric weight grid resolution")->capture_default_str();
  p->add_option("--out", out_path, "Output directory")->required();

  auto* s = app.add_subcommand("synth", "Select a strategy from a front or MDP");
  s->add_option("input", input, "front.json or mdp.json")->required();
  s->add_option("--query", so.query, "max-ptar | min-energy | min-coll | vertex")->capture_default_str();
  s->add_option("--id", so.vertex, "Front vertex for --query vertex");
  s->add_option("--ptar", so.ptar, "Target probability for min-energy");
  s->add_option("--energy", so.energy, "Energy budget for min-coll");
  s->add_option("--grid", so.grid, "Grid when computing the front from an MDP")->capture_default_str();
  s->add_option("--out", out_path, "Strategy file to write")->required();

  auto* m = app.add_subcommand("simulate", "Monte-Carlo validation of a strategy");
  m->add_option("scenario", scenario, "Scenario JSON")->required();
  m->add_option("strategy", strategy, "Strategy JSON")->required();
  m->add_option("--mdp", mdp_opt, "MDP the strategy refers to (default: the one named in the strategy)");
  m->add_option("--runs", sim.runs, "Number of runs")->capture_default_str();
  m->add_option("--seed", sim.seed, "RNG seed (default: ETPARETO_SEED or 1)");
  m->add_option("--trace-cap", sim.trace_cap, "Runs whose traces are kept")->capture_default_str();
  m->add_option("--tol-pp", sim.tol_pp, "Probability tolerance in percentage points")->capture_default_str();
  m->add_option("--tol-rel", sim.tol_rel, "Relative energy tolerance")->capture_default_str();
  m->add_option("--name", sim.name, "Output name (default: strategy file stem)");
  m->add_option("--out", out_path, "Output directory")->required();

  auto* b = app.add_subcommand("baseline", "Simulate the full Kalman filter (transmit every step)");
  b->add_option("scenario", scenario, "Scenario JSON")->required();
  b->add_option("--runs", runs, "Number of runs")->capture_default_str();
  b->add_option("--seed", seed, "RNG seed (default: ETPARETO_SEED or 1)");
  b->add_option("--out", out_path, "Output directory")->required();

  auto* r = app.add_subcommand("report", "Summarize a run directory");
  r->add_option("dir", input, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? Ok : Validation;
  }

  if (!bins.empty()) {
    ao.bins_theta = bins.at(0);
    ao.bins_lambda = bins.at(1);
  }
  try {
    if (v->parsed()) return cmd_validate(scenario, out);
    if (a->parsed()) {
      ao.out = out_path;
      return cmd_abstract(scenario, ao, out);
    }
    if (pr->parsed()) return cmd_probe(scenario, ao, out);
    if (p->parsed()) return cmd_pareto(input, grid, out_path, out);
    if (s->parsed()) {
      so.out = out_path;
      return cmd_synth(input, so, out);
    }
    if (m->parsed()) {
      sim.out = out_path;
      if (!mdp_opt.empty()) sim.mdp = mdp_opt;
      return cmd_simulate(scenario, strategy, sim, out);
    }
    if (b->parsed()) return cmd_baseline(scenario, runs, seed, out_path, out);
    if (r->parsed()) return cmd_report(input, out);
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << " (achievable bound " << e.achievable_bound() << ")\n";
    return Infeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return Validation;
}

}  // namespace etpareto::cli
