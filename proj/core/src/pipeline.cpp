#include "shiftplan/pipeline.hpp"

#include "text_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

namespace shiftplan {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;
using detail::format_double;

namespace {

OJson ratio_json(const std::optional<double>& v) {
  return v ? OJson(*v) : OJson("undefined");
}

std::string ratio_text(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("undefined");
}

OJson bus_names(const LocationVector& z, const Network& net) {
  auto arr = OJson::array();
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z.selected(i)) arr.push_back(net.bus_names()[i]);
  return arr;
}

void write_baseline_files(const fs::path& dir, const Baseline& b, double dt) {
  std::ostringstream base, caps;
  base << "t,cost,emission,emission_fuel,emission_cur,cap\n";
  caps << "t,cap\n";
  for (std::size_t t = 0; t < b.per_t.size(); ++t) {
    const auto& r = b.per_t[t];
    base << t << ',' << format_double(dt * r.gen_cost) << ',' << format_double(dt * r.objective)
         << ',' << format_double(dt * r.emission_fuel) << ',' << format_double(dt * r.emission_cur)
         << ',' << format_double(b.caps.cap[t]) << '\n';
    caps << t << ',' << format_double(b.caps.cap[t]) << '\n';
  }
  detail::write_file(dir / "baseline.csv", base.str());
  detail::write_file(dir / "caps.csv", caps.str());
}

OJson config_echo(const RunConfig& cfg) { return OJson::parse(effective_config_json(cfg)); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.search.seed = *ov.seed;
  if (ov.time_budget) cfg.search.wall_clock_budget = *ov.time_budget;
  if (ov.rounds) cfg.search.max_rounds = *ov.rounds;
  if (ov.out) cfg.output_dir = *ov.out;
  try {
    validate_search_config(cfg.search);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.message(), e.field());
  }
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::BaselineInfeasible:
    case ErrorKind::NoFeasiblePlan:
      return 2;
    case ErrorKind::EnumerationTooLarge:
    case ErrorKind::ProblemTooLarge:
      return 4;
    case ErrorKind::SolverFailure:
      return 5;
    default:
      return 3;
  }
}

PlanMetrics compute_metrics(double c_opf, double c_ls, double shifted, double allowed) {
  PlanMetrics m;
  m.c_opf = c_opf;
  m.c_ls = c_ls;
  m.delta = c_opf - c_ls;
  m.shifted = shifted;
  m.allowed = allowed;
  if (std::abs(c_opf) > 0.0) m.mu_redu = m.delta / c_opf;
  if (allowed > kZeroEnergy) m.mu_allow = m.delta / allowed;
  if (shifted > kZeroEnergy) m.mu_shift = m.delta / shifted;
  return m;
}

Baseline run_baseline(const RunConfig& cfg, std::ostream& log) {
  const ProblemInstance inst = load_instance(cfg);
  const DispatchModel model(inst.network, inst.scenario, cfg.solver);
  const WorkerPool pool(cfg.workers);
  Baseline b = compute_baseline(model, cfg.cap_factor, pool);
  write_baseline_files(cfg.output_dir, b, inst.scenario.dt_hours);
  log << "baseline: " << b.per_t.size() << " steps, emission " << format_double(b.total_emission)
      << " tCO2, cost " << format_double(b.total_cost) << " $\n";
  return b;
}

PlanRun run_plan(const RunConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemInstance inst = load_instance(cfg);
  const Network& net = inst.network;
  const Scenario& sc = inst.scenario;
  const DispatchModel model(net, sc, cfg.solver);
  const WorkerPool pool(cfg.workers);
  const fs::path dir = cfg.output_dir;
  const std::string hash = config_hash(cfg);

  PlanRun run;
  run.baseline = compute_baseline(model, cfg.cap_factor, pool);
  write_baseline_files(dir, run.baseline, sc.dt_hours);

  try {
    run.outcome = search(model, inst.budget, run.baseline.caps, cfg.search, pool);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoFeasiblePlan) {
      OJson rep;
      rep["status"] = "no_feasible_plan";
      rep["diagnosis"] = e.message();
      rep["config_hash"] = hash;
      rep["config"] = config_echo(cfg);
      detail::write_file(dir / "report.json", rep.dump(2) + "\n");
    }
    throw;
  }
  const SearchOutcome& out = run.outcome;
  run.plan = evaluate_plan(model, out.z_star, run.baseline.caps, pool);
  run.metrics = compute_metrics(run.baseline.total_emission, run.plan.total_emission,
                                run.plan.total_shifted, run.plan.total_allowed);
  const PlanMetrics& m = run.metrics;

  const double dt = sc.dt_hours;
  const std::size_t T = sc.horizon();
  OJson rep;
  rep["status"] = out.converged ? "converged" : "budget_exhausted";
  rep["config_hash"] = hash;
  rep["z_star"] = out.z_star.key();
  rep["z_star_buses"] = bus_names(out.z_star, net);
  rep["C_OPF"] = m.c_opf;
  rep["C_LS"] = m.c_ls;
  rep["delta"] = m.delta;
  rep["mu_redu"] = ratio_json(m.mu_redu);
  rep["mu_allow"] = ratio_json(m.mu_allow);
  rep["mu_shift"] = ratio_json(m.mu_shift);
  rep["total_shifted"] = m.shifted;
  rep["total_allowed"] = m.allowed;
  rep["baseline_cost"] = run.baseline.total_cost;
  rep["plan_cost"] = run.plan.total_cost;
  OJson s;
  s["rounds_used"] = out.rounds_used;
  s["converged"] = out.converged;
  s["converged_round"] = out.converged_round ? OJson(*out.converged_round) : OJson(nullptr);
  s["stop_reason"] = std::string(to_string(out.stop_reason));
  s["best_objective"] = out.best_objective;
  s["evaluations"] = out.evaluations;
  s["pruned_leaves"] = out.pruned_leaves;
  s["tree_nodes"] = out.tree ? out.tree->size() : 0;
  rep["search"] = s;
  OJson series_opf = OJson::array(), series_ls = OJson::array();
  for (std::size_t t = 0; t < T; ++t) {
    series_opf.push_back(dt * run.baseline.per_t[t].objective);
    series_ls.push_back(dt * run.plan.per_t[t].objective);
  }
  rep["emission_baseline"] = series_opf;
  rep["emission_plan"] = series_ls;
  rep["config"] = config_echo(cfg);
  detail::write_file(dir / "report.json", rep.dump(2) + "\n");

  std::ostringstream trace;
  trace << "round,z,objective,best_so_far,infeasible_leaves,cached\n";
  for (const auto& r : out.trace)
    trace << r.round << ',' << r.z.key() << ',' << format_double(r.objective) << ','
          << format_double(r.best_so_far) << ',' << r.infeasible_leaves << ','
          << (r.cached ? 1 : 0) << '\n';
  detail::write_file(dir / "trace.csv", trace.str());

  std::ostringstream em;
  em << "t,baseline_emission,plan_emission,baseline_cost,plan_cost,cap,shifted,allowed\n";
  for (std::size_t t = 0; t < T; ++t) {
    const auto& b = run.baseline.per_t[t];
    const auto& p = run.plan.per_t[t];
    const auto headroom = shift_headroom(sc, net, t);
    double allowed = 0.0;
    for (std::size_t i = 0; i < net.n_buses(); ++i)
      if (out.z_star.selected(i)) allowed += dt * headroom(static_cast<Eigen::Index>(i));
    em << t << ',' << format_double(dt * b.objective) << ',' << format_double(dt * p.objective)
       << ',' << format_double(dt * b.gen_cost) << ',' << format_double(dt * p.gen_cost) << ','
       << format_double(run.baseline.caps.cap[t]) << ','
       << format_double(dt * 0.5 * p.bus_shift.cwiseAbs().sum()) << ',' << format_double(allowed)
       << '\n';
  }
  detail::write_file(dir / "emissions.csv", em.str());

  if (out.tree) detail::write_file(dir / "tree.json", out.tree->snapshot_json() + "\n");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  OJson info;
  info["config_hash"] = hash;
  info["output_dir"] = dir.string();
  info["workers"] = cfg.workers;
  info["wall_seconds"] = wall;
  info["search_seconds"] = out.round_seconds.empty() ? 0.0 : out.round_seconds.back();
  detail::write_file(dir / "run_info.json", info.dump(2) + "\n");
  std::ostringstream timing;
  timing << "round,elapsed_s\n";
  for (std::size_t k = 0; k < out.round_seconds.size(); ++k)
    timing << k + 1 << ',' << format_double(out.round_seconds[k]) << '\n';
  detail::write_file(dir / "timing.csv", timing.str());

  log << "plan: z* = " << out.z_star.key() << " after " << out.rounds_used << " rounds ("
      << to_string(out.stop_reason) << "), C_LS " << format_double(m.c_ls) << " vs C_OPF "
      << format_double(m.c_opf) << " tCO2, mu_redu " << ratio_text(m.mu_redu) << "\n";
  return run;
}

OracleReport run_enumerate(const RunConfig& cfg, std::ostream& log) {
  const ProblemInstance inst = load_instance(cfg);
  const DispatchModel model(inst.network, inst.scenario, cfg.solver);
  const WorkerPool pool(cfg.workers);
  // Guard first so an oversized space fails before any QP is solved.
  const std::size_t leaves =
      count_leaves(inst.budget, inst.network.n_buses(), cfg.enumeration_guard);
  if (leaves > cfg.enumeration_guard)
    throw Error(ErrorKind::EnumerationTooLarge,
                "more than " + std::to_string(cfg.enumeration_guard) + " leaves",
                "enumeration_guard");
  const Baseline b = compute_baseline(model, cfg.cap_factor, pool);
  write_baseline_files(cfg.output_dir, b, inst.scenario.dt_hours);
  OracleReport rep = enumerate_optimal(model, inst.budget, b.caps, pool, cfg.enumeration_guard);
  detail::write_file(cfg.output_dir / "oracle.json", oracle_report_json(rep, inst.network));
  log << "enumerate: " << rep.evaluated_count << " leaves, best z = " << rep.best_z.key()
      << ", objective " << format_double(rep.best_objective) << " tCO2\n";
  return rep;
}

std::string run_report(const fs::path& dir, std::ostream& log) {
  const auto need = [&](const char* name) {
    const fs::path p = dir / name;
    if (!fs::exists(p))
      throw Error(ErrorKind::MissingArtifact, p.string() + " not found; run `plan` first", name);
    return p;
  };
  const OJson rep = OJson::parse(detail::read_file(need("report.json")));
  const std::string trace = detail::read_file(need("trace.csv"));
  need("emissions.csv");
  if (rep.value("status", "") == "no_feasible_plan")
    throw Error(ErrorKind::NoFeasiblePlan, rep.value("diagnosis", "no feasible plan"), "report.json");

  const auto num_text = [&](const char* key) -> std::string {
    const auto& v = rep.at(key);
    return v.is_number() ? format_double(v.get<double>()) : v.get<std::string>();
  };
  std::ostringstream metrics;
  metrics << "z_star,C_OPF,C_LS,delta,mu_redu,mu_allow,mu_shift,S,L\n"
          << rep.at("z_star").get<std::string>() << ',' << num_text("C_OPF") << ','
          << num_text("C_LS") << ',' << num_text("delta") << ',' << num_text("mu_redu") << ','
          << num_text("mu_allow") << ',' << num_text("mu_shift") << ','
          << num_text("total_shifted") << ',' << num_text("total_allowed") << '\n';
  detail::write_file(dir / "metrics.csv", metrics.str());

  std::vector<std::string> elapsed;
  if (fs::exists(dir / "timing.csv")) {
    std::istringstream ts(detail::read_file(dir / "timing.csv"));
    std::string line;
    std::getline(ts, line);
    while (std::getline(ts, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() >= 2) elapsed.push_back(cells[1]);
    }
  }
  std::ostringstream conv;
  conv << "round,objective,best_so_far,elapsed_s\n";
  std::istringstream tr(trace);
  std::string line;
  std::getline(tr, line);
  std::size_t k = 0;
  while (std::getline(tr, line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() < 4) continue;
    conv << cells[0] << ',' << cells[2] << ',' << cells[3] << ','
         << (k < elapsed.size() ? elapsed[k] : std::string()) << '\n';
    ++k;
  }
  detail::write_file(dir / "convergence.csv", conv.str());

  const auto& s = rep.at("search");
  std::ostringstream sum;
  sum << "location plan     : " << rep.at("z_star").get<std::string>() << " (";
  bool first = true;
  for (const auto& b : rep.at("z_star_buses")) {
    sum << (first ? "" : ", ") << b.get<std::string>();
    first = false;
  }
  sum << ")\n"
      << "baseline emission : " << num_text("C_OPF") << " tCO2\n"
      << "plan emission     : " << num_text("C_LS") << " tCO2\n"
      << "reduction delta   : " << num_text("delta") << " tCO2\n"
      << "mu_redu           : " << num_text("mu_redu") << "\n"
      << "mu_allow          : " << num_text("mu_allow") << " tCO2/MWh\n"
      << "mu_shift          : " << num_text("mu_shift") << " tCO2/MWh\n"
      << "shifted S         : " << num_text("total_shifted") << " MWh\n"
      << "allowed L         : " << num_text("total_allowed") << " MWh\n"
      << "rounds            : " << s.at("rounds_used").get<std::size_t>() << " ("
      << s.at("stop_reason").get<std::string>() << ")\n"
      << "config hash       : " << rep.at("config_hash").get<std::string>() << "\n";
  detail::write_file(dir / "summary.txt", sum.str());
  log << "report: wrote metrics.csv, convergence.csv, summary.txt in " << dir.string() << "\n";
  return sum.str();
}

fs::path run_synth(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.scenario.synth)
    throw Error(ErrorKind::Config, "synth needs a `scenario.synth` section", "scenario.synth");
  const Network net = load_network(cfg.network_path);
  const Scenario sc = build_scenario(cfg, net);
  const fs::path path = cfg.output_dir / "scenario.csv";
  save_scenario(sc, net, path);
  log << "synth: " << sc.horizon() << " steps written to " << path.string() << "\n";
  return path;
}

}  // namespace shiftplan
