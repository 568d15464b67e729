#include "shiftplan/config.hpp"

#include "shiftplan/error.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace shiftplan {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::Config, msg, field);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) fail(join(path, it.key()), "unknown field");
  }
}

const Json* find(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double get_number(const Json& j, const char* key, const std::string& path, double fallback) {
  const Json* v = find(j, key);
  return v ? number(*v, join(path, key)) : fallback;
}

std::uint64_t get_count(const Json& j, const char* key, const std::string& path,
                        std::uint64_t fallback) {
  const Json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0)
    fail(join(path, key), "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

std::string get_string(const Json& j, const char* key, const std::string& path) {
  const Json* v = find(j, key);
  if (!v || !v->is_string()) fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> number_list(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

BusValues bus_values(const Json& j, const std::string& field) {
  BusValues v;
  if (j.is_number()) {
    v.scalar = number(j, field);
  } else if (j.is_array()) {
    v.list = number_list(j, field);
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      v.by_name.emplace_back(it.key(), number(*it, join(field, it.key())));
  } else {
    fail(field, "expected a number, an array or an object keyed by bus name");
  }
  return v;
}

OJson bus_values_json(const BusValues& v) {
  if (v.scalar) return *v.scalar;
  if (!v.list.empty()) return v.list;
  if (!v.by_name.empty()) {
    OJson o = OJson::object();
    for (const auto& [k, x] : v.by_name) o[k] = x;
    return o;
  }
  return nullptr;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

SynthParams parse_synth(const Json& j, const std::string& path, ScenarioSource& src) {
  reject_unknown(j, path,
                 {"horizon", "dt_hours", "load_peak", "load_weights", "load_diurnal_amplitude",
                  "load_seasonal_amplitude", "ctrl_peak", "ctrl_weights", "ctrl_diurnal_amplitude",
                  "growth_rate", "res_peak", "res_mean_factor", "res_diurnal_amplitude",
                  "res_seasonal_amplitude", "noise", "expansion", "seed"});
  SynthParams p;
  p.horizon = get_count(j, "horizon", path, p.horizon);
  p.dt_hours = get_number(j, "dt_hours", path, p.dt_hours);
  p.load_peak = get_number(j, "load_peak", path, p.load_peak);
  if (const Json* v = find(j, "load_weights")) src.load_weights = bus_values(*v, join(path, "load_weights"));
  p.load_diurnal_amplitude = get_number(j, "load_diurnal_amplitude", path, 0.0);
  p.load_seasonal_amplitude = get_number(j, "load_seasonal_amplitude", path, 0.0);
  p.ctrl_peak = get_number(j, "ctrl_peak", path, 0.0);
  if (const Json* v = find(j, "ctrl_weights")) p.ctrl_weights = number_list(*v, join(path, "ctrl_weights"));
  p.ctrl_diurnal_amplitude = get_number(j, "ctrl_diurnal_amplitude", path, 0.0);
  p.growth_rate = get_number(j, "growth_rate", path, 0.0);
  if (const Json* v = find(j, "res_peak")) {
    if (v->is_object()) {
      for (auto it = v->begin(); it != v->end(); ++it)
        src.res_peak_by_name.emplace_back(it.key(), number(*it, join(join(path, "res_peak"), it.key())));
    } else if (v->is_array()) {
      p.res_peak = number_list(*v, join(path, "res_peak"));
    } else {
      fail(join(path, "res_peak"), "expected an array or an object keyed by unit name");
    }
  }
  p.res_mean_factor = get_number(j, "res_mean_factor", path, p.res_mean_factor);
  p.res_diurnal_amplitude = get_number(j, "res_diurnal_amplitude", path, 0.0);
  p.res_seasonal_amplitude = get_number(j, "res_seasonal_amplitude", path, 0.0);
  p.noise = get_number(j, "noise", path, 0.0);
  if (const Json* v = find(j, "expansion")) src.expansion = bus_values(*v, join(path, "expansion"));
  src.synth_seed = get_count(j, "seed", path, 0);
  return p;
}

OJson synth_json(const SynthParams& p, const ScenarioSource& src) {
  OJson j;
  j["horizon"] = p.horizon;
  j["dt_hours"] = p.dt_hours;
  j["load_peak"] = p.load_peak;
  j["load_weights"] = bus_values_json(src.load_weights);
  j["load_diurnal_amplitude"] = p.load_diurnal_amplitude;
  j["load_seasonal_amplitude"] = p.load_seasonal_amplitude;
  j["ctrl_peak"] = p.ctrl_peak;
  j["ctrl_weights"] = p.ctrl_weights;
  j["ctrl_diurnal_amplitude"] = p.ctrl_diurnal_amplitude;
  j["growth_rate"] = p.growth_rate;
  if (!src.res_peak_by_name.empty()) {
    OJson o = OJson::object();
    for (const auto& [k, x] : src.res_peak_by_name) o[k] = x;
    j["res_peak"] = o;
  } else {
    j["res_peak"] = p.res_peak;
  }
  j["res_mean_factor"] = p.res_mean_factor;
  j["res_diurnal_amplitude"] = p.res_diurnal_amplitude;
  j["res_seasonal_amplitude"] = p.res_seasonal_amplitude;
  j["noise"] = p.noise;
  j["expansion"] = bus_values_json(src.expansion);
  j["seed"] = src.synth_seed;
  return j;
}

std::string bus_ref_text(const Json& j, const std::string& field) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return std::to_string(j.get<std::int64_t>());
  fail(field, "expected a bus name or index");
}

BusIndex lookup_bus(const Network& net, const std::string& ref, const std::string& field) {
  for (std::size_t i = 0; i < net.n_buses(); ++i)
    if (net.bus_names()[i] == ref) return i;
  if (!ref.empty() && ref.find_first_not_of("0123456789") == std::string::npos) {
    const auto idx = std::stoull(ref);
    if (idx < net.n_buses()) return idx;
  }
  throw Error(ErrorKind::Config, "unknown bus '" + ref + "'", field);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    fail("", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail("", "config must be a JSON object");
  reject_unknown(j, "",
                 {"network", "scenario", "shift_cap_scale", "budget", "cap_factor", "search",
                  "solver", "workers", "output_dir", "enumeration_guard", "monolithic_guard"});

  RunConfig cfg;
  cfg.config_dir = base_dir;
  cfg.network_text = get_string(j, "network", "");
  cfg.network_path = resolve(base_dir, cfg.network_text);
  if (!fs::exists(cfg.network_path))
    fail("network", "file not found: " + cfg.network_path.string());

  const Json* sc = find(j, "scenario");
  if (!sc || !sc->is_object()) fail("scenario", "expected an object with `file` or `synth`");
  reject_unknown(*sc, "scenario", {"file", "synth", "expansion"});
  const bool has_file = find(*sc, "file") != nullptr;
  const bool has_synth = find(*sc, "synth") != nullptr;
  if (has_file == has_synth) fail("scenario", "give exactly one of `file` and `synth`");
  if (has_file) {
    cfg.scenario.file_text = get_string(*sc, "file", "scenario");
    cfg.scenario.file = resolve(base_dir, cfg.scenario.file_text);
    if (!fs::exists(*cfg.scenario.file))
      fail("scenario.file", "file not found: " + cfg.scenario.file->string());
    if (const Json* v = find(*sc, "expansion"))
      cfg.scenario.expansion = bus_values(*v, "scenario.expansion");
  } else {
    const Json& s = (*sc)["synth"];
    if (!s.is_object()) fail("scenario.synth", "expected an object");
    if (find(*sc, "expansion")) fail("scenario.expansion", "put expansion inside `synth`");
    cfg.scenario.synth = parse_synth(s, "scenario.synth", cfg.scenario);
  }

  cfg.shift_cap_scale = get_number(j, "shift_cap_scale", "", 1.0);
  if (cfg.shift_cap_scale < 0.0) fail("shift_cap_scale", "must be >= 0");
  cfg.cap_factor = get_number(j, "cap_factor", "", 1.05);
  if (cfg.cap_factor < 1.0) fail("cap_factor", "must be >= 1");

  const Json* b = find(j, "budget");
  if (!b || !b->is_object()) fail("budget", "expected an object");
  reject_unknown(*b, "budget", {"K", "B", "alpha", "priority"});
  cfg.budget.max_locations = get_count(*b, "K", "budget", 0);
  if (cfg.budget.max_locations < 1) fail("budget.K", "must be >= 1");
  if (const Json* v = find(*b, "B")) {
    cfg.budget.max_investment = number(*v, "budget.B");
    if (*cfg.budget.max_investment < 0.0) fail("budget.B", "must be >= 0");
  }
  if (const Json* v = find(*b, "alpha")) cfg.budget.alpha = bus_values(*v, "budget.alpha");
  if (const Json* v = find(*b, "priority")) {
    if (v->is_string()) {
      cfg.budget.priority_rule = v->get<std::string>();
      if (cfg.budget.priority_rule != "descending-index" &&
          cfg.budget.priority_rule != "ascending-index")
        fail("budget.priority", "expected descending-index, ascending-index or a list of buses");
    } else if (v->is_array()) {
      cfg.budget.priority_rule = "list";
      for (std::size_t i = 0; i < v->size(); ++i)
        cfg.budget.priority.push_back(
            bus_ref_text((*v)[i], "budget.priority[" + std::to_string(i) + "]"));
    } else {
      fail("budget.priority", "expected a rule name or a list of buses");
    }
  }

  if (const Json* s = find(j, "search")) {
    if (!s->is_object()) fail("search", "expected an object");
    reject_unknown(*s, "search",
                   {"rho", "max_rounds", "wall_clock_budget", "convergence_window", "seed",
                    "reward_normalization", "reward_range"});
    auto& sc_ = cfg.search;
    sc_.rho = get_number(*s, "rho", "search", sc_.rho);
    sc_.max_rounds = get_count(*s, "max_rounds", "search", sc_.max_rounds);
    sc_.wall_clock_budget = get_number(*s, "wall_clock_budget", "search", sc_.wall_clock_budget);
    sc_.convergence_window = get_count(*s, "convergence_window", "search", sc_.convergence_window);
    sc_.seed = get_count(*s, "seed", "search", sc_.seed);
    if (const Json* v = find(*s, "reward_normalization")) {
      const std::string mode = v->is_string() ? v->get<std::string>() : "";
      if (mode == "running-min-max") sc_.normalization = RewardNormalization::RunningMinMax;
      else if (mode == "fixed-range") sc_.normalization = RewardNormalization::FixedRange;
      else fail("search.reward_normalization", "expected running-min-max or fixed-range");
    }
    if (const Json* v = find(*s, "reward_range")) {
      const auto r = number_list(*v, "search.reward_range");
      if (r.size() != 2) fail("search.reward_range", "expected [min, max]");
      sc_.reward_min = r[0];
      sc_.reward_max = r[1];
    }
    try {
      validate_search_config(sc_);
    } catch (const Error& e) {
      fail(e.field(), e.message());
    }
  }

  if (const Json* s = find(j, "solver")) {
    if (!s->is_object()) fail("solver", "expected an object");
    reject_unknown(*s, "solver", {"eps_abs", "eps_rel", "max_iter", "polish"});
    cfg.solver.eps_abs = get_number(*s, "eps_abs", "solver", cfg.solver.eps_abs);
    cfg.solver.eps_rel = get_number(*s, "eps_rel", "solver", cfg.solver.eps_rel);
    cfg.solver.max_iter = static_cast<int>(get_count(*s, "max_iter", "solver", cfg.solver.max_iter));
    if (const Json* v = find(*s, "polish")) {
      if (!v->is_boolean()) fail("solver.polish", "expected true or false");
      cfg.solver.polish = v->get<bool>();
    }
    if (!(cfg.solver.eps_abs > 0.0) || !(cfg.solver.eps_rel >= 0.0))
      fail("solver", "tolerances must be positive");
    if (cfg.solver.max_iter < 1) fail("solver.max_iter", "must be >= 1");
  }

  cfg.workers = get_count(j, "workers", "", 1);
  if (cfg.workers < 1) fail("workers", "must be >= 1");
  if (const Json* v = find(j, "output_dir")) {
    if (!v->is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = resolve(base_dir, v->get<std::string>());
  } else {
    cfg.output_dir = resolve(base_dir, "out");
  }
  cfg.enumeration_guard = get_count(j, "enumeration_guard", "", cfg.enumeration_guard);
  cfg.monolithic_guard = get_count(j, "monolithic_guard", "", cfg.monolithic_guard);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "config file not found: " + path.string(), "config");
  const fs::path abs = fs::absolute(path);
  RunConfig cfg = parse_run_config(detail::read_file(abs), abs.parent_path());
  if (const char* out = std::getenv("SHIFTPLAN_OUTPUT_DIR"); out && *out) cfg.output_dir = out;
  if (const char* w = std::getenv("SHIFTPLAN_WORKERS"); w && *w) {
    char* end = nullptr;
    const long v = std::strtol(w, &end, 10);
    if (*end != '\0' || v < 1) throw Error(ErrorKind::Config, "must be a positive integer", "SHIFTPLAN_WORKERS");
    cfg.workers = static_cast<std::size_t>(v);
  }
  return cfg;
}

std::string effective_config_json(const RunConfig& cfg) {
  OJson j;
  j["network"] = cfg.network_text;
  OJson sc;
  if (cfg.scenario.file) {
    sc["file"] = cfg.scenario.file_text;
    sc["expansion"] = bus_values_json(cfg.scenario.expansion);
  } else if (cfg.scenario.synth) {
    sc["synth"] = synth_json(*cfg.scenario.synth, cfg.scenario);
  }
  j["scenario"] = sc;
  j["shift_cap_scale"] = cfg.shift_cap_scale;
  OJson b;
  b["K"] = cfg.budget.max_locations;
  b["B"] = cfg.budget.max_investment ? OJson(*cfg.budget.max_investment) : OJson(nullptr);
  b["alpha"] = bus_values_json(cfg.budget.alpha);
  b["priority"] = cfg.budget.priority_rule == "list" ? OJson(cfg.budget.priority)
                                                      : OJson(cfg.budget.priority_rule);
  j["budget"] = b;
  j["cap_factor"] = cfg.cap_factor;
  OJson s;
  s["rho"] = cfg.search.rho;
  s["max_rounds"] = cfg.search.max_rounds;
  s["wall_clock_budget"] = std::isfinite(cfg.search.wall_clock_budget)
                               ? OJson(cfg.search.wall_clock_budget)
                               : OJson(nullptr);
  s["convergence_window"] = cfg.search.convergence_window;
  s["seed"] = cfg.search.seed;
  s["reward_normalization"] = std::string(to_string(cfg.search.normalization));
  if (cfg.search.normalization == RewardNormalization::FixedRange)
    s["reward_range"] = {cfg.search.reward_min, cfg.search.reward_max};
  j["search"] = s;
  OJson q;
  q["eps_abs"] = cfg.solver.eps_abs;
  q["eps_rel"] = cfg.solver.eps_rel;
  q["max_iter"] = cfg.solver.max_iter;
  q["polish"] = cfg.solver.polish;
  j["solver"] = q;
  j["enumeration_guard"] = cfg.enumeration_guard;
  j["monolithic_guard"] = cfg.monolithic_guard;
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(effective_config_json(cfg))));
  return buf;
}

std::vector<double> resolve_bus_values(const BusValues& v, const Network& net, double fallback,
                                       std::string_view field) {
  const std::size_t n = net.n_buses();
  if (v.scalar) return std::vector<double>(n, *v.scalar);
  if (!v.list.empty()) {
    if (v.list.size() != n)
      throw Error(ErrorKind::Config,
                  "expected " + std::to_string(n) + " entries, got " + std::to_string(v.list.size()),
                  std::string(field));
    return v.list;
  }
  std::vector<double> out(n, fallback);
  for (const auto& [name, x] : v.by_name)
    out[lookup_bus(net, name, std::string(field) + "." + name)] = x;
  return out;
}

Scenario build_scenario(const RunConfig& cfg, const Network& net) {
  Scenario sc;
  if (cfg.scenario.file) {
    const auto expansion = cfg.scenario.expansion.empty()
                               ? std::vector<double>{}
                               : resolve_bus_values(cfg.scenario.expansion, net, 0.0,
                                                    "scenario.expansion");
    sc = load_scenario(*cfg.scenario.file, net, expansion);
  } else {
    SynthParams p = *cfg.scenario.synth;
    if (!cfg.scenario.load_weights.empty())
      p.load_weights = resolve_bus_values(cfg.scenario.load_weights, net, 0.0,
                                          "scenario.synth.load_weights");
    if (!cfg.scenario.expansion.empty())
      p.expansion = resolve_bus_values(cfg.scenario.expansion, net, 0.0, "scenario.synth.expansion");
    if (!cfg.scenario.res_peak_by_name.empty()) {
      p.res_peak.assign(net.n_res_units(), 0.0);
      for (const auto& [name, x] : cfg.scenario.res_peak_by_name) {
        bool found = false;
        for (std::size_t k = 0; k < net.n_res_units(); ++k) {
          if (net.res_units()[k].name == name) {
            p.res_peak[k] = x;
            found = true;
          }
        }
        if (!found)
          throw Error(ErrorKind::Config, "unknown renewable unit '" + name + "'",
                      "scenario.synth.res_peak." + name);
      }
    }
    try {
      sc = synth_scenario(p, net, cfg.scenario.synth_seed);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.message(), e.field().empty() ? "scenario.synth" : "scenario.synth." + e.field());
    }
  }
  if (cfg.shift_cap_scale != 1.0) sc = scale_shift_cap(sc, net, cfg.shift_cap_scale);
  return sc;
}

ProblemInstance load_instance(const RunConfig& cfg) {
  Network net = load_network(cfg.network_path);
  Scenario sc = build_scenario(cfg, net);

  const std::size_t n = net.n_buses();
  std::vector<double> alpha = cfg.budget.alpha.empty()
                                  ? std::vector<double>(n, 0.0)
                                  : resolve_bus_values(cfg.budget.alpha, net, 0.0, "budget.alpha");
  std::vector<BusIndex> priority;
  if (cfg.budget.priority_rule == "ascending-index") {
    for (std::size_t i = 0; i < n; ++i) priority.push_back(i);
  } else if (cfg.budget.priority_rule == "list") {
    for (std::size_t i = 0; i < cfg.budget.priority.size(); ++i)
      priority.push_back(lookup_bus(net, cfg.budget.priority[i],
                                    "budget.priority[" + std::to_string(i) + "]"));
  }
  const double B = cfg.budget.max_investment.value_or(std::numeric_limits<double>::infinity());
  Budget budget;
  try {
    budget = make_budget(n, cfg.budget.max_locations, B, std::move(alpha), std::move(priority));
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.message(), e.field());
  }
  return ProblemInstance{std::move(net), std::move(sc), std::move(budget)};
}

}  // namespace shiftplan
