#include "shiftplan/scenario.hpp"

#include "shiftplan/error.hpp"
#include "text_io.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace shiftplan {

namespace {

constexpr double kHoursPerYear = 8760.0;

void require_shape(const Eigen::MatrixXd& m, std::size_t rows, std::size_t cols,
                   const char* field) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
    throw Error(ErrorKind::ShapeMismatch,
                "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()),
                field);
}

void require_nonnegative(const Eigen::MatrixXd& m, const char* field) {
  for (Eigen::Index t = 0; t < m.rows(); ++t)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!(m(t, c) >= 0.0) || !std::isfinite(m(t, c)))
        throw Error(ErrorKind::NegativeValue,
                    "value " + detail::format_double(m(t, c)) + " at step " + std::to_string(t),
                    std::string(field) + "[" + std::to_string(c) + "]");
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Standard normal draw from two raw 64-bit outputs (Box-Muller). Only the
// engine's integer stream feeds it, so sequences match across standard libraries.
double standard_normal(std::mt19937_64& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(rng() >> 11) * kScale;          // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> normalized_weights(const std::vector<double>& w, std::size_t count,
                                       const char* field) {
  if (w.empty()) return std::vector<double>(count, count ? 1.0 / static_cast<double>(count) : 0.0);
  if (w.size() != count)
    throw Error(ErrorKind::InvalidParams,
                "expected " + std::to_string(count) + " weights, got " + std::to_string(w.size()),
                field);
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw Error(ErrorKind::InvalidParams, "weights must be non-negative", field);
    sum += x;
  }
  if (!(sum > 0.0)) throw Error(ErrorKind::InvalidParams, "weights sum to zero", field);
  std::vector<double> out(w);
  for (double& x : out) x /= sum;
  return out;
}

void require_param(bool ok, const char* field, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParams, what, field);
}

// 1 at the peak hour, 1 - amplitude half a period later.
double cosine_shape(double phase_fraction, double amplitude) {
  return 1.0 - amplitude * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * phase_fraction));
}

}  // namespace

void validate_scenario(const Scenario& sc, const Network& net) {
  const std::size_t T = sc.horizon();
  if (T == 0) throw Error(ErrorKind::EmptyHorizon, "scenario has no timesteps");
  if (!(sc.dt_hours > 0.0) || !std::isfinite(sc.dt_hours))
    throw Error(ErrorKind::InvalidParams, "step length must be positive", "dt_hours");
  require_shape(sc.res_avail, T, net.n_res_units(), "res_avail");
  require_shape(sc.base_load, T, net.n_buses(), "base_load");
  require_shape(sc.ctrl_load, T, net.n_ctrl_loads(), "ctrl_load");
  require_shape(sc.shift_cap, T, net.n_buses(), "shift_cap");
  require_nonnegative(sc.res_avail, "res_avail");
  require_nonnegative(sc.base_load, "base_load");
  require_nonnegative(sc.ctrl_load, "ctrl_load");
  require_nonnegative(sc.shift_cap, "shift_cap");
  for (std::size_t t = 0; t < T; ++t) {
    const Eigen::VectorXd hosted = hosted_ctrl_load(sc, net, t);
    for (std::size_t b = 0; b < net.n_buses(); ++b)
      if (sc.shift_cap(t, b) < hosted(b))
        throw Error(ErrorKind::ShapeMismatch,
                    "shift capacity below hosted controllable load at step " + std::to_string(t),
                    "cap_" + net.bus_names()[b]);
  }
}

Eigen::VectorXd hosted_ctrl_load(const Scenario& sc, const Network& net, std::size_t t) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.n_buses()));
  const auto& buses = net.ctrl_load_buses();
  for (std::size_t k = 0; k < buses.size(); ++k)
    out(static_cast<Eigen::Index>(buses[k])) += sc.ctrl_load(static_cast<Eigen::Index>(t),
                                                             static_cast<Eigen::Index>(k));
  return out;
}

Eigen::VectorXd shift_headroom(const Scenario& sc, const Network& net, std::size_t t) {
  return (sc.shift_cap.row(static_cast<Eigen::Index>(t)).transpose() -
          hosted_ctrl_load(sc, net, t))
      .cwiseMax(0.0);
}

Scenario parse_scenario_csv(std::string_view text, const Network& net,
                            const std::vector<double>& expansion) {
  const std::size_t n = net.n_buses();
  if (!expansion.empty() && expansion.size() != n)
    throw Error(ErrorKind::ShapeMismatch, "one expansion value per bus required", "expansion");

  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      auto line = trim(text.substr(start, nl - start));
      if (!line.empty() && line.front() != '#') lines.push_back(line);
      start = nl + 1;
    }
  }
  if (lines.empty()) throw Error(ErrorKind::EmptyHorizon, "scenario table is empty");

  const auto header = split_row(lines.front());
  const auto index_name = trim(header.front());
  double index_unit = 0.0;
  if (index_name == "hour")
    index_unit = 1.0;
  else if (index_name == "day")
    index_unit = 24.0;
  else
    throw Error(ErrorKind::ShapeMismatch, "first column must be 'hour' or 'day'", "header[0]");

  enum class Kind { Res, Load, Ctrl, Cap };
  struct Column {
    Kind kind;
    std::size_t index;
  };
  std::vector<Column> columns;
  std::vector<bool> res_seen(net.n_res_units(), false);
  std::vector<bool> cap_seen(n, false);
  std::map<BusIndex, std::vector<std::size_t>> ctrl_by_bus;
  for (std::size_t k = 0; k < net.n_ctrl_loads(); ++k)
    ctrl_by_bus[net.ctrl_load_buses()[k]].push_back(k);

  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    const std::string field = "header[" + std::to_string(c) + "]";
    auto take_bus = [&](std::string_view rest) {
      try {
        return net.bus_index(rest);
      } catch (const Error&) {
        throw Error(ErrorKind::ShapeMismatch, "unknown bus in column '" + std::string(name) + "'",
                    field);
      }
    };
    if (name.starts_with("res_")) {
      const auto unit = name.substr(4);
      std::size_t idx = net.n_res_units();
      for (std::size_t r = 0; r < net.n_res_units(); ++r)
        if (net.res_units()[r].name == unit) idx = r;
      if (idx == net.n_res_units())
        throw Error(ErrorKind::ShapeMismatch, "unknown renewable unit '" + std::string(unit) + "'",
                    field);
      res_seen[idx] = true;
      columns.push_back({Kind::Res, idx});
    } else if (name.starts_with("load_")) {
      columns.push_back({Kind::Load, take_bus(name.substr(5))});
    } else if (name.starts_with("ctrl_")) {
      const BusIndex bus = take_bus(name.substr(5));
      auto it = ctrl_by_bus.find(bus);
      if (it == ctrl_by_bus.end() || it->second.size() != 1)
        throw Error(ErrorKind::ShapeMismatch,
                    "bus '" + net.bus_names()[bus] + "' does not host exactly one controllable load",
                    field);
      columns.push_back({Kind::Ctrl, it->second.front()});
    } else if (name.starts_with("cap_")) {
      const BusIndex bus = take_bus(name.substr(4));
      cap_seen[bus] = true;
      columns.push_back({Kind::Cap, bus});
    } else {
      throw Error(ErrorKind::ShapeMismatch, "unrecognised column '" + std::string(name) + "'", field);
    }
  }
  for (std::size_t r = 0; r < res_seen.size(); ++r)
    if (!res_seen[r])
      throw Error(ErrorKind::ShapeMismatch, "missing availability column",
                  "res_" + net.res_units()[r].name);

  const std::size_t T = lines.size() - 1;
  if (T == 0) throw Error(ErrorKind::EmptyHorizon, "scenario table has a header but no rows");

  Scenario sc;
  sc.res_avail = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                       static_cast<Eigen::Index>(net.n_res_units()));
  sc.base_load = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
  sc.ctrl_load = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                       static_cast<Eigen::Index>(net.n_ctrl_loads()));
  sc.shift_cap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));

  std::vector<double> index(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto cells = split_row(lines[t + 1]);
    const std::string row = "row[" + std::to_string(t + 1) + "]";
    if (cells.size() != header.size())
      throw Error(ErrorKind::ShapeMismatch,
                  "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()),
                  row);
    if (!detail::parse_double(cells[0], index[t]))
      throw Error(ErrorKind::ShapeMismatch, "bad time index", row);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v))
        throw Error(ErrorKind::ShapeMismatch, "not a number: '" + std::string(cells[c]) + "'",
                    row + "." + std::string(trim(header[c])));
      if (v < 0.0)
        throw Error(ErrorKind::NegativeValue, "value " + detail::format_double(v),
                    row + "." + std::string(trim(header[c])));
      const auto ti = static_cast<Eigen::Index>(t);
      const auto ci = static_cast<Eigen::Index>(columns[c - 1].index);
      switch (columns[c - 1].kind) {
        case Kind::Res: sc.res_avail(ti, ci) = v; break;
        case Kind::Load: sc.base_load(ti, ci) = v; break;
        case Kind::Ctrl: sc.ctrl_load(ti, ci) = v; break;
        case Kind::Cap: sc.shift_cap(ti, ci) = v; break;
      }
    }
  }

  if (T >= 2) {
    const double step = index[1] - index[0];
    if (!(step > 0.0)) throw Error(ErrorKind::ShapeMismatch, "time index must increase", "row[2]");
    for (std::size_t t = 2; t < T; ++t)
      if (std::abs((index[t] - index[t - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step)))
        throw Error(ErrorKind::ShapeMismatch, "time index is not evenly spaced",
                    "row[" + std::to_string(t + 1) + "]");
    sc.dt_hours = step * index_unit;
  } else {
    sc.dt_hours = index_unit;
  }

  for (std::size_t t = 0; t < T; ++t) {
    const Eigen::VectorXd hosted = hosted_ctrl_load(sc, net, t);
    for (std::size_t b = 0; b < n; ++b)
      if (!cap_seen[b])
        sc.shift_cap(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) =
            hosted(static_cast<Eigen::Index>(b)) + (expansion.empty() ? 0.0 : expansion[b]);
  }

  validate_scenario(sc, net);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const Network& net,
                       const std::vector<double>& expansion) {
  return parse_scenario_csv(detail::read_file(path), net, expansion);
}

std::string scenario_to_csv(const Scenario& sc, const Network& net) {
  const bool daily = std::fmod(sc.dt_hours, 24.0) == 0.0;
  const double step = daily ? sc.dt_hours / 24.0 : sc.dt_hours;

  std::ostringstream out;
  out << (daily ? "day" : "hour");
  for (const auto& r : net.res_units()) out << ",res_" << r.name;
  for (const auto& b : net.bus_names()) out << ",load_" << b;
  for (BusIndex b : net.ctrl_load_buses()) out << ",ctrl_" << net.bus_names()[b];
  for (const auto& b : net.bus_names()) out << ",cap_" << b;
  out << '\n';

  auto row_out = [&](const Eigen::MatrixXd& m, Eigen::Index t) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << detail::format_double(m(t, c));
  };
  for (std::size_t t = 0; t < sc.horizon(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    out << detail::format_double(static_cast<double>(t) * step);
    row_out(sc.res_avail, ti);
    row_out(sc.base_load, ti);
    row_out(sc.ctrl_load, ti);
    row_out(sc.shift_cap, ti);
    out << '\n';
  }
  return out.str();
}

void save_scenario(const Scenario& sc, const Network& net, const std::filesystem::path& path) {
  detail::write_file(path, scenario_to_csv(sc, net));
}

Scenario synth_scenario(const SynthParams& p, const Network& net, std::uint64_t seed) {
  const std::size_t n = net.n_buses();
  const std::size_t d = net.n_ctrl_loads();
  const std::size_t R = net.n_res_units();

  require_param(p.horizon > 0, "horizon", "horizon must be at least one step");
  require_param(p.dt_hours > 0.0, "dt_hours", "step length must be positive");
  require_param(p.load_peak >= 0.0, "load_peak", "must be non-negative");
  require_param(p.ctrl_peak >= 0.0, "ctrl_peak", "must be non-negative");
  for (auto [v, name] : {std::pair{p.load_diurnal_amplitude, "load_diurnal_amplitude"},
                         std::pair{p.load_seasonal_amplitude, "load_seasonal_amplitude"},
                         std::pair{p.ctrl_diurnal_amplitude, "ctrl_diurnal_amplitude"},
                         std::pair{p.res_diurnal_amplitude, "res_diurnal_amplitude"},
                         std::pair{p.res_seasonal_amplitude, "res_seasonal_amplitude"}})
    require_param(v >= 0.0 && v <= 1.0, name, "amplitude must lie in [0, 1]");
  require_param(p.noise >= 0.0, "noise", "must be non-negative");
  require_param(p.growth_rate > -1.0, "growth_rate", "must exceed -100%");
  require_param(p.res_mean_factor >= 0.0, "res_mean_factor", "must be non-negative");
  require_param(p.res_peak.size() == R, "res_peak", "one peak per renewable unit required");
  for (double v : p.res_peak) require_param(v >= 0.0, "res_peak", "must be non-negative");
  require_param(p.expansion.empty() || p.expansion.size() == n, "expansion",
                "one expansion value per bus required");
  for (double v : p.expansion) require_param(v >= 0.0, "expansion", "must be non-negative");

  const auto load_w = normalized_weights(p.load_weights, n, "load_weights");
  const auto ctrl_w = normalized_weights(p.ctrl_weights, d, "ctrl_weights");

  const auto T = static_cast<Eigen::Index>(p.horizon);
  Scenario sc;
  sc.dt_hours = p.dt_hours;
  sc.res_avail.resize(T, static_cast<Eigen::Index>(R));
  sc.base_load.resize(T, static_cast<Eigen::Index>(n));
  sc.ctrl_load.resize(T, static_cast<Eigen::Index>(d));
  sc.shift_cap.resize(T, static_cast<Eigen::Index>(n));

  std::mt19937_64 rng(seed);
  const bool daily = p.dt_hours >= 24.0;
  auto noisy = [&](double v) {
    if (p.noise == 0.0) return v;
    return v * std::max(0.0, 1.0 + p.noise * standard_normal(rng));
  };

  for (Eigen::Index t = 0; t < T; ++t) {
    const double hours = static_cast<double>(t) * p.dt_hours;
    const double hour_of_day = std::fmod(hours, 24.0);
    const double day_of_year = std::fmod(hours / 24.0, 365.0);
    // Daily steps carry daily peak values, so the diurnal factor sits at its maximum.
    const double load_day = daily ? 1.0 : cosine_shape((hour_of_day - 18.0) / 24.0,
                                                       p.load_diurnal_amplitude);
    const double load_season = cosine_shape((day_of_year - 15.0) / 365.0,
                                            p.load_seasonal_amplitude);
    const double total_load = noisy(p.load_peak * load_day * load_season);
    for (std::size_t b = 0; b < n; ++b)
      sc.base_load(t, static_cast<Eigen::Index>(b)) = total_load * load_w[b];

    const double ctrl_day = daily ? 1.0 : cosine_shape((hour_of_day - 14.0) / 24.0,
                                                       p.ctrl_diurnal_amplitude);
    const double growth = std::pow(1.0 + p.growth_rate, hours / kHoursPerYear);
    const double total_ctrl = noisy(p.ctrl_peak * ctrl_day * growth);
    for (std::size_t k = 0; k < d; ++k)
      sc.ctrl_load(t, static_cast<Eigen::Index>(k)) = total_ctrl * ctrl_w[k];

    const double res_day = daily ? 1.0 : cosine_shape((hour_of_day - 3.0) / 24.0,
                                                      p.res_diurnal_amplitude);
    const double res_season = cosine_shape((day_of_year - 15.0) / 365.0,
                                           p.res_seasonal_amplitude);
    for (std::size_t r = 0; r < R; ++r) {
      const double cf = std::clamp(noisy(p.res_mean_factor * res_day * res_season), 0.0, 1.0);
      sc.res_avail(t, static_cast<Eigen::Index>(r)) = p.res_peak[r] * cf;
    }

    const Eigen::VectorXd hosted = hosted_ctrl_load(sc, net, static_cast<std::size_t>(t));
    for (std::size_t b = 0; b < n; ++b)
      sc.shift_cap(t, static_cast<Eigen::Index>(b)) =
          hosted(static_cast<Eigen::Index>(b)) + (p.expansion.empty() ? 0.0 : p.expansion[b]);
  }

  validate_scenario(sc, net);
  return sc;
}

Scenario scale_shift_cap(const Scenario& sc, const Network& net, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor))
    throw Error(ErrorKind::InvalidParams, "scale factor must be non-negative", "factor");
  Scenario out = sc;
  if (factor == 1.0) return out;
  for (std::size_t t = 0; t < sc.horizon(); ++t) {
    const Eigen::VectorXd hosted = hosted_ctrl_load(sc, net, t);
    for (std::size_t b = 0; b < net.n_buses(); ++b) {
      const auto ti = static_cast<Eigen::Index>(t);
      const auto bi = static_cast<Eigen::Index>(b);
      const double h = hosted(bi);
      out.shift_cap(ti, bi) = h + factor * (sc.shift_cap(ti, bi) - h);
    }
  }
  return out;
}

}  // namespace shiftplan
