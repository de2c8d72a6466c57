#include "twolevel/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "twolevel/io.hpp"

namespace twolevel {

namespace {

constexpr std::array kKeys = {
    KeyDoc{"g", "model", "atom-field coupling constant (rad/time)"},
    KeyDoc{"gamma_c", "model", "stimulated emission decay constant 4g^2/kappa; alternative to g"},
    KeyDoc{"kappa", "model", "cavity damping rate"},
    KeyDoc{"pump_rate", "model", "single-atom pump rate r_a"},
    KeyDoc{"n_atoms", "model", "number of atoms N"},
    KeyDoc{"omega0", "model", "central optical frequency (spectrum offset origin)"},
    KeyDoc{"tol_rel", "model", "relative tolerance of the at-threshold test (default 1e-6)"},
    KeyDoc{"eps_wat", "model", "well-above-threshold cut gamma_c <= eps_wat r_a (default 0.01)"},
    KeyDoc{"tol_deg", "model", "relative |kappa-eta| switching to degenerate limits (default 1e-9)"},
    KeyDoc{"dt", "sim", "integration step (default 0.1/max(kappa,eta))"},
    KeyDoc{"t_end", "sim", "trajectory length (default 200/min(kappa,eta))"},
    KeyDoc{"burn_in", "sim", "discarded initial window (default 10/min(kappa,eta))"},
    KeyDoc{"n_traj", "sim", "ensemble size (default 100)"},
    KeyDoc{"seed", "sim", "base RNG seed; trajectory i uses seed + i (default 1)"},
    KeyDoc{"mode", "sim", "full | adiabatic (default adiabatic)"},
    KeyDoc{"m_update", "sim", "exact_ou | euler (default exact_ou)"},
    KeyDoc{"sample_interval", "sim", "recording interval, rounded to a multiple of dt"},
    KeyDoc{"sample_budget", "sim", "upper bound on n_traj*t_end/dt (default 5e9)"},
    KeyDoc{"batch_length", "sim", "batch-means batch length (default 10/min(kappa,eta))"},
    KeyDoc{"max_lag", "sim", "largest correlation lag (default 16/min(kappa,eta))"},
    KeyDoc{"n_lags", "sim", "number of correlation lags including 0"},
    KeyDoc{"threads", "sim", "worker threads, 0 = hardware concurrency"},
    KeyDoc{"m0_re", "sim", "initial polarization, real part (default 0)"},
    KeyDoc{"m0_im", "sim", "initial polarization, imaginary part (default 0)"},
    KeyDoc{"b0_re", "sim", "initial field, real part (default 0)"},
    KeyDoc{"b0_im", "sim", "initial field, imaginary part (default 0)"},
    KeyDoc{"omega_min", "grid", "lowest omega - omega0 (default -omega_max)"},
    KeyDoc{"omega_max", "grid", "highest omega - omega0 (default 10 min(kappa,eta))"},
    KeyDoc{"omega_points", "grid", "number of frequency points (default 201)"},
    KeyDoc{"taper_rate", "grid", "exponential taper of the spectrum estimator (default 0.01 min(kappa,eta))"},
    KeyDoc{"lambdas", "grid", "comma-separated band half-widths"},
    KeyDoc{"lambda_max", "grid", "band half-width grid [0, lambda_max]"},
    KeyDoc{"lambda_points", "grid", "number of half-widths on that grid (default 61)"},
    KeyDoc{"pop_t_end", "population", "ODE horizon (default 10/eta)"},
    KeyDoc{"pop_dt_max", "population", "largest ODE sample spacing (default 0.01/eta)"},
    KeyDoc{"pop_n_a0", "population", "initial upper-level population (default 0)"},
    KeyDoc{"jump_t_end", "population", "jump-process horizon (default 5000/eta)"},
    KeyDoc{"jump_max_events", "population", "jump-process event cap (default 100000)"},
    KeyDoc{"jump_burn_in", "population", "discarded jump window (default 10/eta)"},
    KeyDoc{"jump_batch_length", "population", "jump batch length (default 10/eta)"},
    KeyDoc{"trajectory_csv", "output", "write the first n_dump field trajectories here"},
    KeyDoc{"n_dump", "output", "number of trajectories to dump (default 1)"},
    KeyDoc{"correlation_csv", "output", "write the estimated correlation here"},
    KeyDoc{"spectrum_csv", "output", "write the estimated spectrum here"},
    KeyDoc{"ode_csv", "output", "write the ODE population trajectory here"},
    KeyDoc{"jump_csv", "output", "write the jump-process path here"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::span<const KeyDoc> documented_keys() { return kKeys; }

bool is_documented_key(std::string_view key) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const KeyDoc& d) { return d.key == key; });
}

double parse_double(std::string_view text, std::string_view key) {
  text = trim(text);
  double value = 0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value))
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" +
                      std::string(text) + "'");
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view key) {
  text = trim(text);
  std::int64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return value;
  // Accept integral floating forms such as 1e5.
  const double d = parse_double(text, key);
  if (d != std::floor(d) || std::abs(d) > 9e15)
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" +
                      std::string(text) + "'");
  return static_cast<std::int64_t>(d);
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
  KeyValueConfig cfg;
  std::vector<std::string> errors;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where + ": expected 'key = value'");
      continue;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!is_documented_key(key)) {
      errors.push_back(where + ": unknown key '" + std::string(key) + "'");
      continue;
    }
    if (value.empty()) {
      errors.push_back(where + ": key '" + std::string(key) + "' has no value");
      continue;
    }
    if (cfg.has(key)) {
      errors.push_back(where + ": duplicate key '" + std::string(key) + "'");
      continue;
    }
    cfg.values_.emplace(std::string(key), std::string(value));
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += e + "\n";
    msg.pop_back();
    throw ConfigError(msg);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValueConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void KeyValueConfig::set(std::string_view key, std::string_view value) {
  if (!is_documented_key(key)) throw ConfigError("unknown key '" + std::string(key) + "'");
  if (value.empty()) throw ConfigError("key '" + std::string(key) + "' has no value");
  values_.insert_or_assign(std::string(key), std::string(value));
}

bool KeyValueConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::string KeyValueConfig::get_string(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key '" + std::string(key) + "'");
  return it->second;
}

double KeyValueConfig::get_double(std::string_view key) const {
  return parse_double(get_string(key), key);
}

std::int64_t KeyValueConfig::get_int(std::string_view key) const {
  return parse_int(get_string(key), key);
}

std::vector<double> KeyValueConfig::get_double_list(std::string_view key) const {
  const std::string text = get_string(key);
  std::vector<double> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_double(rest.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> KeyValueConfig::find_double(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key);
}

std::optional<std::int64_t> KeyValueConfig::find_int(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return get_int(key);
}

double KeyValueConfig::get_double_or(std::string_view key, double fallback) const {
  return find_double(key).value_or(fallback);
}

std::int64_t KeyValueConfig::get_int_or(std::string_view key, std::int64_t fallback) const {
  return find_int(key).value_or(fallback);
}

std::string KeyValueConfig::get_string_or(std::string_view key, std::string_view fallback) const {
  return has(key) ? get_string(key) : std::string(fallback);
}

LaserParamsd params_from_config(const KeyValueConfig& cfg) {
  LaserParamsd p;
  p.kappa = cfg.get_double("kappa");
  p.pump_rate = cfg.get_double("pump_rate");
  p.n_atoms = cfg.get_int("n_atoms");
  p.omega0 = cfg.get_double_or("omega0", 0.0);
  const bool has_g = cfg.has("g");
  const bool has_gc = cfg.has("gamma_c");
  if (has_g == has_gc) throw ConfigError("exactly one of 'g' and 'gamma_c' must be given");
  try {
    if (has_g) {
      p.g = cfg.get_double("g");
      p.validate();
    } else {
      p = LaserParamsd::from_rates(cfg.get_double("gamma_c"), p.kappa, p.pump_rate, p.n_atoms,
                                   p.omega0);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid model parameters: ") + e.what());
  }
  return p;
}

RegimeTolerances tolerances_from_config(const KeyValueConfig& cfg) {
  RegimeTolerances t;
  t.tol_rel = cfg.get_double_or("tol_rel", t.tol_rel);
  t.eps_wat = cfg.get_double_or("eps_wat", t.eps_wat);
  if (!(t.tol_rel > 0 && t.tol_rel < 1)) throw ConfigError("key 'tol_rel': must lie in (0, 1)");
  if (!(t.eps_wat > 0 && t.eps_wat < 1)) throw ConfigError("key 'eps_wat': must lie in (0, 1)");
  return t;
}

double tol_deg_from_config(const KeyValueConfig& cfg) {
  const double t = cfg.get_double_or("tol_deg", kDefaultTolDeg);
  if (!(t > 0 && t < 1)) throw ConfigError("key 'tol_deg': must lie in (0, 1)");
  return t;
}

SimConfig sim_config_from_config(const KeyValueConfig& cfg, const LaserParamsd& params) {
  const double slowest = std::min(params.kappa, params.eta());
  const double fastest = std::max(params.kappa, params.eta());
  SimConfig s;
  s.dt = cfg.get_double_or("dt", 0.1 / fastest);
  s.t_end = cfg.get_double_or("t_end", 200.0 / slowest);
  s.burn_in = cfg.get_double_or("burn_in", 10.0 / slowest);
  s.n_traj = cfg.get_int_or("n_traj", 100);
  const std::int64_t seed = cfg.get_int_or("seed", 1);
  if (seed < 0) throw ConfigError("key 'seed': must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  try {
    s.mode = parse_field_mode(cfg.get_string_or("mode", "adiabatic"));
    s.m_update = parse_m_update(cfg.get_string_or("m_update", "exact_ou"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(s.dt > 0)) throw ConfigError("key 'dt': must be positive");
  const double interval = cfg.get_double_or("sample_interval", 0.05 / slowest);
  if (!(interval > 0)) throw ConfigError("key 'sample_interval': must be positive");
  s.sample_every = std::max<std::int64_t>(1, std::llround(interval / s.dt));
  s.sample_budget = cfg.get_double_or("sample_budget", s.sample_budget);
  s.m0 = {cfg.get_double_or("m0_re", 0.0), cfg.get_double_or("m0_im", 0.0)};
  s.b0 = {cfg.get_double_or("b0_re", 0.0), cfg.get_double_or("b0_im", 0.0)};
  const std::int64_t threads = cfg.get_int_or("threads", 0);
  if (threads < 0) throw ConfigError("key 'threads': must be non-negative");
  s.threads = static_cast<unsigned>(threads);
  return s;
}

Eigen::ArrayXd omega_grid_from_config(const KeyValueConfig& cfg, const LaserParamsd& params) {
  const double slowest = std::min(params.kappa, params.eta());
  const double hi = cfg.get_double_or("omega_max", 10.0 * slowest);
  const double lo = cfg.get_double_or("omega_min", -hi);
  const std::int64_t n = cfg.get_int_or("omega_points", 201);
  if (n < 2) throw ConfigError("key 'omega_points': need at least 2 points");
  if (!(hi > lo)) throw ConfigError("key 'omega_max': must exceed omega_min");
  return Eigen::ArrayXd::LinSpaced(n, lo, hi);
}

AnalysisPlan analysis_plan_from_config(const KeyValueConfig& cfg, const LaserParamsd& params,
                                       const SimConfig& sim) {
  const double slowest = std::min(params.kappa, params.eta());
  AnalysisPlan plan;
  plan.window = default_window(params, sim);
  plan.window.batch_length = cfg.get_double_or("batch_length", plan.window.batch_length);
  const double stationary = sim.t_end - sim.burn_in;
  plan.window.max_lag = cfg.get_double_or("max_lag", std::min(16.0 / slowest, 0.5 * stationary));
  const double interval = sim.sample_interval();
  const auto natural = static_cast<std::int64_t>(std::floor(plan.window.max_lag / interval + 1e-9)) + 1;
  plan.window.n_lags = cfg.get_int_or("n_lags", std::min<std::int64_t>(natural, 321));
  if (plan.window.n_lags < 0) throw ConfigError("key 'n_lags': must be non-negative");
  if (plan.window.max_lag > 0.5 * stationary * (1 + 1e-12))
    throw ConfigError("key 'max_lag': must not exceed (t_end - burn_in)/2");
  if (plan.window.n_lags >= 2) plan.omega_offsets = omega_grid_from_config(cfg, params);
  plan.taper_rate = cfg.get_double_or("taper_rate", 0.01 * slowest);
  if (!(plan.taper_rate >= 0)) throw ConfigError("key 'taper_rate': must be non-negative");
  return plan;
}

std::vector<double> lambda_list_from_config(const KeyValueConfig& cfg) {
  std::vector<double> out;
  if (cfg.has("lambdas")) {
    out = cfg.get_double_list("lambdas");
  } else if (cfg.has("lambda_max")) {
    const double hi = cfg.get_double("lambda_max");
    const std::int64_t n = cfg.get_int_or("lambda_points", 61);
    if (n < 2) throw ConfigError("key 'lambda_points': need at least 2 points");
    for (std::int64_t i = 0; i < n; ++i)
      out.push_back(hi * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    out = {0.5, 1.0, 2.0};
  }
  for (double l : out)
    if (!(l >= 0)) throw ConfigError("band half-widths must be non-negative, got " + format_number(l));
  return out;
}

}  // namespace twolevel
