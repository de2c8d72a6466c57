#include "twolevel/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "twolevel/analytics.hpp"
#include "twolevel/estimators.hpp"
#include "twolevel/io.hpp"
#include "twolevel/langevin.hpp"
#include "twolevel/population.hpp"

namespace twolevel {

using Json = nlohmann::ordered_json;

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json params_json(const LaserParamsd& p) {
  Json j;
  j["g"] = p.g;
  j["kappa"] = p.kappa;
  j["pump_rate"] = p.pump_rate;
  j["n_atoms"] = p.n_atoms;
  j["omega0"] = p.omega0;
  j["gamma_c"] = p.gamma_c();
  j["eta"] = p.eta();
  j["coupling_lambda"] = p.coupling_lambda();
  return j;
}

Json config_json(const KeyValueConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

Json regime_json(const Regime<double>& r) {
  Json j;
  j["kind"] = std::string(to_string(r.kind));
  j["ratio"] = number(r.ratio);
  j["degenerate_no_pump"] = r.degenerate;
  return j;
}

Json sim_json(const SimConfig& s, const AnalysisPlan& plan) {
  Json j;
  j["dt"] = s.dt;
  j["t_end"] = s.t_end;
  j["burn_in"] = s.burn_in;
  j["n_traj"] = s.n_traj;
  j["seed"] = s.seed;
  j["mode"] = std::string(to_string(s.mode));
  j["m_update"] = std::string(to_string(s.m_update));
  j["sample_interval"] = s.sample_interval();
  j["batch_length"] = plan.window.batch_length;
  j["max_lag"] = plan.window.max_lag;
  j["n_lags"] = plan.window.n_lags;
  j["taper_rate"] = plan.taper_rate;
  j["omega_points"] = plan.omega_offsets.size();
  return j;
}

std::string verdict(const Comparison& c) {
  if (c.informational) return c.pass ? "info-pass" : "info-fail";
  return c.pass ? "pass" : "fail";
}

Json comparisons_json(std::span<const Comparison> cs) {
  Json arr = Json::array();
  for (const auto& c : cs) {
    Json j;
    j["observable"] = c.observable;
    j["tag"] = c.tag;
    j["simulated"] = number(c.simulated);
    j["se"] = number(c.se);
    j["analytic"] = number(c.analytic);
    j["tolerance"] = number(c.tolerance);
    j["provenance"] = c.provenance;
    j["verdict"] = verdict(c);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string comparisons_csv(std::span<const Comparison> cs) {
  std::ostringstream os;
  os << "observable,tag,simulated,se,analytic,tolerance,provenance,verdict\n";
  for (const auto& c : cs)
    os << c.observable << ',' << c.tag << ',' << format_number(c.simulated) << ','
       << format_number(c.se) << ',' << format_number(c.analytic) << ','
       << format_number(c.tolerance) << ',' << c.provenance << ',' << verdict(c) << '\n';
  return os.str();
}

Json moments_json(const EnsembleMoments& m) {
  Json j;
  j["mean_b_re"] = m.mean_b.real();
  j["mean_b_im"] = m.mean_b.imag();
  j["e_abs_b2"] = m.e_abs_b2;
  j["e_abs_b4"] = m.e_abs_b4;
  j["e_abs_m2"] = m.e_abs_m2;
  j["se_mean_b_re"] = m.se_mean_b_re;
  j["se_mean_b_im"] = m.se_mean_b_im;
  j["se_abs_b2"] = m.se_abs_b2;
  j["se_abs_b4"] = m.se_abs_b4;
  j["se_abs_m2"] = m.se_abs_m2;
  j["fourth_moment_ratio"] = number(m.fourth_moment_ratio);
  j["se_fourth_moment_ratio"] = number(m.se_fourth_moment_ratio);
  j["n_eff"] = m.n_eff;
  j["n_batches"] = m.n_batches;
  return j;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

struct SimulationPart {
  Json json;
  std::vector<Comparison> comparisons;
};

SimulationPart simulation_part(const KeyValueConfig& cfg, const LaserParamsd& params) {
  const SimConfig sim = sim_config_from_config(cfg, params);
  const AnalysisPlan plan = analysis_plan_from_config(cfg, params, sim);
  // Budget and settings are checked before any compute.
  try {
    sim.validate(params, true);
  } catch (const BudgetError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const SimulationSummary summary = analyze_simulation(params, sim, plan);

  SimulationPart part;
  part.json["settings"] = sim_json(sim, plan);
  part.json["moments"] = moments_json(summary.moments);
  part.json["photon_variance"] = {{"value", summary.photon_variance.value},
                                  {"se", summary.photon_variance.se}};
  part.json["quadratures"] = {{"var_plus", summary.quadratures.var_plus.value},
                              {"se_var_plus", summary.quadratures.var_plus.se},
                              {"var_minus", summary.quadratures.var_minus.value},
                              {"se_var_minus", summary.quadratures.var_minus.se}};
  if (summary.has_correlation && summary.spectrum.omega_offsets.size() > 0)
    part.json["spectrum_window"] = summary.spectrum.window_id;
  part.comparisons = summary.comparisons;

  if (cfg.has("trajectory_csv")) {
    const std::string path = cfg.get_string("trajectory_csv");
    const std::int64_t n_dump = std::min(cfg.get_int_or("n_dump", 1), sim.n_traj);
    for (std::int64_t i = 0; i < n_dump; ++i) {
      std::string target = path;
      if (n_dump > 1) {
        std::filesystem::path p(path);
        target = (p.parent_path() / (p.stem().string() + "_" + std::to_string(i) +
                                     p.extension().string()))
                     .string();
      }
      auto f = open_output(target);
      write_trajectory_csv(f, simulate_trajectory(params, sim, i));
    }
  }
  if (cfg.has("correlation_csv") && summary.has_correlation) {
    auto f = open_output(cfg.get_string("correlation_csv"));
    write_correlation_csv(f, summary.correlation);
  }
  if (cfg.has("spectrum_csv") && summary.spectrum.omega_offsets.size() > 0) {
    auto f = open_output(cfg.get_string("spectrum_csv"));
    write_spectrum_csv(f, summary.spectrum);
  }
  return part;
}

SimulationPart population_part(const KeyValueConfig& cfg, const LaserParamsd& params) {
  const double eta = params.eta();
  const double n = params.atoms();
  const auto steady = steady_populations(params);

  const double t_end = cfg.get_double_or("pop_t_end", 10.0 / eta);
  const double dt_max = cfg.get_double_or("pop_dt_max", 0.01 / eta);
  const double n_a0 = cfg.get_double_or("pop_n_a0", 0.0);
  const double jump_t_end = cfg.get_double_or("jump_t_end", 5000.0 / eta);
  const std::int64_t max_events = cfg.get_int_or("jump_max_events", 100000);
  const double jump_burn = cfg.get_double_or("jump_burn_in", default_population_burn_in(params));
  const double jump_batch = cfg.get_double_or("jump_batch_length", 10.0 / eta);
  const std::int64_t seed = cfg.get_int_or("seed", 1);

  std::vector<PopulationState<double>> ode;
  std::vector<PopulationState<double>> fixed;
  try {
    ode = ode_evolve(params, {0.0, n_a0, n - n_a0}, t_end, dt_max);
    fixed = ode_evolve(params, {0.0, steady.n_a, n - steady.n_a}, t_end, dt_max);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto jump_n_a0 = static_cast<std::int64_t>(std::llround(n_a0));
  const auto path = jump_evolve(params, {0.0, jump_n_a0, params.n_atoms - jump_n_a0}, jump_t_end,
                                static_cast<std::uint64_t>(seed), max_events);

  SimulationPart part;
  auto& cs = part.comparisons;

  double fixed_dev = 0;
  for (const auto& s : fixed) fixed_dev = std::max(fixed_dev, std::abs(s.n_a - steady.n_a));
  Comparison c;
  c = {"ode_fixed_point_deviation", "Eq40", fixed_dev, 0.0, 0.0, 1e-12 * n, "exact", false, false};
  c.pass = fixed_dev <= c.tolerance;
  cs.push_back(c);

  const double transient = std::abs(n_a0 - steady.n_a) * std::exp(-eta * t_end);
  c = {"ode_final_n_a", "Eq40", ode.back().n_a, 0.0, steady.n_a, transient + 1e-12 * n,
       "transient", false, false};
  c.pass = std::abs(c.simulated - c.analytic) <= c.tolerance;
  cs.push_back(c);

  if (params.pump_rate > 0) {
    const double predicted = params.gamma_c() / params.pump_rate * fixed.back().n_a;
    c = {"ode_n_b_ratio", "Eq41", fixed.back().n_b, 0.0, predicted,
         1e-12 * std::max(1.0, predicted), "exact", false, false};
    c.pass = std::abs(c.simulated - c.analytic) <= c.tolerance;
    cs.push_back(c);
  }

  std::int64_t conservation = 0;
  for (const auto& s : path) conservation = std::max(conservation, std::abs(s.n_a + s.n_b - params.n_atoms));
  c = {"jump_conservation", "Eq23", static_cast<double>(conservation), 0.0, 0.0, 0.0, "exact",
       false, false};
  c.pass = conservation == 0;
  cs.push_back(c);

  Json jump;
  jump["events"] = static_cast<std::int64_t>(path.size()) - 1;
  jump["t_final"] = path.back().t;
  try {
    const auto avg = time_average_upper(path, jump_burn, jump_batch);
    c = {"jump_time_average_n_a", "Eq40", avg.mean, avg.se, steady.n_a, 3.0 * avg.se,
         "statistical", false, false};
    c.pass = std::abs(c.simulated - c.analytic) <= c.tolerance;
    cs.push_back(c);
    jump["n_batches"] = avg.n_batches;
  } catch (const std::invalid_argument& e) {
    jump["time_average_error"] = e.what();
  }

  part.json["ode"] = {{"t_end", t_end},
                      {"n_a0", n_a0},
                      {"n_a_final", ode.back().n_a},
                      {"samples", ode.size()}};
  part.json["jump"] = jump;
  part.json["steady"] = {{"n_a", steady.n_a}, {"n_b", steady.n_b}};

  if (cfg.has("ode_csv")) {
    auto f = open_output(cfg.get_string("ode_csv"));
    write_population_csv(f, std::span<const PopulationState<double>>(ode));
  }
  if (cfg.has("jump_csv")) {
    auto f = open_output(cfg.get_string("jump_csv"));
    write_population_csv(f, std::span<const AtomCounts>(path));
  }
  return part;
}

Json header(std::string_view command, const KeyValueConfig& cfg, const LaserParamsd& params) {
  Json j;
  j["command"] = std::string(command);
  j["config"] = config_json(cfg);
  j["params"] = params_json(params);
  return j;
}

}  // namespace

CommandOutput run_analytic(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  const auto tol = tolerances_from_config(cfg);
  const auto r = steady_state_report(p, tol);
  const double ratio = p.gamma_c() / p.kappa;

  struct Row {
    const char* name;
    const char* tag;
    double value;
  };
  const Row rows[] = {
      {"gamma_c", "Eq15", p.gamma_c()},
      {"eta", "Eq45", p.eta()},
      {"coupling_lambda", "Eq35", p.coupling_lambda()},
      {"n_a", "Eq40", r.n_a},
      {"n_b", "Eq41", r.n_b},
      {"nbar", "Eq54", r.nbar},
      {"dn2", "Eq60", r.dn2},
      {"var_plus", "Eq69", r.var_plus},
      {"var_minus", "Eq69", r.var_minus},
      {"ub_product", "Eq68", r.ub_product},
      {"uncertainty_product", "Eq68", r.uncertainty_product},
      {"nbar_well_above_limit", "Eq55", ratio * p.atoms()},
      {"nbar_threshold_limit", "Eq56", ratio * p.atoms() / 2},
  };

  CommandOutput out;
  out.report = header("analytic", cfg, p);
  out.report["regime"] = regime_json(r.regime);
  Json values = Json::array();
  std::ostringstream csv;
  csv << "name,tag,value\n";
  for (const auto& row : rows) {
    values.push_back({{"name", row.name}, {"tag", row.tag}, {"value", number(row.value)}});
    csv << row.name << ',' << row.tag << ',' << format_number(row.value) << '\n';
  }
  out.report["values"] = values;
  out.report["minimum_uncertainty"] = r.minimum_uncertainty;
  csv << "minimum_uncertainty,Eq68," << (r.minimum_uncertainty ? 1 : 0) << '\n';
  csv << "regime,Eq41," << to_string(r.regime.kind) << '\n';
  out.csv = csv.str();
  return out;
}

CommandOutput run_spectrum(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  const double tol_deg = tol_deg_from_config(cfg);
  const Eigen::ArrayXd grid = omega_grid_from_config(cfg, p);
  const auto curve = spectrum_curve(p, grid, tol_deg);

  CommandOutput out;
  out.default_format = OutputFormat::Csv;
  out.report = header("spectrum", cfg, p);
  out.report["tag"] = "Eq82";
  out.report["omega_offsets"] = std::vector<double>(grid.begin(), grid.end());
  out.report["values"] = std::vector<double>(curve.values.begin(), curve.values.end());
  out.report["negative_count"] = curve.negative_count;
  out.report["positivity"] = curve.negative_count == 0 ? "ok" : "violated";

  std::ostringstream csv;
  csv << "omega_offset,omega,power_spectrum,tag\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    csv << format_number(grid[i]) << ',' << format_number(p.omega0 + grid[i]) << ','
        << format_number(curve.values[i]) << ",Eq82\n";
  out.csv = csv.str();
  return out;
}

CommandOutput run_bandfraction(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  const double tol_deg = tol_deg_from_config(cfg);
  const auto lambdas = lambda_list_from_config(cfg);

  CommandOutput out;
  out.default_format = OutputFormat::Csv;
  out.report = header("bandfraction", cfg, p);
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "lambda,z,n_band,tag\n";
  for (double l : lambdas) {
    const double z = band_fraction_z(p, l, tol_deg);
    const double nb = band_photon_number(p, l, tol_deg);
    rows.push_back({{"lambda", l}, {"z", z}, {"n_band", nb}, {"tag", "Eq86/Eq85"}});
    csv << format_number(l) << ',' << format_number(z) << ',' << format_number(nb) << ",Eq86/Eq85\n";
  }
  out.report["rows"] = rows;
  out.csv = csv.str();
  return out;
}

CommandOutput run_simulate(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  auto part = simulation_part(cfg, p);
  CommandOutput out;
  out.report = header("simulate", cfg, p);
  out.report["regime"] = regime_json(classify_regime(p, tolerances_from_config(cfg)));
  for (auto& [k, v] : part.json.items()) out.report[k] = v;
  out.report["comparisons"] = comparisons_json(part.comparisons);
  out.pass = all_pass(part.comparisons);
  out.report["overall"] = out.pass ? "pass" : "fail";
  out.csv = comparisons_csv(part.comparisons);
  return out;
}

CommandOutput run_populations(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  auto part = population_part(cfg, p);
  CommandOutput out;
  out.report = header("populations", cfg, p);
  for (auto& [k, v] : part.json.items()) out.report[k] = v;
  out.report["comparisons"] = comparisons_json(part.comparisons);
  out.pass = all_pass(part.comparisons);
  out.report["overall"] = out.pass ? "pass" : "fail";
  out.csv = comparisons_csv(part.comparisons);
  return out;
}

CommandOutput run_compare(const KeyValueConfig& cfg) {
  const LaserParamsd p = params_from_config(cfg);
  auto sim = simulation_part(cfg, p);
  auto pop = population_part(cfg, p);
  std::vector<Comparison> all = sim.comparisons;
  all.insert(all.end(), pop.comparisons.begin(), pop.comparisons.end());

  CommandOutput out;
  out.report = header("compare", cfg, p);
  out.report["regime"] = regime_json(classify_regime(p, tolerances_from_config(cfg)));
  out.report["simulation"] = sim.json;
  out.report["populations"] = pop.json;
  out.report["comparisons"] = comparisons_json(all);
  out.pass = all_pass(all);
  out.report["overall"] = out.pass ? "pass" : "fail";
  out.csv = comparisons_csv(all);
  return out;
}

int execute(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  CommandOutput result;
  try {
    KeyValueConfig cfg = spec.params_path.empty() ? KeyValueConfig{}
                                                  : KeyValueConfig::load(spec.params_path);
    for (const auto& o : spec.overrides) cfg.apply_override(o);
    if (spec.seed) cfg.set("seed", std::to_string(*spec.seed));

    if (spec.command == "analytic") result = run_analytic(cfg);
    else if (spec.command == "spectrum") result = run_spectrum(cfg);
    else if (spec.command == "bandfraction") result = run_bandfraction(cfg);
    else if (spec.command == "simulate") result = run_simulate(cfg);
    else if (spec.command == "populations") result = run_populations(cfg);
    else if (spec.command == "compare") result = run_compare(cfg);
    else throw ConfigError("unknown command '" + spec.command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BudgetError& e) {
    err << "budget error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }

  const OutputFormat format = spec.output_format.value_or(result.default_format);
  const std::string text =
      format == OutputFormat::Json ? result.report.dump(2) + "\n" : result.csv;
  if (spec.output_path.empty()) {
    out << text;
  } else {
    std::ofstream f(spec.output_path, std::ios::binary);
    if (!f) {
      err << "runtime error: cannot write '" << spec.output_path << "'\n";
      return kExitRuntime;
    }
    f << text;
  }
  if (spec.strict && !result.pass) {
    err << "comparison failure: at least one observable is outside its tolerance\n";
    return kExitComparison;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-level laser toolkit: closed-form results and stochastic verification"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string format;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"analytic", "steady-state report (populations, photon statistics, quadratures)"},
      {"spectrum", "power spectrum on a frequency grid"},
      {"bandfraction", "fraction of photons within +-lambda of the line centre"},
      {"simulate", "Langevin ensemble with estimator-vs-closed-form comparison"},
      {"populations", "population ODE and jump-process runs"},
      {"compare", "simulate and populations in one report"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", spec.params_path, "key-value configuration file");
    sub->add_option("--set", spec.overrides, "override key=value (repeatable)");
    sub->add_option("--output,-o", spec.output_path, "output file (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "base RNG seed");
    sub->add_flag("--strict", spec.strict, "exit 3 when a comparison fails");
    sub->callback([&spec, name = std::string(name)] { spec.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (e.get_exit_code() == 0) {
      out << (sub ? sub->help() : app.help());
      return kExitOk;
    }
    err << e.what() << '\n';
    return kExitConfig;
  }

  if (!format.empty()) spec.output_format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed") > 0) spec.seed = seed;
  return execute(spec, out, err);
}

}  // namespace twolevel
