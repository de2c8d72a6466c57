#include "twolevel/langevin.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "twolevel/io.hpp"

namespace twolevel {

std::string_view to_string(FieldMode mode) {
  return mode == FieldMode::Full ? "full" : "adiabatic";
}

std::string_view to_string(MUpdate update) {
  return update == MUpdate::Euler ? "euler" : "exact_ou";
}

FieldMode parse_field_mode(std::string_view text) {
  if (text == "full") return FieldMode::Full;
  if (text == "adiabatic") return FieldMode::Adiabatic;
  throw std::invalid_argument("mode must be 'full' or 'adiabatic', got '" + std::string(text) + "'");
}

MUpdate parse_m_update(std::string_view text) {
  if (text == "euler") return MUpdate::Euler;
  if (text == "exact_ou") return MUpdate::ExactOu;
  throw std::invalid_argument("m_update must be 'euler' or 'exact_ou', got '" +
                              std::string(text) + "'");
}

std::int64_t SimConfig::steps() const {
  return static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
}

double SimConfig::step_count_total() const {
  return static_cast<double>(n_traj) * t_end / dt;
}

void SimConfig::validate(const LaserParamsd& params, bool stationary) const {
  params.validate();
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be positive");
  if (!(burn_in >= 0) || !(burn_in < t_end))
    throw std::invalid_argument("burn_in must lie in [0, t_end)");
  if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
  if (sample_every < 1) throw std::invalid_argument("sample_every must be at least 1");

  const double fastest = std::max(params.kappa, params.eta());
  const double slowest = std::min(params.kappa, params.eta());
  if (m_update == MUpdate::Euler && dt * fastest > 0.1 * (1 + 1e-12))
    throw std::invalid_argument("euler update requires dt * max(kappa, eta) <= 0.1");
  if (stationary && burn_in < 5.0 / slowest * (1 - 1e-12))
    throw std::invalid_argument("burn_in must be at least 5 / min(kappa, eta) for stationary statistics");
  if (step_count_total() > sample_budget)
    throw BudgetError("n_traj * t_end / dt = " + format_number(step_count_total()) +
                      " exceeds sample_budget = " + format_number(sample_budget));
}

double adiabatic_factor(const LaserParamsd& params) {
  return 2.0 * params.g / (params.kappa * std::sqrt(params.atoms()));
}

namespace {

Complex gaussian_pair(double sd, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return {sd * re, sd * im};
}

double exact_ou_sd(const LaserParamsd& params, double dt) {
  const double n = params.atoms();
  const double eta = params.eta();
  // Total variance (r_a N^2 / eta)(1 - exp(-eta dt)), split over two quadratures.
  return std::sqrt(params.pump_rate * n * n / eta * -std::expm1(-eta * dt) / 2.0);
}

double euler_sd(const LaserParamsd& params, double dt) {
  const double n = params.atoms();
  return std::sqrt(params.pump_rate * n * n * dt / 2.0);
}

}  // namespace

Complex noise_sample(const LaserParamsd& params, double dt, Rng& rng) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  return gaussian_pair(euler_sd(params, dt), rng);
}

Complex step_m(const FieldState& state, const LaserParamsd& params, const SimConfig& config,
               Rng& rng) {
  const double eta = params.eta();
  if (config.m_update == MUpdate::Euler)
    return state.m - 0.5 * eta * config.dt * state.m + noise_sample(params, config.dt, rng);
  return state.m * std::exp(-0.5 * eta * config.dt) +
         gaussian_pair(exact_ou_sd(params, config.dt), rng);
}

Complex step_b(const FieldState& state, const LaserParamsd& params, const SimConfig& config) {
  const double half_kappa = 0.5 * params.kappa;
  const double decay = std::exp(-half_kappa * config.dt);
  const double drive = params.coupling_lambda() * -std::expm1(-half_kappa * config.dt) / half_kappa;
  return state.b * decay + drive * state.m;
}

Stepper::Stepper(const LaserParamsd& params, const SimConfig& config)
    : mode_(config.mode), dt_(config.dt), slave_(adiabatic_factor(params)) {
  const double eta = params.eta();
  if (config.m_update == MUpdate::Euler) {
    m_decay_ = 1.0 - 0.5 * eta * dt_;
    m_noise_sd_ = euler_sd(params, dt_);
  } else {
    m_decay_ = std::exp(-0.5 * eta * dt_);
    m_noise_sd_ = exact_ou_sd(params, dt_);
  }
  const double half_kappa = 0.5 * params.kappa;
  b_decay_ = std::exp(-half_kappa * dt_);
  b_drive_ = params.coupling_lambda() * -std::expm1(-half_kappa * dt_) / half_kappa;
}

void Stepper::advance(FieldState& state, Rng& rng) {
  const double re = normal_(rng);
  const double im = normal_(rng);
  const Complex m_next = m_decay_ * state.m + Complex(m_noise_sd_ * re, m_noise_sd_ * im);
  if (mode_ == FieldMode::Full)
    state.b = b_decay_ * state.b + b_drive_ * state.m;
  else
    state.b = slave_ * m_next;
  state.m = m_next;
  state.t += dt_;
}

Trajectory simulate_trajectory(const LaserParamsd& params, const SimConfig& config,
                               std::int64_t index) {
  const std::int64_t steps = config.steps();
  const std::int64_t n_samples = steps / config.sample_every + 1;

  Trajectory traj;
  traj.index = index;
  traj.t0 = 0;
  traj.sample_interval = config.sample_interval();
  traj.m.resize(n_samples);
  traj.b.resize(n_samples);

  Stepper stepper(params, config);
  Rng rng(trajectory_seed(config, index));
  FieldState state{config.m0, config.b0, 0.0};
  if (config.mode == FieldMode::Adiabatic) state.b = stepper.slave(state.m);

  traj.m[0] = state.m;
  traj.b[0] = state.b;
  Eigen::Index k = 1;
  for (std::int64_t s = 1; s <= steps; ++s) {
    stepper.advance(state, rng);
    if (s % config.sample_every == 0) {
      traj.m[k] = state.m;
      traj.b[k] = state.b;
      ++k;
    }
  }
  return traj;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Trajectory> simulate_ensemble(const LaserParamsd& params, const SimConfig& config) {
  config.validate(params, false);
  return parallel_indexed(config.n_traj, config.threads,
                          [&](std::int64_t i) { return simulate_trajectory(params, config, i); });
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,re_m,im_m,re_b,im_b\n";
  for (Eigen::Index i = 0; i < traj.size(); ++i) {
    os << format_number(traj.time(i)) << ',' << format_number(traj.m[i].real()) << ','
       << format_number(traj.m[i].imag()) << ',' << format_number(traj.b[i].real()) << ','
       << format_number(traj.b[i].imag()) << '\n';
  }
}

}  // namespace twolevel
