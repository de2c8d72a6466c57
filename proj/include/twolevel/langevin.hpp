#ifndef TWOLEVEL_LANGEVIN_HPP
#define TWOLEVEL_LANGEVIN_HPP

// c-number Langevin simulation of the collective polarization m and cavity
// field b:
//
//   dm/dt = -(eta/2) m + F(t),      <F*(t) F(t')> = r_a N^2 delta(t - t')
//   db/dt = -(kappa/2) b + (g/sqrt(N)) m
//
// The single complex noise reproduces the normally-ordered correlation, so all
// simulated field moments are normally-ordered images. In adiabatic mode the
// field is slaved to the polarization, b = 2g/(kappa sqrt(N)) m.

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include "twolevel/model.hpp"

namespace twolevel {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

enum class FieldMode { Full, Adiabatic };
enum class MUpdate { Euler, ExactOu };

std::string_view to_string(FieldMode mode);
std::string_view to_string(MUpdate update);
FieldMode parse_field_mode(std::string_view text);
MUpdate parse_m_update(std::string_view text);

/// Raised when a run would exceed the configured sample budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double dt = 0.01;
  double t_end = 100.0;
  double burn_in = 10.0;
  std::int64_t n_traj = 100;
  std::uint64_t seed = 1;
  FieldMode mode = FieldMode::Adiabatic;
  MUpdate m_update = MUpdate::ExactOu;
  std::int64_t sample_every = 1;  // record every k-th integration step
  double sample_budget = 5e9;     // upper bound on n_traj * t_end / dt
  Complex m0{};
  Complex b0{};
  unsigned threads = 0;  // 0 picks hardware concurrency

  double sample_interval() const { return dt * static_cast<double>(sample_every); }
  std::int64_t steps() const;
  double step_count_total() const;

  /// Throws std::invalid_argument on inconsistent settings and BudgetError
  /// when the step budget is exceeded. `stationary` enables the burn-in check.
  void validate(const LaserParamsd& params, bool stationary = true) const;
};

struct FieldState {
  Complex m;
  Complex b;
  double t;
};

/// Adiabatic slaving factor 2g / (kappa sqrt(N)).
double adiabatic_factor(const LaserParamsd& params);

/// Complex Gaussian increment with E[f* f] = r_a N^2 dt and E[f f] = 0.
Complex noise_sample(const LaserParamsd& params, double dt, Rng& rng);

/// Polarization after one step of config.dt.
Complex step_m(const FieldState& state, const LaserParamsd& params, const SimConfig& config,
               Rng& rng);

/// Exponential-Euler field update holding m at its step-start value.
Complex step_b(const FieldState& state, const LaserParamsd& params, const SimConfig& config);

/// Step coefficients computed once per run.
class Stepper {
 public:
  Stepper(const LaserParamsd& params, const SimConfig& config);

  void advance(FieldState& state, Rng& rng);
  Complex slave(Complex m) const { return slave_ * m; }

 private:
  FieldMode mode_;
  double dt_;
  double m_decay_;     // multiplier of m per step
  double m_noise_sd_;  // per-quadrature standard deviation
  double b_decay_;
  double b_drive_;
  double slave_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct Trajectory {
  std::int64_t index = 0;
  double t0 = 0;
  double sample_interval = 0;
  Eigen::ArrayXcd m;
  Eigen::ArrayXcd b;

  Eigen::Index size() const { return m.size(); }
  double time(Eigen::Index i) const { return t0 + sample_interval * static_cast<double>(i); }
};

/// Deterministic per-trajectory seed.
inline std::uint64_t trajectory_seed(const SimConfig& config, std::int64_t index) {
  return config.seed + static_cast<std::uint64_t>(index);
}

Trajectory simulate_trajectory(const LaserParamsd& params, const SimConfig& config,
                               std::int64_t index);

unsigned resolve_threads(unsigned requested);

/// Runs fn(index) for index in [0, count) on a small worker pool and returns
/// the results ordered by index, so reductions over them are independent of
/// scheduling.
template <typename Fn>
auto parallel_indexed(std::int64_t count, unsigned threads, Fn&& fn) {
  using Result = decltype(fn(std::int64_t{}));
  std::vector<Result> results(static_cast<std::size_t>(count));
  const unsigned workers =
      std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(count)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = fn(i);
    return results;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::int64_t i = next++; i < count; i = next++)
            results[static_cast<std::size_t>(i)] = fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// All trajectories of the ensemble, held in memory.
std::vector<Trajectory> simulate_ensemble(const LaserParamsd& params, const SimConfig& config);

/// Rows (t, Re m, Im m, Re b, Im b).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace twolevel

#endif  // TWOLEVEL_LANGEVIN_HPP
