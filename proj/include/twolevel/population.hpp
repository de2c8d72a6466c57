#ifndef TWOLEVEL_POPULATION_HPP
#define TWOLEVEL_POPULATION_HPP

// Atomic level populations under pumping (r_a, lower -> upper) and stimulated
// emission (gamma_c, upper -> lower): the mean-value ODE in closed form, and a
// continuous-time jump process over exchangeable atoms.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "twolevel/model.hpp"

namespace twolevel {

template <typename Scalar = double>
struct PopulationState {
  Scalar t;
  Scalar n_a;
  Scalar n_b;
};

/// Relaxation-based burn-in for stationary averages, 10 / eta.
template <typename Scalar>
Scalar default_population_burn_in(const LaserParams<Scalar>& p) {
  return Scalar(10) / p.eta();
}

template <typename Scalar>
void validate_population(const LaserParams<Scalar>& p, const PopulationState<Scalar>& s) {
  const Scalar n = p.atoms();
  if (!(s.n_a >= 0 && s.n_a <= n))
    throw std::invalid_argument("initial upper-level population outside [0, N]");
  if (std::abs(s.n_a + s.n_b - n) > Scalar(1e-9) * n)
    throw std::invalid_argument("initial populations must sum to N");
}

/// Exact solution n_a(t) = n_a(inf) + (n_a(0) - n_a(inf)) exp(-eta t), sampled
/// uniformly with spacing no larger than dt_max. n_b is N - n_a at every sample.
template <typename Scalar>
std::vector<PopulationState<Scalar>> ode_evolve(const LaserParams<Scalar>& p,
                                                const PopulationState<Scalar>& initial,
                                                Scalar t_end, Scalar dt_max) {
  p.validate();
  validate_population(p, initial);
  if (!(t_end > 0)) throw std::invalid_argument("t_end must be positive");
  if (!(dt_max > 0)) throw std::invalid_argument("dt_max must be positive");

  const Scalar n = p.atoms();
  const Scalar eta = p.eta();
  const Scalar fixed = p.pump_rate * n / eta;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt_max));
  const Scalar h = t_end / static_cast<Scalar>(steps);

  std::vector<PopulationState<Scalar>> out;
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const Scalar dt = h * static_cast<Scalar>(k);
    const Scalar n_a = fixed + (initial.n_a - fixed) * std::exp(-eta * dt);
    out.push_back({initial.t + dt, n_a, n - n_a});
  }
  return out;
}

/// Integer atom counts of the jump process after an event.
struct AtomCounts {
  double t;
  std::int64_t n_a;
  std::int64_t n_b;
};

/// Gillespie simulation with upward rate r_a n_b and downward rate gamma_c n_a.
/// The returned path starts with `initial` and holds one entry per event; when
/// the run stops at t_end a closing entry at t_end is appended. Equal seeds
/// replay identically.
std::vector<AtomCounts> jump_evolve(const LaserParamsd& p, const AtomCounts& initial,
                                    double t_end, std::uint64_t seed,
                                    std::int64_t max_events = 100'000'000);

struct TimeAverage {
  double mean;
  double se;  // batch-means standard error
  std::size_t n_batches;
};

/// Time average of n_a over [burn_in, end of path] for a piecewise-constant path.
TimeAverage time_average_upper(std::span<const AtomCounts> path, double burn_in,
                               double batch_length);

void write_population_csv(std::ostream& os, std::span<const PopulationState<double>> rows);
void write_population_csv(std::ostream& os, std::span<const AtomCounts> rows);

}  // namespace twolevel

#endif  // TWOLEVEL_POPULATION_HPP
