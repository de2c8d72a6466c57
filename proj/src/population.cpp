#include "twolevel/population.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include "twolevel/io.hpp"

namespace twolevel {

std::vector<AtomCounts> jump_evolve(const LaserParamsd& p, const AtomCounts& initial,
                                    double t_end, std::uint64_t seed, std::int64_t max_events) {
  p.validate();
  if (initial.n_a < 0 || initial.n_b < 0 || initial.n_a + initial.n_b != p.n_atoms)
    throw std::invalid_argument("initial atom counts must be non-negative and sum to N");
  if (!(t_end > 0)) throw std::invalid_argument("t_end must be positive");

  const double up = p.pump_rate;
  const double down = p.gamma_c();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<AtomCounts> path;
  path.reserve(static_cast<std::size_t>(std::min<std::int64_t>(max_events, 1 << 20)) + 2);
  path.push_back(initial);

  AtomCounts s = initial;
  const double t_stop = initial.t + t_end;
  for (std::int64_t events = 0; events < max_events; ++events) {
    const double rate_up = up * static_cast<double>(s.n_b);
    const double rate_down = down * static_cast<double>(s.n_a);
    const double total = rate_up + rate_down;
    if (total <= 0) break;  // absorbing

    // 1 - u lies in (0, 1], keeps log finite.
    const double wait = -std::log(1.0 - unit(rng)) / total;
    if (s.t + wait > t_stop) break;
    s.t += wait;
    if (unit(rng) * total < rate_up) {
      ++s.n_a;
      --s.n_b;
    } else {
      --s.n_a;
      ++s.n_b;
    }
    path.push_back(s);
    if (events + 1 == max_events) return path;
  }
  path.push_back({t_stop, s.n_a, s.n_b});
  return path;
}

TimeAverage time_average_upper(std::span<const AtomCounts> path, double burn_in,
                               double batch_length) {
  if (path.size() < 2) throw std::invalid_argument("population path needs at least two entries");
  if (!(batch_length > 0)) throw std::invalid_argument("batch length must be positive");
  const double t0 = path.front().t + burn_in;
  const double t1 = path.back().t;
  const auto n_batches = static_cast<std::size_t>(std::floor((t1 - t0) / batch_length));
  if (!(t1 > t0) || n_batches == 0)
    throw std::invalid_argument("stationary window shorter than one batch");

  std::vector<double> integral(n_batches, 0.0);
  const double t_last = t0 + static_cast<double>(n_batches) * batch_length;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    double a = std::max(path[i].t, t0);
    const double b = std::min(path[i + 1].t, t_last);
    if (!(a < b)) continue;
    const double level = static_cast<double>(path[i].n_a);
    auto k = std::min(static_cast<std::size_t>((a - t0) / batch_length), n_batches - 1);
    while (k + 1 < n_batches && t0 + static_cast<double>(k + 1) * batch_length <= a) ++k;
    for (; a < b; ++k) {
      const double edge =
          k + 1 < n_batches ? std::min(b, t0 + static_cast<double>(k + 1) * batch_length) : b;
      integral[k] += level * (edge - a);
      a = edge;
    }
  }

  double sum = 0, sum2 = 0;
  for (double v : integral) {
    const double m = v / batch_length;
    sum += m;
    sum2 += m * m;
  }
  const double nb = static_cast<double>(n_batches);
  const double mean = sum / nb;
  double se = 0;
  if (n_batches > 1) {
    const double var = std::max(0.0, (sum2 - nb * mean * mean) / (nb - 1));
    se = std::sqrt(var / nb);
  }
  return {mean, se, n_batches};
}

void write_population_csv(std::ostream& os, std::span<const PopulationState<double>> rows) {
  os << "t,n_a,n_b\n";
  for (const auto& r : rows)
    os << format_number(r.t) << ',' << format_number(r.n_a) << ',' << format_number(r.n_b) << '\n';
}

void write_population_csv(std::ostream& os, std::span<const AtomCounts> rows) {
  os << "t,n_a,n_b\n";
  for (const auto& r : rows) os << format_number(r.t) << ',' << r.n_a << ',' << r.n_b << '\n';
}

}  // namespace twolevel
