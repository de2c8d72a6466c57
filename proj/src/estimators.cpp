#include "twolevel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "twolevel/analytics.hpp"
#include "twolevel/io.hpp"

namespace twolevel {

namespace {

constexpr double kPi = std::numbers::pi;

std::int64_t ceil_samples(double duration, double interval) {
  return static_cast<std::int64_t>(std::ceil(duration / interval - 1e-9));
}

struct MeanSe {
  double mean;
  double se;
};

// Mean and standard error of a column of batch means.
MeanSe batch_stats(const Eigen::ArrayXd& batch_means) {
  const auto n = static_cast<double>(batch_means.size());
  const double mean = batch_means.mean();
  if (batch_means.size() < 2) return {mean, 0.0};
  const double var = (batch_means - mean).square().sum() / (n - 1);
  return {mean, std::sqrt(var / n)};
}

// Plain left-to-right sum, so real and complex columns built from the same
// products reduce identically.
template <typename Column>
auto ordered_sum(const Column& col) {
  typename Column::Scalar acc{};
  for (Eigen::Index i = 0; i < col.size(); ++i) acc += col[i];
  return acc;
}

double covariance(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  return ((x - x.mean()) * (y - y.mean())).sum() / (n - 1);
}

}  // namespace

StationaryWindow default_window(const LaserParamsd& params, const SimConfig& config) {
  StationaryWindow w;
  w.burn_in = config.burn_in;
  w.batch_length = 10.0 / std::min(params.kappa, params.eta());
  return w;
}

double default_taper_rate(const LaserParamsd& params) {
  return 0.01 * std::min(params.kappa, params.eta());
}

BatchTable reduce_trajectory(const Trajectory& traj, const StationaryWindow& window) {
  const double dt = traj.sample_interval;
  if (!(dt > 0)) throw std::invalid_argument("trajectory has no sample interval");
  if (!(window.burn_in >= 0)) throw std::invalid_argument("burn_in must be non-negative");
  if (!(window.batch_length > 0)) throw std::invalid_argument("batch_length must be positive");

  const std::int64_t n = traj.size();
  const std::int64_t i0 = ceil_samples(window.burn_in, dt);
  const std::int64_t spb = std::max<std::int64_t>(1, ceil_samples(window.batch_length, dt));
  if (n <= i0) throw std::invalid_argument("empty stationary window: burn_in covers the trajectory");
  const std::int64_t nb = (n - i0) / spb;
  if (nb == 0) throw std::invalid_argument("stationary window shorter than one batch");

  std::int64_t n_lags = std::max<std::int64_t>(0, window.n_lags);
  std::int64_t stride = 1;
  if (n_lags > 1) {
    if (!(window.max_lag > 0)) throw std::invalid_argument("max_lag must be positive");
    stride = std::max<std::int64_t>(
        1, std::llround(window.max_lag / (static_cast<double>(n_lags - 1) * dt)));
    if ((n_lags - 1) * stride > (n - i0) / 2)
      throw std::invalid_argument("max_lag exceeds half of the stationary window");
  }
  const std::int64_t max_lag_samples = n_lags > 0 ? (n_lags - 1) * stride : 0;

  BatchTable t;
  t.sample_interval = dt;
  t.samples_per_batch = spb;
  t.lag_stride = stride;
  t.b_sum = Eigen::ArrayXcd::Zero(nb);
  t.real_sum = Eigen::ArrayXXd::Zero(nb, kMomentColumns);
  t.lag_sum = Eigen::ArrayXXcd::Zero(nb, n_lags);
  t.lag_count = Eigen::ArrayXXd::Zero(nb, n_lags);
  t.complete.resize(nb);

  for (std::int64_t j = 0; j < nb; ++j) {
    const std::int64_t begin = i0 + j * spb;
    const std::int64_t end = begin + spb;
    Complex b_acc{};
    double acc[kMomentColumns] = {};
    for (std::int64_t i = begin; i < end; ++i) {
      const Complex b = traj.b[i];
      const Complex p0 = std::conj(b) * b;
      const double a2 = p0.real();
      const double xp = 2.0 * b.real();
      const double xm = 2.0 * b.imag();
      b_acc += b;
      acc[kAbsB2] += a2;
      acc[kAbsB4] += a2 * a2;
      acc[kAbsM2] += std::norm(traj.m[i]);
      acc[kPlus] += xp;
      acc[kPlus2] += xp * xp;
      acc[kMinus] += xm;
      acc[kMinus2] += xm * xm;
      if (n_lags > 0) {
        t.lag_sum(j, 0) += p0;
        t.lag_count(j, 0) += 1;
        const Complex bc = std::conj(b);
        for (std::int64_t k = 1; k < n_lags; ++k) {
          const std::int64_t idx = i + k * stride;
          if (idx >= n) break;
          t.lag_sum(j, k) += bc * traj.b[idx];
          t.lag_count(j, k) += 1;
        }
      }
    }
    t.b_sum[j] = b_acc;
    for (Eigen::Index c = 0; c < kMomentColumns; ++c) t.real_sum(j, c) = acc[c];
    t.complete[j] = (end - 1 + max_lag_samples) < n;
  }
  return t;
}

BatchTable concatenate(std::span<const BatchTable> parts) {
  if (parts.empty()) throw std::invalid_argument("no batch tables to combine");
  const BatchTable& first = parts.front();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.samples_per_batch != first.samples_per_batch || p.lags() != first.lags() ||
        p.lag_stride != first.lag_stride || p.sample_interval != first.sample_interval)
      throw std::invalid_argument("batch tables have inconsistent layouts");
    rows += p.batches();
  }
  BatchTable t;
  t.sample_interval = first.sample_interval;
  t.samples_per_batch = first.samples_per_batch;
  t.lag_stride = first.lag_stride;
  t.b_sum.resize(rows);
  t.real_sum.resize(rows, kMomentColumns);
  t.lag_sum.resize(rows, first.lags());
  t.lag_count.resize(rows, first.lags());
  t.complete.resize(rows);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    const Eigen::Index nb = p.batches();
    t.b_sum.segment(r, nb) = p.b_sum;
    t.real_sum.middleRows(r, nb) = p.real_sum;
    t.lag_sum.middleRows(r, nb) = p.lag_sum;
    t.lag_count.middleRows(r, nb) = p.lag_count;
    t.complete.segment(r, nb) = p.complete;
    r += nb;
  }
  return t;
}

BatchTable reduce_trajectories(std::span<const Trajectory> trajs, const StationaryWindow& window) {
  if (trajs.empty()) throw std::invalid_argument("need at least one trajectory");
  std::vector<BatchTable> parts;
  parts.reserve(trajs.size());
  for (const auto& tr : trajs) parts.push_back(reduce_trajectory(tr, window));
  return concatenate(parts);
}

BatchTable run_ensemble_batches(const LaserParamsd& params, const SimConfig& config,
                                const StationaryWindow& window) {
  config.validate(params, true);
  auto parts = parallel_indexed(config.n_traj, config.threads, [&](std::int64_t i) {
    return reduce_trajectory(simulate_trajectory(params, config, i), window);
  });
  return concatenate(parts);
}

EnsembleMoments estimate_moments(const BatchTable& table) {
  const Eigen::Index nb = table.batches();
  if (nb == 0) throw std::invalid_argument("empty stationary window");
  const double spb = static_cast<double>(table.samples_per_batch);
  const double total = spb * static_cast<double>(nb);

  EnsembleMoments m;
  m.n_batches = nb;
  m.mean_b = ordered_sum(table.b_sum) / total;
  m.e_abs_b2 = ordered_sum(table.real_sum.col(kAbsB2)) / total;
  m.e_abs_b4 = ordered_sum(table.real_sum.col(kAbsB4)) / total;
  m.e_abs_m2 = ordered_sum(table.real_sum.col(kAbsM2)) / total;

  const Eigen::ArrayXd b2 = table.real_sum.col(kAbsB2) / spb;
  const Eigen::ArrayXd b4 = table.real_sum.col(kAbsB4) / spb;
  m.se_mean_b_re = batch_stats(table.b_sum.real() / spb).se;
  m.se_mean_b_im = batch_stats(table.b_sum.imag() / spb).se;
  m.se_abs_b2 = batch_stats(b2).se;
  m.se_abs_b4 = batch_stats(b4).se;
  m.se_abs_m2 = batch_stats(table.real_sum.col(kAbsM2) / spb).se;

  if (m.e_abs_b2 > 0) {
    const double e2 = m.e_abs_b2, e4 = m.e_abs_b4;
    m.fourth_moment_ratio = e4 / (e2 * e2);
    // Delta method on r = E4 / E2^2 with batch-mean covariances.
    const double d4 = 1.0 / (e2 * e2);
    const double d2 = -2.0 * e4 / (e2 * e2 * e2);
    const double nbd = static_cast<double>(nb);
    const double var = (d4 * d4 * covariance(b4, b4) + d2 * d2 * covariance(b2, b2) +
                        2.0 * d4 * d2 * covariance(b4, b2)) / nbd;
    m.se_fourth_moment_ratio = std::sqrt(std::max(0.0, var));
  } else {
    m.fourth_moment_ratio = std::nan("");
    m.se_fourth_moment_ratio = std::nan("");
  }

  const double iid_var = m.e_abs_b4 - m.e_abs_b2 * m.e_abs_b2;
  if (m.se_abs_b2 > 0)
    m.n_eff = std::clamp(iid_var / (m.se_abs_b2 * m.se_abs_b2), 1.0, total);
  else
    m.n_eff = total;
  return m;
}

EnsembleMoments estimate_moments(std::span<const Trajectory> trajs, const StationaryWindow& window) {
  StationaryWindow w = window;
  w.n_lags = 0;
  return estimate_moments(reduce_trajectories(trajs, w));
}

Estimate estimate_photon_variance(const EnsembleMoments& moments, double n_b,
                                  const LaserParamsd& params) {
  if (n_b < 0) throw std::invalid_argument("n_b must be non-negative");
  if (moments.e_abs_b2 < 0 || moments.se_abs_b2 < 0)
    throw std::invalid_argument("moments must be non-negative");
  const double antinormal = params.gamma_c() / params.kappa * n_b;
  return {moments.e_abs_b2 * antinormal, moments.se_abs_b2 * antinormal};
}

QuadratureEstimate estimate_quadrature_variances(const BatchTable& table,
                                                 const LaserParamsd& params, double n_b) {
  if (n_b < 0) throw std::invalid_argument("n_b must be non-negative");
  const Eigen::Index nb = table.batches();
  if (nb == 0) throw std::invalid_argument("empty stationary window");
  const double spb = static_cast<double>(table.samples_per_batch);
  const double total = spb * static_cast<double>(nb);
  const double antinormal = params.gamma_c() / params.kappa * n_b;

  auto quadrature = [&](Eigen::Index first, Eigen::Index second, double& sample_var) {
    const double mean = table.real_sum.col(first).sum() / total;
    const double mean2 = table.real_sum.col(second).sum() / total;
    sample_var = mean2 - mean * mean;
    const double se = batch_stats(table.real_sum.col(second) / spb).se;
    // Half the c-number variance is the normally-ordered <b+ b>; the antinormal
    // part is added from the populations.
    return Estimate{0.5 * sample_var + antinormal, 0.5 * se};
  };

  QuadratureEstimate q{};
  q.var_plus = quadrature(kPlus, kPlus2, q.sample_var_plus);
  q.var_minus = quadrature(kMinus, kMinus2, q.sample_var_minus);
  return q;
}

QuadratureEstimate estimate_quadrature_variances(std::span<const Trajectory> trajs,
                                                 const StationaryWindow& window,
                                                 const LaserParamsd& params, double n_b) {
  StationaryWindow w = window;
  w.n_lags = 0;
  return estimate_quadrature_variances(reduce_trajectories(trajs, w), params, n_b);
}

CorrelationEstimate estimate_correlation(const BatchTable& table) {
  const Eigen::Index n_lags = table.lags();
  if (n_lags == 0) throw std::invalid_argument("batch table carries no lag products");
  CorrelationEstimate c;
  c.lags.resize(n_lags);
  for (Eigen::Index k = 0; k < n_lags; ++k)
    c.lags[k] = static_cast<double>(k * table.lag_stride) * table.sample_interval;
  c.values.resize(n_lags);
  for (Eigen::Index k = 0; k < n_lags; ++k)
    c.values[k] = ordered_sum(table.lag_sum.col(k)) / ordered_sum(table.lag_count.col(k));

  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < table.batches(); ++j)
    if (table.complete[j]) rows.push_back(j);
  c.batch_values.resize(static_cast<Eigen::Index>(rows.size()), n_lags);
  for (std::size_t r = 0; r < rows.size(); ++r)
    c.batch_values.row(static_cast<Eigen::Index>(r)) =
        table.lag_sum.row(rows[r]) / table.lag_count.row(rows[r]);

  // Standard error of the real part; the correlation of this model is real.
  c.se.resize(n_lags);
  for (Eigen::Index k = 0; k < n_lags; ++k)
    c.se[k] = batch_stats(c.batch_values.col(k).real()).se;
  return c;
}

CorrelationEstimate estimate_correlation(std::span<const Trajectory> trajs, double burn_in,
                                         double max_lag, std::int64_t n_lags,
                                         double batch_length) {
  if (n_lags < 1) throw std::invalid_argument("n_lags must be at least 1");
  StationaryWindow w{burn_in, batch_length, max_lag, n_lags};
  return estimate_correlation(reduce_trajectories(trajs, w));
}

namespace {

// Integrals over one lag interval of length h, in units of h:
//   s0 = int_0^1 exp(i theta u) du,  s1 = int_0^1 u exp(i theta u) du.
void filon_moments(double theta, Complex& s0, Complex& s1) {
  const Complex i_theta(0.0, theta);
  if (std::abs(theta) < 1e-2) {
    Complex term(1.0, 0.0);  // (i theta)^n / n!
    s0 = 0;
    s1 = 0;
    for (int n = 0; n < 8; ++n) {
      s0 += term / static_cast<double>(n + 1);
      s1 += term / static_cast<double>(n + 2);
      term *= i_theta / static_cast<double>(n + 1);
    }
    return;
  }
  const Complex e = std::exp(i_theta);
  s0 = (e - 1.0) / i_theta;
  s1 = e / i_theta + (e - 1.0) / (theta * theta);
}

// Complex weights W so that int exp(i w tau) f(tau) dtau = sum_k W(w, k) f_k
// for piecewise-linear f on the lag grid.
Eigen::ArrayXXcd filon_weights(const Eigen::ArrayXd& lags, const Eigen::ArrayXd& omega) {
  const Eigen::Index n = lags.size();
  Eigen::ArrayXXcd w = Eigen::ArrayXXcd::Zero(omega.size(), n);
  for (Eigen::Index r = 0; r < omega.size(); ++r) {
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const double h = lags[k + 1] - lags[k];
      Complex s0, s1;
      filon_moments(omega[r] * h, s0, s1);
      const Complex phase = std::exp(Complex(0.0, omega[r] * lags[k])) * h;
      w(r, k) += phase * (s0 - s1);
      w(r, k + 1) += phase * s1;
    }
  }
  return w;
}

}  // namespace

Eigen::ArrayXd cosine_transform(const Eigen::ArrayXd& lags, const Eigen::ArrayXcd& values,
                                const Eigen::ArrayXd& omega_offsets, double taper_rate) {
  if (lags.size() != values.size()) throw std::invalid_argument("lags and values differ in size");
  if (lags.size() < 2) throw std::invalid_argument("need at least two lags");
  const Eigen::ArrayXXcd w = filon_weights(lags, omega_offsets);
  const Eigen::VectorXcd f = (values * (-taper_rate * lags).exp().cast<Complex>()).matrix();
  return (w.matrix() * f).real().array() / kPi;
}

SpectrumEstimate estimate_spectrum(const CorrelationEstimate& correlation,
                                   const Eigen::ArrayXd& omega_offsets, double taper_rate) {
  const auto& lags = correlation.lags;
  const Eigen::Index n = lags.size();
  if (n < 2) throw std::invalid_argument("correlation needs at least two lags");
  if (!(taper_rate >= 0)) throw std::invalid_argument("taper rate must be non-negative");

  const double g0 = correlation.values[0].real();
  if (g0 > 0) {
    const Eigen::Index tail = std::max<Eigen::Index>(1, n / 10);
    const double tail_mean = correlation.values.tail(tail).real().mean();
    // Estimated curves may sit within noise of the 1% level.
    double tail_se = 0;
    if (correlation.batch_values.rows() >= 2)
      tail_se = batch_stats(correlation.batch_values.rightCols(tail).real().rowwise().mean()).se;
    if (std::abs(tail_mean) > 0.01 * g0 + 3.0 * tail_se) {
      // Decay time from the 1/e crossing, else extrapolated from the last lag.
      double decay_time = 0;
      for (Eigen::Index k = 1; k < n; ++k) {
        if (correlation.values[k].real() < g0 / std::numbers::e) {
          decay_time = lags[k];
          break;
        }
      }
      const double last = correlation.values[n - 1].real();
      if (decay_time == 0 && last > 0 && last < g0)
        decay_time = lags[n - 1] / std::log(g0 / last);
      const double required = decay_time > 0
                                  ? std::max(1.2 * std::log(100.0) * decay_time, 1.1 * lags[n - 1])
                                  : 2.0 * lags[n - 1];
      throw LagCoverageError("correlation has not decayed below 1% of its lag-0 value by max_lag = " +
                                 format_number(lags[n - 1]) + "; use max_lag >= " +
                                 format_number(required),
                             required);
    }
  }

  SpectrumEstimate s;
  s.omega_offsets = omega_offsets;
  s.taper_rate = taper_rate;
  s.resolution = kPi / lags[n - 1];
  s.window_id = "exp-taper(rate=" + format_number(taper_rate) + ")";

  const Eigen::ArrayXXcd w = filon_weights(lags, omega_offsets);
  const Eigen::ArrayXcd taper = (-taper_rate * lags).exp().cast<Complex>();
  s.values = (w.matrix() * (correlation.values * taper).matrix()).real().array() / kPi;

  s.se = Eigen::ArrayXd::Zero(omega_offsets.size());
  const Eigen::Index nc = correlation.batch_values.rows();
  if (nc >= 2) {
    Eigen::MatrixXcd tapered = correlation.batch_values.matrix();
    tapered.array().rowwise() *= taper.transpose();
    const Eigen::ArrayXXd per_batch =
        (w.matrix() * tapered.transpose()).real().array() / kPi;  // omega x batches
    const Eigen::ArrayXd mean = per_batch.rowwise().mean();
    const Eigen::ArrayXd var =
        (per_batch.colwise() - mean).square().rowwise().sum() / static_cast<double>(nc - 1);
    s.se = (var / static_cast<double>(nc)).sqrt();
  }
  return s;
}

double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double sum = 0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) sum += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  return sum;
}

void write_correlation_csv(std::ostream& os, const CorrelationEstimate& c) {
  os << "lag,re_value,im_value,se\n";
  for (Eigen::Index k = 0; k < c.lags.size(); ++k)
    os << format_number(c.lags[k]) << ',' << format_number(c.values[k].real()) << ','
       << format_number(c.values[k].imag()) << ',' << format_number(c.se[k]) << '\n';
}

void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& s) {
  os << "omega_offset,value,se\n";
  for (Eigen::Index k = 0; k < s.omega_offsets.size(); ++k)
    os << format_number(s.omega_offsets[k]) << ',' << format_number(s.values[k]) << ','
       << format_number(s.se[k]) << '\n';
}

// Comparisons.

namespace {

Comparison compare(std::string observable, std::string tag, double simulated, double se,
                   double analytic, double tolerance, std::string provenance,
                   bool informational = false) {
  Comparison c;
  c.observable = std::move(observable);
  c.tag = std::move(tag);
  c.simulated = simulated;
  c.se = se;
  c.analytic = analytic;
  c.tolerance = tolerance;
  c.provenance = std::move(provenance);
  c.pass = std::abs(simulated - analytic) <= tolerance;
  c.informational = informational;
  return c;
}

// Fraction of the (tapered) target spectrum inside |w| <= half_width.
double target_band_fraction(const LaserParamsd& p, FieldMode mode, double half_width,
                            double taper) {
  const double k = p.kappa, e = p.eta();
  const double a_eta = e / 2 + taper;
  const double a_kappa = k / 2 + taper;
  if (mode == FieldMode::Adiabatic || is_degenerate(p)) {
    if (mode == FieldMode::Adiabatic) return 2.0 / kPi * std::atan(half_width / a_eta);
    // Degenerate full-mode target: first Lorentzian plus its derivative term.
    const double a = a_kappa;
    return 2.0 / kPi * std::atan(half_width / a) +
           (k / 2) * 2.0 * half_width / (a * a + half_width * half_width) / kPi;
  }
  return 2.0 / kPi / (k - e) *
         (k * std::atan(half_width / a_eta) - e * std::atan(half_width / a_kappa));
}

}  // namespace

SimulationSummary summarize(const LaserParamsd& params, const SimConfig& config,
                            const AnalysisPlan& plan, const BatchTable& table) {
  SimulationSummary s;
  s.moments = estimate_moments(table);
  const auto& mo = s.moments;

  const auto pops = steady_populations(params);
  const double ratio = params.gamma_c() / params.kappa;
  const double nbar = mean_photon_number(params);
  const bool full = config.mode == FieldMode::Full;
  const double target_b2 = full ? full_model_photon_number(params) : nbar;
  const double bias = std::abs(target_b2 - nbar);
  const char* stat_prov = full ? "statistical+approximation" : "statistical";

  s.photon_variance = estimate_photon_variance(mo, pops.n_b, params);
  s.quadratures = estimate_quadrature_variances(table, params, pops.n_b);

  auto& out = s.comparisons;
  out.push_back(compare("mean_b_re", "Eq51", mo.mean_b.real(), mo.se_mean_b_re, 0.0,
                        4.0 * mo.se_mean_b_re, "statistical"));
  out.push_back(compare("mean_b_im", "Eq51", mo.mean_b.imag(), mo.se_mean_b_im, 0.0,
                        4.0 * mo.se_mean_b_im, "statistical"));
  out.push_back(compare("e_abs_b2", "Eq54", mo.e_abs_b2, mo.se_abs_b2, nbar,
                        3.0 * mo.se_abs_b2 + bias, stat_prov));
  if (full)
    out.push_back(compare("e_abs_b2_full_model", "full-model-oracle", mo.e_abs_b2, mo.se_abs_b2,
                          target_b2, 3.0 * mo.se_abs_b2, "statistical"));
  const double n_atoms = params.atoms();
  out.push_back(compare("e_abs_m2_per_atom", "Eq40", mo.e_abs_m2 / n_atoms, mo.se_abs_m2 / n_atoms,
                        pops.n_a, 3.0 * mo.se_abs_m2 / n_atoms, "statistical"));
  if (mo.e_abs_b2 > 0)
    out.push_back(compare("fourth_moment_ratio", "Eq58", mo.fourth_moment_ratio,
                          mo.se_fourth_moment_ratio, 2.0, 3.0 * mo.se_fourth_moment_ratio,
                          "statistical"));

  const double dn2_bias = bias * ratio * pops.n_b;
  out.push_back(compare("photon_variance", "Eq60", s.photon_variance.value, s.photon_variance.se,
                        photon_variance(params), 3.0 * s.photon_variance.se + dn2_bias, stat_prov));
  const auto quad = quadrature_variances(params);
  const auto& qv = s.quadratures;
  out.push_back(compare("var_plus", "Eq69", qv.var_plus.value, qv.var_plus.se, quad.var_plus,
                        3.0 * qv.var_plus.se + bias, stat_prov));
  out.push_back(compare("var_minus", "Eq69", qv.var_minus.value, qv.var_minus.se, quad.var_minus,
                        3.0 * qv.var_minus.se + bias, stat_prov));
  const double se_diff = std::hypot(qv.var_plus.se, qv.var_minus.se);
  out.push_back(compare("quadrature_phase_symmetry", "est:phase",
                        qv.var_plus.value - qv.var_minus.value, se_diff, 0.0, 3.0 * se_diff,
                        "statistical"));

  const auto regime = classify_regime(params);
  if (regime.kind == RegimeKind::AtThreshold) {
    // Chaotic light: (dn)^2 = nbar^2 and var = 2 nbar.
    const double e2 = mo.e_abs_b2;
    const double diff_se = std::abs(ratio * pops.n_b - 2.0 * e2) * mo.se_abs_b2;
    out.push_back(compare("chaotic_photon_variance", "Eq64", s.photon_variance.value, diff_se,
                          e2 * e2, 3.0 * diff_se + e2 * bias, stat_prov));
    out.push_back(compare("chaotic_var_plus", "Eq71", qv.var_plus.value, qv.var_plus.se,
                          2.0 * nbar, 3.0 * qv.var_plus.se + bias, stat_prov));
    out.push_back(compare("chaotic_var_minus", "Eq71", qv.var_minus.value, qv.var_minus.se,
                          2.0 * nbar, 3.0 * qv.var_minus.se + bias, stat_prov));
  } else if (regime.kind == RegimeKind::WellAboveThreshold) {
    // Coherent limit: (dn)^2 -> 0 and var -> nbar; the finite gamma_c/r_a
    // residual is part of the tolerance.
    out.push_back(compare("coherent_photon_variance", "Eq63", s.photon_variance.value,
                          s.photon_variance.se, 0.0, 0.02 * nbar * nbar, "limit"));
    const double limit_gap = std::abs(quad.var_plus - nbar);
    out.push_back(compare("coherent_var_plus", "Eq70", qv.var_plus.value, qv.var_plus.se, nbar,
                          3.0 * qv.var_plus.se + bias + limit_gap, "statistical+limit"));
    out.push_back(compare("coherent_var_minus", "Eq70", qv.var_minus.value, qv.var_minus.se, nbar,
                          3.0 * qv.var_minus.se + bias + limit_gap, "statistical+limit"));
  }

  const double eta = params.eta();
  const bool quantitative_full = !full || params.kappa >= 100.0 * eta;
  if (table.lags() > 0 && mo.e_abs_b2 > 0) {
    s.correlation = estimate_correlation(table);
    s.has_correlation = true;
    const auto& c = s.correlation;
    Comparison worst;
    double worst_score = -1;
    bool all_ok = true;
    for (Eigen::Index k = 0; k < c.lags.size(); ++k) {
      const double tau = c.lags[k];
      if (tau > 6.0 / eta * (1 + 1e-12)) break;
      const double target = full ? correlation_g1(params, tau) : nbar * std::exp(-0.5 * eta * tau);
      const double tol = std::max(3.0 * c.se[k], 0.05 * nbar);
      const double score = std::abs(c.values[k].real() - target) / tol;
      all_ok = all_ok && score <= 1.0;
      if (score > worst_score) {
        worst_score = score;
        worst = compare("correlation_worst_lag", full ? "Eq81" : "Eq52+OU", c.values[k].real(),
                        c.se[k], target, tol, "max(3se,5%nbar)", !quantitative_full);
      }
    }
    worst.pass = all_ok;
    out.push_back(worst);

    bool covered = plan.omega_offsets.size() > 0;
    if (covered) {
      try {
        s.spectrum = estimate_spectrum(c, plan.omega_offsets, plan.taper_rate);
      } catch (const LagCoverageError& e) {
        // Reported, not fatal: the moment comparisons above stay valid.
        covered = false;
        out.push_back(compare("spectrum_lag_coverage", "est:coverage", c.lags[c.lags.size() - 1],
                              0.0, e.required_max_lag, 0.0, "max_lag", true));
        out.back().pass = false;
      }
    }
    if (covered) {
      const auto& sp = s.spectrum;
      // Targets carry the same taper as the estimate.
      const double a = eta / 2 + plan.taper_rate;
      Eigen::ArrayXd target(sp.omega_offsets.size());
      for (Eigen::Index k = 0; k < target.size(); ++k) {
        const double w = sp.omega_offsets[k];
        target[k] = full ? tapered_power_spectrum(params, w, plan.taper_rate)
                         : nbar / kPi * a / (w * w + a * a);
      }
      const double peak = target.abs().maxCoeff();
      Comparison sworst;
      double sworst_score = -1;
      bool sok = true;
      for (Eigen::Index k = 0; k < target.size(); ++k) {
        const double tol = std::max(3.0 * sp.se[k], 0.05 * peak);
        const double score = std::abs(sp.values[k] - target[k]) / tol;
        sok = sok && score <= 1.0;
        if (score > sworst_score) {
          sworst_score = score;
          sworst = compare("spectrum_worst_point", full ? "Eq82" : "Eq52+Lorentzian", sp.values[k],
                           sp.se[k], target[k], tol, "max(3se,5%peak)", !quantitative_full);
        }
      }
      sworst.pass = sok;
      out.push_back(sworst);

      const double w_lo = sp.omega_offsets.minCoeff();
      const double w_hi = sp.omega_offsets.maxCoeff();
      if (std::abs(w_lo + w_hi) <= 1e-9 * w_hi && w_hi > 0) {
        const double inside = trapezoid(sp.omega_offsets, sp.values);
        const double frac = target_band_fraction(params, config.mode, w_hi, plan.taper_rate);
        const double completed = inside + (1.0 - frac) * mo.e_abs_b2;
        out.push_back(compare("spectrum_sum_rule", "Eq73", completed, 0.0, mo.e_abs_b2,
                              0.02 * mo.e_abs_b2, "quadrature+tail"));
      }
    }
  }
  return s;
}

SimulationSummary analyze_simulation(const LaserParamsd& params, const SimConfig& config,
                                     const AnalysisPlan& plan) {
  const BatchTable table = run_ensemble_batches(params, config, plan.window);
  return summarize(params, config, plan, table);
}

bool all_pass(std::span<const Comparison> comparisons) {
  return std::all_of(comparisons.begin(), comparisons.end(),
                     [](const Comparison& c) { return c.informational || c.pass; });
}

}  // namespace twolevel
