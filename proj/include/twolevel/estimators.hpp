#ifndef TWOLEVEL_ESTIMATORS_HPP
#define TWOLEVEL_ESTIMATORS_HPP

// Statistical estimates of field observables from Langevin ensembles.
//
// Every trajectory's stationary window is cut into equal batches; each batch
// contributes one row of sums. Point estimates pool all rows, standard errors
// come from the spread of the batch means. Tables built from stored
// trajectories and from the streaming path are identical, so both routes give
// bit-identical estimates.

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twolevel/langevin.hpp"
#include "twolevel/model.hpp"

namespace twolevel {

struct StationaryWindow {
  double burn_in = 0;
  double batch_length = 0;  // >= 10 correlation times by default
  double max_lag = 0;
  std::int64_t n_lags = 0;  // 0 disables lag products
};

/// burn_in from the config, batches of 10 / min(kappa, eta), no lags.
StationaryWindow default_window(const LaserParamsd& params, const SimConfig& config);

/// Taper rate 0.01 min(kappa, eta) used by estimate_spectrum.
double default_taper_rate(const LaserParamsd& params);

// Columns of BatchTable::real_sum.
enum MomentColumn : Eigen::Index {
  kAbsB2 = 0,
  kAbsB4,
  kAbsM2,
  kPlus,    // b* + b
  kPlus2,
  kMinus,   // i (b* - b)
  kMinus2,
  kMomentColumns
};

struct BatchTable {
  double sample_interval = 0;
  std::int64_t samples_per_batch = 0;
  std::int64_t lag_stride = 1;  // lag spacing in samples
  Eigen::ArrayXcd b_sum;        // per batch
  Eigen::ArrayXXd real_sum;     // batches x kMomentColumns
  Eigen::ArrayXXcd lag_sum;     // batches x n_lags
  Eigen::ArrayXXd lag_count;
  Eigen::Array<bool, Eigen::Dynamic, 1> complete;  // every origin has all lags

  Eigen::Index batches() const { return b_sum.size(); }
  Eigen::Index lags() const { return lag_sum.cols(); }
};

BatchTable reduce_trajectory(const Trajectory& traj, const StationaryWindow& window);
BatchTable concatenate(std::span<const BatchTable> parts);
BatchTable reduce_trajectories(std::span<const Trajectory> trajs, const StationaryWindow& window);

/// Simulates every trajectory and keeps only its batch rows.
BatchTable run_ensemble_batches(const LaserParamsd& params, const SimConfig& config,
                                const StationaryWindow& window);

struct EnsembleMoments {
  Complex mean_b;
  double e_abs_b2 = 0;
  double e_abs_b4 = 0;
  double e_abs_m2 = 0;
  double se_mean_b_re = 0;
  double se_mean_b_im = 0;
  double se_abs_b2 = 0;
  double se_abs_b4 = 0;
  double se_abs_m2 = 0;
  double fourth_moment_ratio = 0;  // E|b|^4 / (E|b|^2)^2
  double se_fourth_moment_ratio = 0;
  double n_eff = 1;  // independent-sample equivalent for |b|^2
  std::int64_t n_batches = 0;
};

EnsembleMoments estimate_moments(const BatchTable& table);
EnsembleMoments estimate_moments(std::span<const Trajectory> trajs, const StationaryWindow& window);

struct Estimate {
  double value;
  double se;
};

/// E|b|^2 (simulated, normally ordered) times (gamma_c/kappa) n_b (analytic
/// antinormal factor).
Estimate estimate_photon_variance(const EnsembleMoments& moments, double n_b,
                                  const LaserParamsd& params);

struct QuadratureEstimate {
  Estimate var_plus;
  Estimate var_minus;
  double sample_var_plus;  // plain c-number variance of b* + b
  double sample_var_minus;
};

QuadratureEstimate estimate_quadrature_variances(const BatchTable& table,
                                                 const LaserParamsd& params, double n_b);
QuadratureEstimate estimate_quadrature_variances(std::span<const Trajectory> trajs,
                                                 const StationaryWindow& window,
                                                 const LaserParamsd& params, double n_b);

struct CorrelationEstimate {
  Eigen::ArrayXd lags;
  Eigen::ArrayXcd values;
  Eigen::ArrayXd se;
  Eigen::ArrayXXcd batch_values;  // complete batches x lags, for transformed errors
};

CorrelationEstimate estimate_correlation(const BatchTable& table);
/// max_lag must not exceed half the stationary window.
CorrelationEstimate estimate_correlation(std::span<const Trajectory> trajs, double burn_in,
                                         double max_lag, std::int64_t n_lags,
                                         double batch_length);

/// Thrown when the correlation has not decayed enough for a transform.
class LagCoverageError : public std::invalid_argument {
 public:
  LagCoverageError(const std::string& what, double required_max_lag)
      : std::invalid_argument(what), required_max_lag(required_max_lag) {}
  double required_max_lag;
};

struct SpectrumEstimate {
  Eigen::ArrayXd omega_offsets;
  Eigen::ArrayXd values;
  Eigen::ArrayXd se;
  double resolution = 0;
  double taper_rate = 0;
  std::string window_id;
};

/// (1/pi) Re int_0^T exp(i w tau) exp(-taper tau) g(tau) dtau with g linearly
/// interpolated between lags and the oscillatory factor integrated exactly.
Eigen::ArrayXd cosine_transform(const Eigen::ArrayXd& lags, const Eigen::ArrayXcd& values,
                                const Eigen::ArrayXd& omega_offsets, double taper_rate);

SpectrumEstimate estimate_spectrum(const CorrelationEstimate& correlation,
                                   const Eigen::ArrayXd& omega_offsets, double taper_rate);

/// Trapezoidal integral of a sampled curve.
double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);

void write_correlation_csv(std::ostream& os, const CorrelationEstimate& c);
void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& s);

// Comparison against closed forms.

struct Comparison {
  std::string observable;
  std::string tag;  // equation or estimator id
  double simulated = 0;
  double se = 0;
  double analytic = 0;
  double tolerance = 0;
  std::string provenance;  // "statistical", "statistical+approximation", ...
  bool pass = false;
  bool informational = false;  // reported, excluded from the overall verdict
};

struct SimulationSummary {
  EnsembleMoments moments;
  Estimate photon_variance;
  QuadratureEstimate quadratures;
  CorrelationEstimate correlation;
  SpectrumEstimate spectrum;
  bool has_correlation = false;
  std::vector<Comparison> comparisons;
};

struct AnalysisPlan {
  StationaryWindow window;
  Eigen::ArrayXd omega_offsets;  // empty skips the spectrum
  double taper_rate = 0;
};

/// Runs the ensemble, every estimator, and the per-observable comparisons.
SimulationSummary analyze_simulation(const LaserParamsd& params, const SimConfig& config,
                                     const AnalysisPlan& plan);
/// Same comparisons over an already reduced table.
SimulationSummary summarize(const LaserParamsd& params, const SimConfig& config,
                            const AnalysisPlan& plan, const BatchTable& table);

bool all_pass(std::span<const Comparison> comparisons);

}  // namespace twolevel

#endif  // TWOLEVEL_ESTIMATORS_HPP
