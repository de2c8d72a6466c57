#ifndef TWOLEVEL_ANALYTICS_HPP
#define TWOLEVEL_ANALYTICS_HPP

// Closed-form steady-state and spectral results for the two-level laser.
//
// Everything here is a pure function of LaserParams<Scalar>. Grid overloads
// accept any Eigen array expression and return a plain array.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "twolevel/model.hpp"

namespace twolevel {

/// Relative |kappa - eta| below which the closed degenerate limits are used.
inline constexpr double kDefaultTolDeg = 1e-9;

template <typename Scalar>
struct Populations {
  Scalar n_a;
  Scalar n_b;
};

template <typename Scalar>
struct QuadratureVariances {
  Scalar var_plus;
  Scalar var_minus;
  Scalar ub_product;  // lower bound of dB+ dB-
};

template <typename Scalar>
struct SteadyStateReport {
  Scalar n_a;
  Scalar n_b;
  Scalar nbar;
  Scalar dn2;
  Scalar var_plus;
  Scalar var_minus;
  Scalar ub_product;
  Scalar uncertainty_product;  // sqrt(var_plus * var_minus)
  bool minimum_uncertainty;    // product saturates the bound
  Regime<Scalar> regime;
};

template <typename Scalar>
Populations<Scalar> steady_populations(const LaserParams<Scalar>& p) {
  p.validate();
  const Scalar n = p.atoms();
  if (p.pump_rate == 0) return {Scalar(0), n};
  const Scalar n_a = p.pump_rate * n / p.eta();
  return {n_a, n - n_a};
}

template <typename Scalar>
Scalar mean_photon_number(const LaserParams<Scalar>& p) {
  return p.gamma_c() / p.kappa * steady_populations(p).n_a;
}

/// Normally-ordered photon-number variance (gamma_c/kappa)^2 <N_a><N_b>.
template <typename Scalar>
Scalar photon_variance(const LaserParams<Scalar>& p) {
  const auto pop = steady_populations(p);
  const Scalar r = p.gamma_c() / p.kappa;
  return r * r * pop.n_a * pop.n_b;
}

template <typename Scalar>
QuadratureVariances<Scalar> quadrature_variances(const LaserParams<Scalar>& p) {
  const auto pop = steady_populations(p);
  const Scalar r = p.gamma_c() / p.kappa;
  const Scalar var = r * (pop.n_a + pop.n_b);
  return {var, var, r * std::abs(pop.n_a - pop.n_b)};
}

template <typename Scalar>
bool is_degenerate(const LaserParams<Scalar>& p, double tol_deg = kDefaultTolDeg) {
  const Scalar k = p.kappa, e = p.eta();
  return std::abs(k - e) <= Scalar(tol_deg) * std::max(k, e);
}

/// Stationary two-time correlation <b+(t) b(t+tau)>.
template <typename Scalar>
Scalar correlation_g1(const LaserParams<Scalar>& p, Scalar tau,
                      double tol_deg = kDefaultTolDeg) {
  if (!(tau >= 0)) throw std::invalid_argument("correlation lag must be non-negative");
  const Scalar nbar = mean_photon_number(p);
  const Scalar k = p.kappa, e = p.eta();
  if (is_degenerate(p, tol_deg)) {
    return nbar * (1 + k * tau / 2) * std::exp(-k * tau / 2);
  }
  return (k * std::exp(-e * tau / 2) - e * std::exp(-k * tau / 2)) * nbar / (k - e);
}

/// Power spectrum of the correlation damped by exp(-taper_rate * tau).
/// taper_rate = 0 gives the physical spectrum; nonzero values describe what a
/// tapered estimator converges to.
template <typename Scalar>
Scalar tapered_power_spectrum(const LaserParams<Scalar>& p, Scalar omega_offset,
                              Scalar taper_rate, double tol_deg = kDefaultTolDeg) {
  if (!(taper_rate >= 0)) throw std::invalid_argument("taper rate must be non-negative");
  const Scalar nbar = mean_photon_number(p);
  const Scalar k = p.kappa, e = p.eta();
  const Scalar w2 = omega_offset * omega_offset;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if (is_degenerate(p, tol_deg)) {
    const Scalar a = k / 2 + taper_rate;
    const Scalar d = w2 + a * a;
    return nbar / pi * (a / d + (k / 2) * (a * a - w2) / (d * d));
  }
  const Scalar a_eta = e / 2 + taper_rate;
  const Scalar a_kappa = k / 2 + taper_rate;
  return nbar / (k - e) / pi *
         (k * a_eta / (w2 + a_eta * a_eta) - e * a_kappa / (w2 + a_kappa * a_kappa));
}

/// Photon number per unit angular frequency at omega - omega0 = omega_offset.
template <typename Scalar>
Scalar power_spectrum(const LaserParams<Scalar>& p, Scalar omega_offset,
                      double tol_deg = kDefaultTolDeg) {
  return tapered_power_spectrum(p, omega_offset, Scalar(0), tol_deg);
}

/// Fraction of the mean photon number within |omega - omega0| <= band_halfwidth.
template <typename Scalar>
Scalar band_fraction_z(const LaserParams<Scalar>& p, Scalar band_halfwidth,
                       double tol_deg = kDefaultTolDeg) {
  if (!(band_halfwidth >= 0)) throw std::invalid_argument("band half-width must be non-negative");
  const Scalar k = p.kappa, e = p.eta();
  const Scalar lam = band_halfwidth;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if (std::isinf(static_cast<double>(lam))) return Scalar(1);
  if (lam == 0) return Scalar(0);
  if (is_degenerate(p, tol_deg)) {
    return (4 * k * lam / (k * k + 4 * lam * lam) + 2 * std::atan(2 * lam / k)) / pi;
  }
  return 2 / pi / (k - e) * (k * std::atan(2 * lam / e) - e * std::atan(2 * lam / k));
}

template <typename Scalar>
Scalar band_photon_number(const LaserParams<Scalar>& p, Scalar band_halfwidth,
                          double tol_deg = kDefaultTolDeg) {
  return mean_photon_number(p) * band_fraction_z(p, band_halfwidth, tol_deg);
}

/// Stationary <|b|^2> of the coupled field/polarization system without the
/// adiabatic elimination of the field: gamma_c r_a N / (eta (eta + kappa)).
template <typename Scalar>
Scalar full_model_photon_number(const LaserParams<Scalar>& p) {
  return mean_photon_number(p) * p.kappa / (p.kappa + p.eta());
}

/// Correlation of the coupled system; equals kappa/(kappa+eta) times correlation_g1.
template <typename Scalar>
Scalar full_model_correlation(const LaserParams<Scalar>& p, Scalar tau,
                              double tol_deg = kDefaultTolDeg) {
  return correlation_g1(p, tau, tol_deg) * p.kappa / (p.kappa + p.eta());
}

template <typename Scalar>
SteadyStateReport<Scalar> steady_state_report(const LaserParams<Scalar>& p,
                                              RegimeTolerances tol = {}) {
  const auto pop = steady_populations(p);
  const auto quad = quadrature_variances(p);
  SteadyStateReport<Scalar> r{};
  r.n_a = pop.n_a;
  r.n_b = pop.n_b;
  r.nbar = mean_photon_number(p);
  r.dn2 = photon_variance(p);
  r.var_plus = quad.var_plus;
  r.var_minus = quad.var_minus;
  r.ub_product = quad.ub_product;
  r.uncertainty_product = std::sqrt(quad.var_plus * quad.var_minus);
  // Saturation only happens in the limit gamma_c/r_a -> 0; at finite ratio the
  // product exceeds the bound by (gamma_c/kappa) 2 n_b.
  r.minimum_uncertainty =
      std::abs(r.uncertainty_product - r.ub_product) <=
      Scalar(1e-12) * std::max(r.uncertainty_product, Scalar(1e-300));
  r.regime = classify_regime(p, tol);
  return r;
}

// Grid overloads.

template <typename Scalar, typename Derived>
Eigen::Array<Scalar, Eigen::Dynamic, 1> correlation_g1(const LaserParams<Scalar>& p,
                                                       const Eigen::ArrayBase<Derived>& taus,
                                                       double tol_deg = kDefaultTolDeg) {
  return taus.derived().unaryExpr([&](Scalar t) { return correlation_g1(p, t, tol_deg); });
}

template <typename Scalar, typename Derived>
Eigen::Array<Scalar, Eigen::Dynamic, 1> power_spectrum(const LaserParams<Scalar>& p,
                                                       const Eigen::ArrayBase<Derived>& offsets,
                                                       double tol_deg = kDefaultTolDeg) {
  return offsets.derived().unaryExpr([&](Scalar w) { return power_spectrum(p, w, tol_deg); });
}

template <typename Scalar, typename Derived>
Eigen::Array<Scalar, Eigen::Dynamic, 1> band_fraction_z(const LaserParams<Scalar>& p,
                                                        const Eigen::ArrayBase<Derived>& halfwidths,
                                                        double tol_deg = kDefaultTolDeg) {
  return halfwidths.derived().unaryExpr([&](Scalar l) { return band_fraction_z(p, l, tol_deg); });
}

template <typename Scalar>
struct SpectrumCurve {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> omega_offsets;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> values;
  LaserParams<Scalar> params_echo;
  Eigen::Index negative_count;  // grid points where the closed form dips below zero
};

template <typename Scalar, typename Derived>
SpectrumCurve<Scalar> spectrum_curve(const LaserParams<Scalar>& p,
                                     const Eigen::ArrayBase<Derived>& offsets,
                                     double tol_deg = kDefaultTolDeg) {
  SpectrumCurve<Scalar> curve;
  curve.omega_offsets = offsets;
  curve.values = power_spectrum(p, curve.omega_offsets, tol_deg);
  curve.params_echo = p;
  curve.negative_count = (curve.values < 0).count();
  return curve;
}

}  // namespace twolevel

#endif  // TWOLEVEL_ANALYTICS_HPP
