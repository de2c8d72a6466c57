#ifndef TWOLEVEL_MODEL_HPP
#define TWOLEVEL_MODEL_HPP

// Laser parameters, derived rate constants and regime classification for a
// two-level laser with pumped atoms in a closed cavity.
//
// All rates share one user-chosen reciprocal-time unit; only ratios enter the
// dimensionless outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace twolevel {

template <typename Scalar = double>
struct LaserParams {
  Scalar g{1};          // atom-field coupling
  Scalar kappa{1};      // cavity damping rate
  Scalar pump_rate{0};  // single-atom pump rate r_a
  std::int64_t n_atoms{1};
  Scalar omega0{0};  // central frequency, offset origin for spectra only

  /// Stimulated emission decay constant 4 g^2 / kappa.
  Scalar gamma_c() const { return Scalar(4) * g * g / kappa; }
  Scalar eta() const { return gamma_c() + pump_rate; }
  /// Positive branch of the collective coupling g / sqrt(N).
  Scalar coupling_lambda() const { return g / std::sqrt(static_cast<Scalar>(n_atoms)); }
  Scalar atoms() const { return static_cast<Scalar>(n_atoms); }

  void validate() const {
    if (!(g > 0) || !std::isfinite(static_cast<double>(g)))
      throw std::invalid_argument("g must be positive and finite");
    if (!(kappa > 0) || !std::isfinite(static_cast<double>(kappa)))
      throw std::invalid_argument("kappa must be positive and finite");
    if (!(pump_rate >= 0) || !std::isfinite(static_cast<double>(pump_rate)))
      throw std::invalid_argument("pump_rate must be non-negative and finite");
    if (n_atoms < 1) throw std::invalid_argument("n_atoms must be at least 1");
  }

  /// Builds parameters from (gamma_c, kappa) instead of (g, kappa).
  static LaserParams from_rates(Scalar gamma_c, Scalar kappa, Scalar pump_rate,
                                std::int64_t n_atoms, Scalar omega0 = 0) {
    if (!(gamma_c > 0)) throw std::invalid_argument("gamma_c must be positive");
    if (!(kappa > 0)) throw std::invalid_argument("kappa must be positive");
    LaserParams p;
    p.g = std::sqrt(gamma_c * kappa / Scalar(4));
    p.kappa = kappa;
    p.pump_rate = pump_rate;
    p.n_atoms = n_atoms;
    p.omega0 = omega0;
    p.validate();
    return p;
  }

  template <typename Other>
  LaserParams<Other> cast() const {
    return {static_cast<Other>(g), static_cast<Other>(kappa), static_cast<Other>(pump_rate),
            n_atoms, static_cast<Other>(omega0)};
  }

  friend bool operator==(const LaserParams&, const LaserParams&) = default;
};

using LaserParamsd = LaserParams<double>;

template <typename Scalar>
struct DerivedConstants {
  Scalar gamma_c;
  Scalar eta;
  Scalar coupling_lambda;
};

template <typename Scalar>
DerivedConstants<Scalar> derive_constants(const LaserParams<Scalar>& params) {
  params.validate();
  return {params.gamma_c(), params.eta(), params.coupling_lambda()};
}

enum class RegimeKind { BelowThreshold, AtThreshold, AboveThreshold, WellAboveThreshold };

inline std::string_view to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::BelowThreshold: return "below_threshold";
    case RegimeKind::AtThreshold: return "at_threshold";
    case RegimeKind::AboveThreshold: return "above_threshold";
    case RegimeKind::WellAboveThreshold: return "well_above_threshold";
  }
  return "unknown";
}

template <typename Scalar>
struct Regime {
  RegimeKind kind;
  Scalar ratio;     // gamma_c / pump_rate, +inf without pumping
  bool degenerate;  // pump_rate == 0
};

struct RegimeTolerances {
  double tol_rel = 1e-6;   // relative band around gamma_c == pump_rate
  double eps_wat = 0.01;   // well above threshold: gamma_c <= eps_wat * pump_rate
};

template <typename Scalar>
Regime<Scalar> classify_regime(const LaserParams<Scalar>& params,
                               RegimeTolerances tol = {}) {
  params.validate();
  if (!(tol.tol_rel > 0 && tol.tol_rel < 1))
    throw std::invalid_argument("tol_rel must lie in (0, 1)");
  if (!(tol.eps_wat > 0 && tol.eps_wat < 1))
    throw std::invalid_argument("eps_wat must lie in (0, 1)");

  const Scalar gc = params.gamma_c();
  const Scalar ra = params.pump_rate;
  if (ra == 0)
    return {RegimeKind::BelowThreshold, std::numeric_limits<Scalar>::infinity(), true};

  const Scalar ratio = gc / ra;
  if (std::abs(gc - ra) <= Scalar(tol.tol_rel) * std::max(gc, ra))
    return {RegimeKind::AtThreshold, ratio, false};
  if (gc < ra) {
    if (gc <= Scalar(tol.eps_wat) * ra) return {RegimeKind::WellAboveThreshold, ratio, false};
    return {RegimeKind::AboveThreshold, ratio, false};
  }
  return {RegimeKind::BelowThreshold, ratio, false};
}

}  // namespace twolevel

#endif  // TWOLEVEL_MODEL_HPP
