#ifndef TWOLEVEL_CONFIG_HPP
#define TWOLEVEL_CONFIG_HPP

// Flat key-value configuration:
//
//   # comment
//   kappa = 20
//   pump_rate = 2
//
// Only documented keys are accepted. Numbers are parsed independently of the
// C locale.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twolevel/analytics.hpp"
#include "twolevel/estimators.hpp"
#include "twolevel/langevin.hpp"
#include "twolevel/model.hpp"

namespace twolevel {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyDoc {
  std::string_view key;
  std::string_view group;
  std::string_view description;
};

/// Every accepted key with a one-line description.
std::span<const KeyDoc> documented_keys();
bool is_documented_key(std::string_view key);

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Applies a `key=value` override.
  void apply_override(std::string_view assignment);
  void set(std::string_view key, std::string_view value);

  bool has(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;

  std::optional<double> find_double(std::string_view key) const;
  std::optional<std::int64_t> find_int(std::string_view key) const;
  double get_double_or(std::string_view key, double fallback) const;
  std::int64_t get_int_or(std::string_view key, std::int64_t fallback) const;
  std::string get_string_or(std::string_view key, std::string_view fallback) const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

double parse_double(std::string_view text, std::string_view key);
std::int64_t parse_int(std::string_view text, std::string_view key);

/// Laser parameters; either g or gamma_c must be given together with kappa.
LaserParamsd params_from_config(const KeyValueConfig& cfg);
RegimeTolerances tolerances_from_config(const KeyValueConfig& cfg);
double tol_deg_from_config(const KeyValueConfig& cfg);

/// Simulation settings with defaults scaled by min/max(kappa, eta).
SimConfig sim_config_from_config(const KeyValueConfig& cfg, const LaserParamsd& params);
AnalysisPlan analysis_plan_from_config(const KeyValueConfig& cfg, const LaserParamsd& params,
                                       const SimConfig& sim);
/// Frequency grid from omega_min/omega_max/omega_points.
Eigen::ArrayXd omega_grid_from_config(const KeyValueConfig& cfg, const LaserParamsd& params);
/// Band half-widths from `lambdas` or lambda_max/lambda_points.
std::vector<double> lambda_list_from_config(const KeyValueConfig& cfg);

}  // namespace twolevel

#endif  // TWOLEVEL_CONFIG_HPP
