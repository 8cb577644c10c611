#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace formctl {

/// Value of a config entry: number, boolean, string or numeric array.
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

/// Flat "section.key" -> value table read from a TOML-style file.
///
/// Supported subset: [section] headers, key = value lines, # comments,
/// double-quoted strings, true/false, numbers and one-line numeric arrays.
class ConfigTable {
 public:
  static ConfigTable parse(std::string_view text);
  static ConfigTable load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const ConfigValue& at(const std::string& key) const;
  void set(const std::string& key, ConfigValue value) { entries_[key] = std::move(value); }
  const std::map<std::string, ConfigValue>& entries() const noexcept { return entries_; }

  /// Nested JSON object, one member per section.
  nlohmann::json to_json() const;

 private:
  std::map<std::string, ConfigValue> entries_;
};

struct MaterialBlock {
  double elastic_modulus;
  double length;
  double area;
  std::string temperature_label;
  double temperature;
};

struct DesiredBlock {
  double sigma_star;
  double v_star_left;   ///< inward speed of the die at x = 0
  double v_star_right;  ///< inward speed at x = L
};

struct LawBlock {
  std::string variant;  ///< elastic | norton | hybrid
  double sigma_ref, exponent, t_ref;
  // hybrid
  double km_generation, km_annihilation;
  double avrami_rate, avrami_exponent;
  double sigma0_lamellar, sigma0_globular, taylor_alpha, taylor_factor, shear_modulus,
      burgers_vector, drag_stress, rate_exponent, flow_t_ref;
  double initial_globular_fraction, initial_dislocation_density;
  double fd_step;  ///< 0 selects the default step
};

struct SolverBlock {
  std::string scheme;  ///< linear-riemann | nonlinear-split
  int n_cells;
  double cfl;
  double t_end;
  int record_every;
};

struct ControlBlock {
  std::string law_variant;  ///< riemann-gain | coth-closed-form
  std::string left;         ///< feedback | wall
  std::string right;
};

struct LyapunovBlock {
  std::string mu_hat_policy;  ///< paper-default | fixed | search
  double mu_hat;
  double mu_hat_max;  ///< 0 selects the dissipativity bound
  int n_scan;
  int n_grid;
};

struct InitialBlock {
  std::string profile;  ///< uniform | bump | zero
  double sigma0, v0;    ///< uniform absolute fields (nonlinear scheme)
  double bump_sigma, bump_v, bump_center, bump_width;  ///< perturbation hump; center, width in units of L
};

struct OutputBlock {
  std::string dir;
  std::string name;
};

struct SweepBlock {
  std::string path;
  std::vector<double> values;
};

struct RefineBlock {
  std::vector<int> levels;
  double t_end;  ///< 0 selects 0.3 L / sqrt(E)
  double cfl;
  std::string profile;  ///< bump | constant
};

/// Fully resolved run configuration (defaults merged, every key validated).
struct RunConfig {
  MaterialBlock material;
  DesiredBlock desired;
  LawBlock law;
  SolverBlock solver;
  ControlBlock control;
  LyapunovBlock lyapunov;
  InitialBlock initial;
  OutputBlock output;
  SweepBlock sweep;
  RefineBlock refine;

  ConfigTable resolved;  ///< defaults plus file values, echoed into outputs

  /// Merges `table` over the defaults. Unknown keys, wrong types and failed
  /// preconditions raise ConfigError naming the key path.
  static RunConfig from_table(const ConfigTable& table);
  static RunConfig load(const std::filesystem::path& path);

  /// Copy with one scalar entry replaced (used by sweeps).
  RunConfig with_override(const std::string& key, double value) const;
};

/// Table holding every known key with its default value.
const ConfigTable& default_config();

}  // namespace formctl
