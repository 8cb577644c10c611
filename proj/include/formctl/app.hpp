#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "formctl/config.hpp"
#include "formctl/control.hpp"
#include "formctl/lyapunov.hpp"
#include "formctl/solver.hpp"

namespace formctl {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitCertification = 3,
  kExitRuntime = 4,
};

/// Everything derived from a RunConfig before time stepping.
struct Scenario {
  RunConfig config;
  MaterialParams params;
  DesiredState desired;
  ViscoplasticLaw law;
  InternalState initial_internal;
  double s_star;
  HyperbolicSystem sys;
  GainPair gains;
  DecayCertificate certificate;
  std::string mu_hat_source;  ///< policy that produced certificate.mu_hat
  bool mu_hat_fallback = false;

  FeedbackController controller(LawVariant variant) const;
  FeedbackController controller() const;
  LawVariant law_variant() const;
  Scheme scheme() const;
  SolverConfig solver_config() const;
};

Scenario build_scenario(const RunConfig& config);

nlohmann::json to_json(const DecayCertificate& cert);
nlohmann::json to_json(const TimeRecord& rec);

struct RunResult {
  TimeSeries series;
  nlohmann::json summary;
};

/// One simulation as configured; summary is the JSON written next to the CSV.
RunResult simulate(const Scenario& scenario);

/// Last recorded time with sigma_left below 99% of sigma* (0 if never below).
std::optional<double> settling_time_99(const TimeSeries& series, double sigma_star);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// Subcommands. Output goes to config.output.dir; `log` may be null (quiet).
/// Each returns an ExitCode.
int cmd_certify(const RunConfig& config, std::ostream* log);
int cmd_simulate(const RunConfig& config, std::ostream* log);
int cmd_sweep(const RunConfig& config, std::ostream* log);
int cmd_refine(const RunConfig& config, std::ostream* log);

}  // namespace formctl
