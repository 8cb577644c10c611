#include "formctl/app.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "formctl/error.hpp"

namespace formctl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ViscoplasticLaw make_law(const LawBlock& b) {
  if (b.variant == "elastic") return elastic_law();
  if (b.variant == "norton") return norton_law(b.sigma_ref, b.exponent, b.t_ref);
  TaylorCoeffs taylor;
  taylor.sigma0_lamellar = b.sigma0_lamellar;
  taylor.sigma0_globular = b.sigma0_globular;
  taylor.alpha = b.taylor_alpha;
  taylor.taylor_factor = b.taylor_factor;
  taylor.shear_modulus = b.shear_modulus;
  taylor.burgers_vector = b.burgers_vector;
  taylor.drag_stress = b.drag_stress;
  taylor.rate_exponent = b.rate_exponent;
  taylor.t_ref = b.flow_t_ref;
  return hybrid_law({b.km_generation, b.km_annihilation}, {b.avrami_rate, b.avrami_exponent},
                    taylor);
}

BoundaryMode boundary_mode(const std::string& s) {
  return s == "wall" ? BoundaryMode::kWall : BoundaryMode::kFeedback;
}

// Chooses mu_hat per the configured policy and returns the certificate.
DecayCertificate certify(const RunConfig& c, const HyperbolicSystem& sys,
                         const MaterialParams& params, const GainPair& gains,
                         std::string& source, bool& fallback) {
  const LyapunovBlock& ly = c.lyapunov;
  auto search = [&] {
    const double hi = ly.mu_hat_max > 0.0 ? ly.mu_hat_max : default_mu_hat_max(sys, params, gains);
    return search_mu_hat(sys, params, gains, hi, ly.n_scan, ly.n_grid);
  };
  fallback = false;
  if (ly.mu_hat_policy == "fixed") {
    source = "fixed";
    return check_conditions(sys, params, gains, ly.mu_hat, ly.n_grid);
  }
  if (ly.mu_hat_policy == "search") {
    source = "search";
    return search();
  }
  source = "paper-default";
  DecayCertificate cert = check_conditions(sys, params, gains, std::abs(sys.s_star()), ly.n_grid);
  if (!cert.valid()) {
    source = "search";
    fallback = true;
    cert = search();
  }
  return cert;
}

}  // namespace

Scenario build_scenario(const RunConfig& c) {
  const MaterialParams params(c.material.elastic_modulus, c.material.length, c.material.area);
  const DesiredState desired = DesiredState::from_inward_speeds(
      c.desired.sigma_star, c.material.length, c.desired.v_star_left, c.desired.v_star_right);
  ViscoplasticLaw law = make_law(c.law);

  InternalState internal;
  internal.globular_fraction = c.law.initial_globular_fraction;
  internal.dislocation_density = c.law.initial_dislocation_density;
  internal.temperature = c.material.temperature;

  const double step = c.law.fd_step > 0.0 ? c.law.fd_step : default_fd_step(c.desired.sigma_star);
  const double s_star = compute_s_star(law, params, desired, internal, step);
  const HyperbolicSystem sys = build_system(params.elastic_modulus(), s_star);
  const GainPair gains = synthesize_gains(sys, params);

  std::string source;
  bool fallback = false;
  const DecayCertificate cert = certify(c, sys, params, gains, source, fallback);
  return Scenario{c,     params, desired, std::move(law), internal, s_star, sys,
                  gains, cert,   source,  fallback};
}

LawVariant Scenario::law_variant() const {
  return config.control.law_variant == "coth-closed-form" ? LawVariant::kCothClosedForm
                                                          : LawVariant::kRiemannGain;
}

Scheme Scenario::scheme() const {
  return config.solver.scheme == "linear-riemann" ? Scheme::kLinearRiemann
                                                  : Scheme::kNonlinearSplit;
}

SolverConfig Scenario::solver_config() const {
  SolverConfig s;
  s.cfl = config.solver.cfl;
  s.t_end = config.solver.t_end;
  s.record_every = config.solver.record_every;
  s.scheme = scheme();
  return s;
}

FeedbackController Scenario::controller(LawVariant variant) const {
  return FeedbackController(params, desired, gains, s_star, variant,
                            boundary_mode(config.control.left), boundary_mode(config.control.right));
}

FeedbackController Scenario::controller() const { return controller(law_variant()); }

json to_json(const DecayCertificate& cert) {
  return {{"mu_hat", cert.mu_hat},
          {"mu", cert.mu},
          {"K0", cert.gains.k0},
          {"K1", cert.gains.k1},
          {"dissipativity", cert.dissipativity},
          {"condition1_ok", cert.condition1_ok},
          {"condition2_ok", cert.condition2_ok},
          {"valid", cert.valid()}};
}

json to_json(const TimeRecord& r) {
  return {{"t", r.t},
          {"lyapunov", r.lyapunov},
          {"l2_norm_U", r.l2_norm_u},
          {"v_left", r.v_left},
          {"v_right", r.v_right},
          {"sigma_left", r.sigma_left},
          {"sigma_right", r.sigma_right},
          {"displacement", r.displacement},
          {"force", r.force}};
}

std::optional<double> settling_time_99(const TimeSeries& series, double sigma_star) {
  if (series.records.empty()) return std::nullopt;
  double last = 0.0;
  for (const TimeRecord& r : series.records) {
    if (r.sigma_left < 0.99 * sigma_star) last = r.t;
  }
  if (series.records.back().sigma_left < 0.99 * sigma_star) return std::nullopt;
  return last;
}

namespace {

json scenario_json(const Scenario& s) {
  json j;
  j["config"] = s.config.resolved.to_json();
  j["s_star"] = s.s_star;
  j["wave_speed"] = s.params.wave_speed();
  j["gains"] = {{"K0", s.gains.k0}, {"K1", s.gains.k1}};
  j["certificate"] = to_json(s.certificate);
  j["mu_hat_policy"] = {{"configured", s.config.lyapunov.mu_hat_policy},
                        {"used", s.mu_hat_source},
                        {"fallback", s.mu_hat_fallback}};
  j["decay_rate_lower_bound"] = decay_rate_lower_bound(s.sys, s.certificate.mu_hat);
  return j;
}

std::function<double(double)> hump(double amplitude, double center, double width) {
  return [=](double x) { return amplitude * cosine_hump(x, center, width); };
}

RiemannFields linear_initial(const Scenario& s, const Grid& grid) {
  const InitialBlock& in = s.config.initial;
  const double len = s.params.length();
  if (in.profile == "zero") return RiemannFields::zeros(grid.n_cells());
  if (in.profile == "uniform") {
    return riemann_fields_from(s.sys, grid, [&](double) { return in.v0; },
                               [&](double) { return in.sigma0; });
  }
  return riemann_fields_from(s.sys, grid, hump(in.bump_v, in.bump_center * len, in.bump_width * len),
                             hump(in.bump_sigma, in.bump_center * len, in.bump_width * len));
}

PlantFields nonlinear_initial(const Scenario& s, const Grid& grid) {
  const InitialBlock& in = s.config.initial;
  const int n = grid.n_cells();
  if (in.profile == "zero") return PlantFields::uniform(n, 0.0, 0.0, s.initial_internal);
  if (in.profile == "uniform") return PlantFields::uniform(n, in.v0, in.sigma0, s.initial_internal);
  // Desired state plus a perturbation hump.
  const double len = s.params.length();
  PlantFields f = PlantFields::uniform(n, 0.0, 0.0, s.initial_internal);
  for (int i = 0; i < n; ++i) {
    const double x = grid.center(i);
    const double shape = cosine_hump(x, in.bump_center * len, in.bump_width * len);
    f.velocity[i] = s.desired.velocity(x) + in.bump_v * shape;
    f.stress[i] = s.desired.sigma_star() + in.bump_sigma * shape;
  }
  return f;
}

// max_k L(t_k) / (L(0) e^{-mu t_k}); 0 when L(0) = 0.
double bound_ratio(const TimeSeries& series, double mu) {
  if (series.records.empty() || series.records.front().lyapunov <= 0.0) return 0.0;
  const double l0 = series.records.front().lyapunov;
  double worst = 0.0;
  for (const TimeRecord& r : series.records) {
    worst = std::max(worst, r.lyapunov / (l0 * std::exp(-mu * r.t)));
  }
  return worst;
}

json variant_summary(const Scenario& s, LawVariant variant, const Grid& grid,
                     const WeightProfile& weights) {
  json j;
  j["variant"] = std::string(to_string(variant));
  try {
    const FeedbackController ctrl = s.controller(variant);
    const GainPair eq = equivalent_reflection_gains(ctrl);
    j["equivalent_gains"] = {{"K0", eq.k0}, {"K1", eq.k1}};
    const TimeSeries ts = run_linear(s.sys, ctrl, weights, grid, linear_initial(s, grid),
                                     s.solver_config());
    const double l0 = ts.records.front().lyapunov;
    const double l_end = ts.records.back().lyapunov;
    j["status"] = ts.failed ? "failed" : "ok";
    if (ts.failed) j["failure"] = ts.failure;
    j["lyapunov_nonincreasing"] = lyapunov_nonincreasing(ts);
    j["final_ratio"] = l0 > 0.0 ? l_end / l0 : 0.0;
    j["decays"] = !ts.failed && l_end < l0 && lyapunov_nonincreasing(ts);
  } catch (const std::exception& ex) {
    j["status"] = "failed";
    j["failure"] = ex.what();
    j["decays"] = false;
  }
  return j;
}

}  // namespace

RunResult simulate(const Scenario& s) {
  const Grid grid(s.params.length(), s.config.solver.n_cells);
  const WeightProfile weights(s.certificate.mu_hat, s.params.wave_speed(), s.params.length());
  const FeedbackController ctrl = s.controller();
  const SolverConfig cfg = s.solver_config();

  RunResult out;
  json& j = out.summary;
  j = scenario_json(s);
  j["scheme"] = std::string(to_string(cfg.scheme));
  j["law_variant"] = std::string(to_string(ctrl.variant()));
  j["controller"] = {{"left_coefficient", ctrl.left_coefficient()},
                     {"right_coefficient", ctrl.right_coefficient()},
                     {"left", std::string(to_string(ctrl.left_mode()))},
                     {"right", std::string(to_string(ctrl.right_mode()))}};

  if (cfg.scheme == Scheme::kLinearRiemann) {
    out.series = run_linear(s.sys, ctrl, weights, grid, linear_initial(s, grid), cfg);
  } else {
    const NonlinearPlant plant{s.params, s.law, grid, nonlinear_initial(s, grid)};
    out.series = run_nonlinear(plant, ctrl, weights, cfg);
  }
  const TimeSeries& ts = out.series;

  j["status"] = ts.failed ? "failed" : "ok";
  j["failure"] = ts.failed ? json(ts.failure) : json(nullptr);
  j["n_records"] = ts.records.size();
  try {
    j["fitted_rate"] = fit_decay_rate(ts);
  } catch (const InsufficientData&) {
    j["fitted_rate"] = nullptr;
  }
  j["final"] = ts.records.empty() ? json(nullptr) : to_json(ts.records.back());
  j["lyapunov_nonincreasing"] = lyapunov_nonincreasing(ts);

  if (cfg.scheme == Scheme::kLinearRiemann) {
    j["bound_ratio_max"] = bound_ratio(ts, s.certificate.mu);
    j["variant_comparison"] = {
        {"riemann-gain", variant_summary(s, LawVariant::kRiemannGain, grid, weights)},
        {"coth-closed-form", variant_summary(s, LawVariant::kCothClosedForm, grid, weights)}};
  } else {
    const std::optional<double> settle = settling_time_99(ts, s.desired.sigma_star());
    j["settling_time_99"] = settle ? json(*settle) : json(nullptr);
    if (!ts.records.empty()) {
      j["converged_stress"] = ts.records.back().sigma_left;
      j["converged_force"] = ts.records.back().force;
      j["target_force"] = s.desired.sigma_star() * s.params.area();
    }
  }
  return out;
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

fs::path output_path(const RunConfig& c, const std::string& suffix) {
  return fs::path(c.output.dir) / (c.output.name + suffix);
}

std::string csv_text(const TimeSeries& ts) {
  std::ostringstream out;
  write_csv(out, ts);
  return out.str();
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n';
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Shared error mapping for the subcommands.
template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const InvalidParameter& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& ex) {
    std::cerr << "runtime failure: " << ex.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int cmd_certify(const RunConfig& config, std::ostream* log) {
  return guarded([&] {
    const Scenario s = build_scenario(config);
    json j = scenario_json(s);
    const fs::path path = output_path(config, "_certificate.json");
    write_atomic(path, json_text(j));
    const DecayCertificate& c = s.certificate;
    say(log, "S* = " + fmt(s.s_star) + ", K0 = " + fmt(c.gains.k0) + ", K1 = " + fmt(c.gains.k1));
    say(log, "mu_hat = " + fmt(c.mu_hat) + " (" + s.mu_hat_source + "), mu = " + fmt(c.mu) +
                 ", dissipativity = " + fmt(c.dissipativity));
    say(log, std::string("certificate ") + (c.valid() ? "valid" : "INVALID") + " -> " +
                 path.string());
    return c.valid() ? kExitOk : kExitCertification;
  });
}

int cmd_simulate(const RunConfig& config, std::ostream* log) {
  return guarded([&] {
    const Scenario s = build_scenario(config);
    const RunResult r = simulate(s);
    write_atomic(output_path(config, ".csv"), csv_text(r.series));
    write_atomic(output_path(config, ".json"), json_text(r.summary));
    say(log, "wrote " + output_path(config, ".csv").string() + " (" +
                 std::to_string(r.series.records.size()) + " records)");
    if (!r.series.records.empty()) {
      const TimeRecord& f = r.series.records.back();
      say(log, "final t = " + fmt(f.t) + ", v_left = " + fmt(f.v_left) +
                   ", sigma_left = " + fmt(f.sigma_left) + ", force = " + fmt(f.force));
    }
    if (r.series.failed) {
      std::cerr << "runtime failure: " << r.series.failure << '\n';
      return kExitRuntime;
    }
    return kExitOk;
  });
}

namespace {

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string failure;
  json summary;
  std::string csv;
  std::optional<double> transport_error;
};

SweepRow sweep_one(const RunConfig& base, double value) {
  SweepRow row;
  row.value = value;
  try {
    const RunConfig c = base.with_override(base.sweep.path, value);
    const Scenario s = build_scenario(c);
    const RunResult r = simulate(s);
    row.summary = r.summary;
    row.csv = csv_text(r.series);
    row.ok = !r.series.failed;
    row.failure = r.series.failure;
    if (base.sweep.path == "solver.n_cells") {
      const double t_end = c.refine.t_end > 0.0 ? c.refine.t_end
                                                : 0.3 * c.material.length / s.params.wave_speed();
      const auto levels = refine_transport(c.material.elastic_modulus, c.material.length,
                                           {c.solver.n_cells}, t_end, c.refine.cfl,
                                           c.refine.profile == "constant"
                                               ? RefinementProfile::kConstant
                                               : RefinementProfile::kBump);
      row.transport_error = levels.front().l2_error;
    }
  } catch (const std::exception& ex) {
    row.ok = false;
    row.failure = ex.what();
  }
  return row;
}

std::string number_or_empty(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number()) return "";
  return fmt(j[key].get<double>());
}

}  // namespace

int cmd_sweep(const RunConfig& config, std::ostream* log) {
  return guarded([&] {
    if (config.sweep.path.empty()) throw ConfigError("sweep.path", "required for sweep");
    if (config.sweep.values.empty()) throw ConfigError("sweep.values", "must not be empty");

    std::vector<std::future<SweepRow>> jobs;
    for (double v : config.sweep.values) {
      jobs.push_back(std::async(std::launch::async, sweep_one, std::cref(config), v));
    }
    std::vector<SweepRow> rows;
    for (auto& job : jobs) rows.push_back(job.get());

    const bool refine_column = config.sweep.path == "solver.n_cells";
    std::ostringstream csv;
    csv << "index," << config.sweep.path
        << ",status,certificate_valid,mu,fitted_rate,final_t,final_v_left,final_sigma_left,"
           "final_force,settling_time_99";
    if (refine_column) csv << ",transport_l2_error,error_ratio";
    csv << '\n';

    json rows_json = json::array();
    int failures = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const SweepRow& r = rows[k];
      const json& sm = r.summary;
      const json fin = sm.is_object() && sm.contains("final") ? sm["final"] : json();
      const json cert = sm.is_object() && sm.contains("certificate") ? sm["certificate"] : json();
      csv << k << ',' << fmt(r.value) << ',' << (r.ok ? "ok" : "failed") << ','
          << (cert.is_object() ? (cert["valid"].get<bool>() ? "true" : "false") : "") << ','
          << number_or_empty(cert, "mu") << ',' << number_or_empty(sm, "fitted_rate") << ','
          << number_or_empty(fin, "t") << ',' << number_or_empty(fin, "v_left") << ','
          << number_or_empty(fin, "sigma_left") << ',' << number_or_empty(fin, "force") << ','
          << number_or_empty(sm, "settling_time_99");
      json row = {{"index", k}, {"value", r.value}, {"status", r.ok ? "ok" : "failed"}};
      if (!r.failure.empty()) row["failure"] = r.failure;
      if (sm.is_object()) {
        json brief = sm;
        brief.erase("config");
        row["summary"] = brief;
      }
      if (refine_column) {
        std::string err, ratio;
        if (r.transport_error) {
          err = fmt(*r.transport_error);
          row["transport_l2_error"] = *r.transport_error;
          if (k > 0 && rows[k - 1].transport_error && *r.transport_error > 0.0) {
            const double q = *rows[k - 1].transport_error / *r.transport_error;
            ratio = fmt(q);
            row["error_ratio"] = q;
          }
        }
        csv << ',' << err << ',' << ratio;
      }
      csv << '\n';
      if (!r.ok) {
        ++failures;
      } else {
        write_atomic(output_path(config, "_" + std::to_string(k) + ".csv"), r.csv);
      }
      rows_json.push_back(row);
    }

    const json j = {{"config", config.resolved.to_json()},
                    {"path", config.sweep.path},
                    {"rows", rows_json},
                    {"failures", failures}};
    write_atomic(output_path(config, "_sweep.csv"), csv.str());
    write_atomic(output_path(config, "_sweep.json"), json_text(j));
    say(log, "sweep over " + config.sweep.path + ": " + std::to_string(rows.size()) + " runs, " +
                 std::to_string(failures) + " failed -> " +
                 output_path(config, "_sweep.csv").string());
    return failures == 0 ? kExitOk : kExitRuntime;
  });
}

int cmd_refine(const RunConfig& config, std::ostream* log) {
  return guarded([&] {
    const RefineBlock& rb = config.refine;
    const MaterialParams params(config.material.elastic_modulus, config.material.length,
                                config.material.area);
    const double t_end = rb.t_end > 0.0 ? rb.t_end : 0.3 * params.length() / params.wave_speed();
    const auto levels =
        refine_transport(params.elastic_modulus(), params.length(), rb.levels, t_end, rb.cfl,
                         rb.profile == "constant" ? RefinementProfile::kConstant
                                                  : RefinementProfile::kBump);
    std::ostringstream csv;
    csv << "n_cells,l2_error,ratio,observed_order\n";
    json arr = json::array();
    for (const RefinementLevel& l : levels) {
      csv << l.n_cells << ',' << fmt(l.l2_error) << ',' << fmt(l.ratio) << ','
          << fmt(l.observed_order) << '\n';
      arr.push_back({{"n_cells", l.n_cells},
                     {"l2_error", l.l2_error},
                     {"ratio", l.ratio},
                     {"observed_order", l.observed_order}});
      say(log, "n = " + std::to_string(l.n_cells) + "  error = " + fmt(l.l2_error) +
                   "  ratio = " + fmt(l.ratio) + "  order = " + fmt(l.observed_order));
    }
    const json j = {{"config", config.resolved.to_json()},
                    {"profile", rb.profile},
                    {"t_end", t_end},
                    {"levels", arr}};
    write_atomic(output_path(config, "_refine.csv"), csv.str());
    write_atomic(output_path(config, "_refine.json"), json_text(j));
    return kExitOk;
  });
}

}  // namespace formctl
