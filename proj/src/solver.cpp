#include "formctl/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <numbers>
#include <string>

#include "formctl/error.hpp"

namespace formctl {

Grid::Grid(double length, int n_cells) : length_(length), n_cells_(n_cells) {
  if (!(std::isfinite(length) && length > 0.0)) throw InvalidParameter("grid: length must be > 0");
  if (n_cells < 2) throw InvalidParameter("grid: need at least 2 cells");
}

std::string_view to_string(Scheme s) {
  return s == Scheme::kLinearRiemann ? "linear-riemann" : "nonlinear-split";
}

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidParameter("solver: cfl must be in (0, 1]");
  if (!(std::isfinite(t_end) && t_end > 0.0)) throw InvalidParameter("solver: t_end must be > 0");
  if (record_every < 1) throw InvalidParameter("solver: record_every must be >= 1");
}

double stable_time_step(const Grid& grid, double wave_speed, double cfl) {
  return cfl * grid.dx() / wave_speed;
}

namespace {

double courant_number(const Grid& grid, double wave_speed, double dt) {
  if (!(dt > 0.0)) throw CflViolation("time step must be > 0");
  const double nu = wave_speed * dt / grid.dx();
  if (nu > 1.0 + 1e-12) {
    throw CflViolation("dt = " + std::to_string(dt) + " exceeds dx / sqrt(E) = " +
                       std::to_string(grid.dx() / wave_speed));
  }
  return nu;
}

// Upwind update: plus moves right with inflow ghost_left, minus moves left with
// inflow ghost_right.
void transport(RiemannFields& r, double nu, double ghost_left, double ghost_right) {
  const int n = r.size();
  double upstream = ghost_left;
  for (int i = 0; i < n; ++i) {
    const double old = r.plus[i];
    r.plus[i] = old - nu * (old - upstream);
    upstream = old;
  }
  double downstream = ghost_right;
  for (int i = n - 1; i >= 0; --i) {
    const double old = r.minus[i];
    r.minus[i] = old + nu * (downstream - old);
    downstream = old;
  }
}

void check_finite(const std::vector<double>& field, const char* name) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!std::isfinite(field[i])) {
      throw NonFiniteError(std::string(name) + " is not finite in cell " + std::to_string(i));
    }
  }
}

}  // namespace

FaceTraces linear_face_traces(const GainPair& gains, const RiemannFields& state) {
  const int n = state.size();
  const double out_left = state.minus.front();
  const double out_right = state.plus[n - 1];
  return {{gains.k0 * out_left, out_left}, {out_right, gains.k1 * out_right}};
}

void step_linear(const HyperbolicSystem& sys, const GainPair& gains, const Grid& grid,
                 RiemannFields& state, double dt) {
  const double nu = courant_number(grid, sys.wave_speed(), dt);
  const FaceTraces faces = linear_face_traces(gains, state);
  transport(state, nu, faces.left.r_plus, faces.right.r_minus);

  if (sys.s_star() != 0.0) {
    const Mat2 p = sys.source_propagator(dt);
    for (int i = 0; i < state.size(); ++i) {
      const double rp = state.plus[i];
      const double rm = state.minus[i];
      state.plus[i] = p(0, 0) * rp + p(0, 1) * rm;
      state.minus[i] = p(1, 0) * rp + p(1, 1) * rm;
    }
  }
}

PlantFields PlantFields::uniform(int n, double velocity, double stress,
                                 const InternalState& internal) {
  return {std::vector<double>(n, velocity), std::vector<double>(n, stress),
          std::vector<double>(n, 0.0), std::vector<InternalState>(n, internal)};
}

namespace {

// y = (sigma, eps_p, X, rho_bar, eq_strain)
using LocalVec = std::array<double, 5>;

LocalPoint unpack(const LocalVec& y, double temperature) {
  LocalPoint p;
  p.stress = y[0];
  p.plastic_strain = y[1];
  p.internal.globular_fraction = y[2];
  p.internal.dislocation_density = y[3];
  p.internal.eq_plastic_strain = y[4];
  p.internal.temperature = temperature;
  return p;
}

LocalVec local_rhs(const ViscoplasticLaw& law, double e, const LocalVec& y, double temperature) {
  const LocalPoint p = unpack(y, temperature);
  const InternalState s = clamp_internal_state(p.internal);
  const double rate = law.plastic_strain_rate(p.stress, s);
  const InternalRates ir = law.internal_state_rate(p.stress, s);
  return {-e * rate, rate, ir.globular_fraction, ir.dislocation_density, ir.eq_plastic_strain};
}

int substep_count(const ViscoplasticLaw& law, double e, const LocalPoint& p, double h) {
  const double delta = std::max(1e-6 * std::abs(p.stress), 1e-8);
  const double stiffness = e *
                           std::abs(law.plastic_strain_rate(p.stress + delta, p.internal) -
                                    law.plastic_strain_rate(p.stress - delta, p.internal)) /
                           (2.0 * delta);
  double need = stiffness * h / 0.05;

  // Internal variables: keep each inner step's change below 10% of the magnitude.
  const InternalRates r = law.internal_state_rate(p.stress, p.internal);
  auto relative = [h](double rate, double magnitude) {
    return std::abs(rate) * h / (0.1 * std::max(std::abs(magnitude), 1e-12));
  };
  need = std::max(need, relative(r.dislocation_density, p.internal.dislocation_density));
  need = std::max(need, relative(r.globular_fraction, 1.0));
  if (!std::isfinite(need)) return kMaxRelaxationSubsteps;
  return std::clamp(static_cast<int>(std::ceil(need)), 1, kMaxRelaxationSubsteps);
}

}  // namespace

LocalPoint relax_point(const ViscoplasticLaw& law, double elastic_modulus, LocalPoint p,
                       double h) {
  if (h <= 0.0) return p;
  const double temperature = p.internal.temperature;
  const int n_sub = substep_count(law, elastic_modulus, p, h);
  const double k = h / n_sub;

  LocalVec y{p.stress, p.plastic_strain, p.internal.globular_fraction,
             p.internal.dislocation_density, p.internal.eq_plastic_strain};
  for (int s = 0; s < n_sub; ++s) {
    auto axpy = [](const LocalVec& a, double c, const LocalVec& b) {
      LocalVec out;
      for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + c * b[j];
      return out;
    };
    const LocalVec k1 = local_rhs(law, elastic_modulus, y, temperature);
    const LocalVec k2 = local_rhs(law, elastic_modulus, axpy(y, 0.5 * k, k1), temperature);
    const LocalVec k3 = local_rhs(law, elastic_modulus, axpy(y, 0.5 * k, k2), temperature);
    const LocalVec k4 = local_rhs(law, elastic_modulus, axpy(y, k, k3), temperature);
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] += k / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    const InternalState clamped = clamp_internal_state(unpack(y, temperature).internal);
    y[2] = clamped.globular_fraction;
    y[3] = clamped.dislocation_density;
    y[4] = clamped.eq_plastic_strain;
  }
  return unpack(y, temperature);
}

namespace {

void relax_fields(const ViscoplasticLaw& law, double e, PlantFields& f, double h) {
  if (std::holds_alternative<ElasticLaw>(law.variant())) return;
  for (int i = 0; i < f.size(); ++i) {
    const LocalPoint p = relax_point(law, e, {f.stress[i], f.plastic_strain[i], f.internal[i]}, h);
    f.stress[i] = p.stress;
    f.plastic_strain[i] = p.plastic_strain;
    f.internal[i] = p.internal;
  }
}

}  // namespace

void step_nonlinear(const MaterialParams& params, const ViscoplasticLaw& law, const Grid& grid,
                    PlantFields& fields, double dt, double velocity_left, double velocity_right) {
  const double c = params.wave_speed();
  const double nu = courant_number(grid, c, dt);
  if (!std::isfinite(velocity_left) || !std::isfinite(velocity_right)) {
    throw NonFiniteError("boundary velocity is not finite");
  }
  const double e = params.elastic_modulus();

  relax_fields(law, e, fields, 0.5 * dt);

  // Homogeneous wave part in characteristic variables R = T^{-1} (v, sigma).
  const int n = fields.size();
  RiemannFields r = RiemannFields::zeros(n);
  for (int i = 0; i < n; ++i) {
    r.plus[i] = -0.5 * fields.velocity[i] + 0.5 * fields.stress[i] / c;
    r.minus[i] = 0.5 * fields.velocity[i] + 0.5 * fields.stress[i] / c;
  }
  // Face velocity v = -R+ + R- fixes the incoming invariant.
  const double ghost_left = r.minus.front() - velocity_left;
  const double ghost_right = velocity_right + r.plus.back();
  transport(r, nu, ghost_left, ghost_right);
  for (int i = 0; i < n; ++i) {
    fields.velocity[i] = -r.plus[i] + r.minus[i];
    fields.stress[i] = c * (r.plus[i] + r.minus[i]);
  }

  relax_fields(law, e, fields, 0.5 * dt);

  check_finite(fields.velocity, "velocity");
  check_finite(fields.stress, "stress");
  check_finite(fields.plastic_strain, "plastic strain");
}

namespace {

struct StepPlan {
  long n_steps;
  double dt;
};

StepPlan plan_steps(const Grid& grid, double wave_speed, const SolverConfig& config) {
  config.validate();
  const double dt_max = stable_time_step(grid, wave_speed, config.cfl);
  const long n = static_cast<long>(std::ceil(config.t_end / dt_max * (1.0 - 1e-12)));
  const long n_steps = std::max(1L, n);
  return {n_steps, config.t_end / n_steps};
}

bool should_record(long step, long n_steps, int every) {
  return step % every == 0 || step == n_steps;
}

}  // namespace

TimeSeries run_linear(const HyperbolicSystem& sys, const MaterialParams& params,
                      const GainPair& gains, const WeightProfile& weights, const Grid& grid,
                      RiemannFields state, const SolverConfig& config) {
  const StepPlan plan = plan_steps(grid, sys.wave_speed(), config);
  TimeSeries series;
  double displacement = 0.0;
  const CellWeights cached = cell_weights(weights, grid);

  auto record = [&](double t) {
    const FaceTraces faces = linear_face_traces(gains, state);
    const PerturbationState left = to_physical(sys, faces.left);
    const PerturbationState right = to_physical(sys, faces.right);
    TimeRecord rec;
    rec.t = t;
    rec.lyapunov = lyapunov_functional(cached, state);
    rec.l2_norm_u = std::sqrt(grid_norm_squared(grid, physical_fields(sys, state)));
    rec.v_left = -left.delta_v;
    rec.v_right = right.delta_v;
    rec.sigma_left = left.delta_sigma;
    rec.sigma_right = right.delta_sigma;
    rec.displacement = displacement;
    rec.force = params.area() * left.delta_sigma;
    series.records.push_back(rec);
  };

  record(0.0);
  try {
    for (long k = 1; k <= plan.n_steps; ++k) {
      // Inward speed at x = 0 is -dv = R+ - R-.
      const RiemannState face = linear_face_traces(gains, state).left;
      displacement += (face.r_plus - face.r_minus) * plan.dt;
      step_linear(sys, gains, grid, state, plan.dt);
      check_finite(state.plus, "R+");
      check_finite(state.minus, "R-");
      if (should_record(k, plan.n_steps, config.record_every)) record(k * plan.dt);
    }
  } catch (const std::exception& ex) {
    series.failed = true;
    series.failure = ex.what();
  }
  return series;
}

TimeSeries run_linear(const HyperbolicSystem& sys, const FeedbackController& ctrl,
                      const WeightProfile& weights, const Grid& grid, RiemannFields initial,
                      const SolverConfig& config) {
  return run_linear(sys, ctrl.params(), equivalent_reflection_gains(ctrl), weights, grid,
                    std::move(initial), config);
}

TimeSeries run_nonlinear(const NonlinearPlant& plant, const FeedbackController& ctrl,
                         const WeightProfile& weights, const SolverConfig& config) {
  const MaterialParams& params = plant.params;
  const Grid& grid = plant.grid;
  const int n = grid.n_cells();
  if (plant.initial.size() != n) throw InvalidParameter("initial fields do not match the grid");

  const StepPlan plan = plan_steps(grid, params.wave_speed(), config);
  const HyperbolicSystem sys = build_system(params.elastic_modulus(), 0.0);
  const DesiredState& desired = ctrl.desired();
  const bool force_on_left = ctrl.left_mode() == BoundaryMode::kFeedback ||
                             ctrl.right_mode() != BoundaryMode::kFeedback;

  PlantFields fields = plant.initial;
  TimeSeries series;
  const CellWeights cached = cell_weights(weights, grid);
  double displacement = 0.0;

  auto sample_at = [&](double t) {
    return BoundarySample{t, fields.stress.front(), fields.stress.back()};
  };

  auto record = [&](double t, const BoundarySample& sample, const BoundaryCommand& cmd) {
    RiemannFields r = RiemannFields::zeros(n);
    PerturbationFields u{std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < n; ++i) {
      u.delta_v[i] = fields.velocity[i] - desired.velocity(grid.center(i));
      u.delta_sigma[i] = fields.stress[i] - desired.sigma_star();
      const RiemannState ri = to_riemann(sys, {u.delta_v[i], u.delta_sigma[i]});
      r.plus[i] = ri.r_plus;
      r.minus[i] = ri.r_minus;
    }
    TimeRecord rec;
    rec.t = t;
    rec.lyapunov = lyapunov_functional(cached, r);
    rec.l2_norm_u = std::sqrt(grid_norm_squared(grid, u));
    rec.v_left = cmd.speed_left;
    rec.v_right = cmd.speed_right;
    rec.sigma_left = sample.sigma_left;
    rec.sigma_right = sample.sigma_right;
    rec.displacement = displacement;
    rec.force = params.area() * (force_on_left ? sample.sigma_left : sample.sigma_right);
    series.records.push_back(rec);
  };

  BoundarySample sample = sample_at(0.0);
  BoundaryCommand cmd = controller_step(ctrl, sample);
  record(0.0, sample, cmd);
  try {
    for (long k = 1; k <= plan.n_steps; ++k) {
      step_nonlinear(params, plant.law, grid, fields, plan.dt, -cmd.speed_left, cmd.speed_right);
      displacement += (force_on_left ? cmd.speed_left : cmd.speed_right) * plan.dt;
      const double t = k * plan.dt;
      sample = sample_at(t);
      cmd = controller_step(ctrl, sample);
      if (should_record(k, plan.n_steps, config.record_every)) record(t, sample, cmd);
    }
  } catch (const std::exception& ex) {
    series.failed = true;
    series.failure = ex.what();
  }
  return series;
}

void write_csv(std::ostream& out, const TimeSeries& series) {
  out << "t,lyapunov,l2_norm_U,v_left,v_right,sigma_left,sigma_right,displacement,force\n";
  char line[512];
  for (const TimeRecord& r : series.records) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  r.t, r.lyapunov, r.l2_norm_u, r.v_left, r.v_right, r.sigma_left, r.sigma_right,
                  r.displacement, r.force);
    out << line;
  }
}

double fit_decay_rate(const TimeSeries& series, double t_start) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int count = 0;
  for (const TimeRecord& r : series.records) {
    if (r.t < t_start || !(r.lyapunov >= 1e-30)) continue;
    const double y = -std::log(r.lyapunov);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
    ++count;
  }
  if (count < 3) {
    throw InsufficientData("fit_decay_rate: need at least 3 positive records after t_start");
  }
  const double denom = count * stt - st * st;
  if (!(denom > 0.0)) throw InsufficientData("fit_decay_rate: records share one time value");
  return (count * sty - st * sy) / denom;
}

bool lyapunov_nonincreasing(const TimeSeries& series, double rel_tol) {
  for (std::size_t k = 1; k < series.records.size(); ++k) {
    if (series.records[k].lyapunov > series.records[k - 1].lyapunov * (1.0 + rel_tol)) {
      return false;
    }
  }
  return true;
}

double cosine_hump(double x, double center, double width) {
  const double s = (x - center) / width;
  if (std::abs(s) >= 0.5) return 0.0;
  return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * s));
}

RiemannFields riemann_fields_from(const HyperbolicSystem& sys, const Grid& grid,
                                  const std::function<double(double)>& delta_v,
                                  const std::function<double(double)>& delta_sigma) {
  RiemannFields r = RiemannFields::zeros(grid.n_cells());
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double x = grid.center(i);
    const RiemannState ri = to_riemann(sys, {delta_v(x), delta_sigma(x)});
    r.plus[i] = ri.r_plus;
    r.minus[i] = ri.r_minus;
  }
  return r;
}

PerturbationFields physical_fields(const HyperbolicSystem& sys, const RiemannFields& r) {
  const int n = r.size();
  PerturbationFields u{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < n; ++i) {
    const PerturbationState p = to_physical(sys, {r.plus[i], r.minus[i]});
    u.delta_v[i] = p.delta_v;
    u.delta_sigma[i] = p.delta_sigma;
  }
  return u;
}

std::vector<RefinementLevel> refine_transport(double elastic_modulus, double length,
                                              const std::vector<int>& levels, double t_end,
                                              double cfl, RefinementProfile profile) {
  if (levels.empty()) throw InvalidParameter("refine: no grid levels");
  const HyperbolicSystem sys = build_system(elastic_modulus, 0.0);
  const double c = sys.wave_speed();
  const bool bump = profile == RefinementProfile::kBump;
  const GainPair gains = bump ? GainPair{0.0, 0.0} : GainPair{1.0, 1.0};
  const double width = 0.4 * length;

  auto plus0 = [&](double x) { return bump ? cosine_hump(x, 0.25 * length, width) : 1.0; };
  auto minus0 = [&](double x) { return bump ? -0.5 * cosine_hump(x, 0.75 * length, width) : 1.0; };

  std::vector<RefinementLevel> out;
  for (int n_cells : levels) {
    const Grid grid(length, n_cells);
    RiemannFields r = RiemannFields::zeros(n_cells);
    for (int i = 0; i < n_cells; ++i) {
      r.plus[i] = plus0(grid.center(i));
      r.minus[i] = minus0(grid.center(i));
    }
    SolverConfig cfg;
    cfg.cfl = cfl;
    cfg.t_end = t_end;
    const StepPlan plan = plan_steps(grid, c, cfg);
    for (long k = 0; k < plan.n_steps; ++k) step_linear(sys, gains, grid, r, plan.dt);

    // Characteristics: zero inflow for the bump, the constant state is invariant.
    double err2 = 0.0;
    for (int i = 0; i < n_cells; ++i) {
      const double x = grid.center(i);
      const double exact_plus = bump ? plus0(x - c * t_end) : 1.0;
      const double exact_minus = bump ? minus0(x + c * t_end) : 1.0;
      err2 += (r.plus[i] - exact_plus) * (r.plus[i] - exact_plus) +
              (r.minus[i] - exact_minus) * (r.minus[i] - exact_minus);
    }
    RefinementLevel level;
    level.n_cells = n_cells;
    level.l2_error = std::sqrt(err2 * grid.dx());
    if (!out.empty() && level.l2_error > 0.0) {
      level.ratio = out.back().l2_error / level.l2_error;
      level.observed_order = std::log2(level.ratio);
    }
    out.push_back(level);
  }
  return out;
}

}  // namespace formctl
