#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "formctl/control.hpp"
#include "formctl/grid.hpp"
#include "formctl/hyperbolics.hpp"
#include "formctl/lyapunov.hpp"
#include "formctl/material.hpp"

namespace formctl {

enum class Scheme { kLinearRiemann, kNonlinearSplit };

std::string_view to_string(Scheme s);

struct SolverConfig {
  double cfl = 0.9;
  double t_end = 1.0;
  int record_every = 1;
  Scheme scheme = Scheme::kLinearRiemann;

  void validate() const;
};

/// cfl * dx / sqrt(E)
double stable_time_step(const Grid& grid, double wave_speed, double cfl);

/// Boundary face states of the linear scheme (ghost value paired with the outgoing cell value).
struct FaceTraces {
  RiemannState left;
  RiemannState right;
};

FaceTraces linear_face_traces(const GainPair& gains, const RiemannFields& state);

/// One step of d_t R + Lambda d_x R = -B R with R+(0) = K0 R-(0), R-(L) = K1 R+(L):
/// first-order upwind transport followed by the exact source propagator exp(-B dt).
void step_linear(const HyperbolicSystem& sys, const GainPair& gains, const Grid& grid,
                 RiemannFields& state, double dt);

/// Full fields of the viscoplastic bar, in the model frame (compression positive).
struct PlantFields {
  std::vector<double> velocity;
  std::vector<double> stress;
  std::vector<double> plastic_strain;
  std::vector<InternalState> internal;

  static PlantFields uniform(int n, double velocity, double stress, const InternalState& internal);
  int size() const noexcept { return static_cast<int>(velocity.size()); }
};

/// Pointwise relaxation sigma' = -E eps_p', eps_p' = rate, internal' = rates over
/// a time h, sub-cycled classical RK4 (at most kMaxRelaxationSubsteps inner steps).
inline constexpr int kMaxRelaxationSubsteps = 100;

struct LocalPoint {
  double stress = 0.0;
  double plastic_strain = 0.0;
  InternalState internal;
};

LocalPoint relax_point(const ViscoplasticLaw& law, double elastic_modulus, LocalPoint p, double h);

/// Strang step: relaxation over dt/2, homogeneous wave transport over dt with the
/// prescribed boundary velocities (model frame), relaxation over dt/2.
void step_nonlinear(const MaterialParams& params, const ViscoplasticLaw& law, const Grid& grid,
                    PlantFields& fields, double dt, double velocity_left, double velocity_right);

struct TimeRecord {
  double t = 0.0;
  double lyapunov = 0.0;
  double l2_norm_u = 0.0;
  double v_left = 0.0;  ///< inward speed
  double v_right = 0.0; ///< inward speed
  double sigma_left = 0.0;
  double sigma_right = 0.0;
  double displacement = 0.0;
  double force = 0.0;
};

struct TimeSeries {
  std::vector<TimeRecord> records;
  bool failed = false;
  std::string failure;
};

/// Closed-loop linear run on perturbation fields with fixed reflection gains.
/// Traces are perturbations; force is area * dsigma at the left face.
TimeSeries run_linear(const HyperbolicSystem& sys, const MaterialParams& params,
                      const GainPair& gains, const WeightProfile& weights, const Grid& grid,
                      RiemannFields initial, const SolverConfig& config);

/// Same, with the controller's boundary laws imposed at the faces.
TimeSeries run_linear(const HyperbolicSystem& sys, const FeedbackController& ctrl,
                      const WeightProfile& weights, const Grid& grid, RiemannFields initial,
                      const SolverConfig& config);

struct NonlinearPlant {
  MaterialParams params;
  ViscoplasticLaw law;
  Grid grid;
  PlantFields initial;
};

/// Nonlinear run. Each step the controller sees the boundary-cell stresses from the
/// end of the previous step and its commands hold for the next step. Lyapunov values
/// use the perturbation from the controller's desired state with the given weights.
/// Force and displacement refer to the first feedback boundary (left if both).
TimeSeries run_nonlinear(const NonlinearPlant& plant, const FeedbackController& ctrl,
                         const WeightProfile& weights, const SolverConfig& config);

/// Header row plus one line per record, 12 significant digits.
void write_csv(std::ostream& out, const TimeSeries& series);

/// Least-squares slope of -ln L(t) over records with t >= t_start and L >= 1e-30.
double fit_decay_rate(const TimeSeries& series, double t_start = 0.0);

/// True if every recorded Lyapunov value is <= the previous one times (1 + rel_tol).
bool lyapunov_nonincreasing(const TimeSeries& series, double rel_tol = 0.0);

/// Smooth cosine hump 0.5 (1 + cos(2 pi (x - center) / width)) on |x - center| < width / 2.
double cosine_hump(double x, double center, double width);

/// Riemann fields of the perturbation (dv, dsigma) sampled at cell centers.
RiemannFields riemann_fields_from(const HyperbolicSystem& sys, const Grid& grid,
                                  const std::function<double(double)>& delta_v,
                                  const std::function<double(double)>& delta_sigma);

PerturbationFields physical_fields(const HyperbolicSystem& sys, const RiemannFields& r);

enum class RefinementProfile {
  kBump,      ///< transported humps, K0 = K1 = 0
  kConstant,  ///< R+ = R- = 1, K0 = K1 = 1 (exactly preserved)
};

struct RefinementLevel {
  int n_cells = 0;
  double l2_error = 0.0;
  double ratio = 0.0;          ///< previous error / this error (0 on the first level)
  double observed_order = 0.0; ///< log2(ratio)
};

/// Pure transport (S* = 0) on successively finer grids against the
/// method-of-characteristics solution at t_end.
std::vector<RefinementLevel> refine_transport(double elastic_modulus, double length,
                                              const std::vector<int>& levels, double t_end,
                                              double cfl, RefinementProfile profile);

}  // namespace formctl
