#pragma once

#include <functional>
#include <string_view>
#include <variant>

namespace formctl {

// Units throughout: MPa, mm, s, N (1 MPa * 1 mm^2 = 1 N).

/// Bar geometry and elastic modulus. Density is normalized to 1.
class MaterialParams {
 public:
  MaterialParams(double elastic_modulus, double length, double area);

  double elastic_modulus() const noexcept { return elastic_modulus_; }
  double length() const noexcept { return length_; }
  double area() const noexcept { return area_; }
  static constexpr double density() noexcept { return 1.0; }

  /// Characteristic speed sqrt(E / rho).
  double wave_speed() const noexcept;

 private:
  double elastic_modulus_;
  double length_;
  double area_;
};

/// Target stress and target velocity profile on [0, L].
///
/// velocity(x) is expressed in the model frame of the balance law
/// dv/dt - dsigma/dx = 0. With compression counted positive, a die at x = 0
/// pushing into the bar has model velocity -s and a die at x = L has +s,
/// where s >= 0 is the inward speed. The inward_speed_* accessors return s.
class DesiredState {
 public:
  DesiredState(double sigma_star, double length, std::function<double(double)> velocity);

  /// Linear profile between the two inward boundary speeds.
  static DesiredState from_inward_speeds(double sigma_star, double length, double speed_left,
                                         double speed_right);

  double sigma_star() const noexcept { return sigma_star_; }
  double length() const noexcept { return length_; }
  double velocity(double x) const { return velocity_(x); }
  double inward_speed_left() const { return -velocity_(0.0); }
  double inward_speed_right() const { return velocity_(length_); }

 private:
  double sigma_star_;
  double length_;
  std::function<double(double)> velocity_;
};

/// Microstructure carried per material point. Temperature is fixed per run.
struct InternalState {
  double globular_fraction = 0.0;   ///< X in [0, 1]
  double dislocation_density = 0.0; ///< rho_bar >= 0, 1/mm^2
  double eq_plastic_strain = 0.0;   ///< accumulated |eps_p|, drives the Avrami kinetics
  double temperature = 0.0;         ///< degC, label only
};

struct InternalRates {
  double globular_fraction = 0.0;
  double dislocation_density = 0.0;
  double eq_plastic_strain = 0.0;
};

/// No plastic flow; S* = 0.
struct ElasticLaw {};

/// eps_p' = (sigma / sigma_ref)^n / t_ref for sigma >= 0, zero otherwise.
struct NortonLaw {
  double sigma_ref;
  double exponent;
  double t_ref;

  double plastic_strain_rate(double sigma) const;
};

struct KocksMeckingCoeffs {
  double generation = 0.0;   ///< k1, multiplies sqrt(rho_bar)
  double annihilation = 0.0; ///< k2, multiplies rho_bar
};

/// X = 1 - exp(-k * eps^m)
struct AvramiCoeffs {
  double rate = 0.0;
  double exponent = 1.0;
};

/// Taylor hardening, lamellar/globular mixture and the overstress flow rule.
struct TaylorCoeffs {
  double sigma0_lamellar = 0.0;
  double sigma0_globular = 0.0;
  double alpha = 0.3;
  double taylor_factor = 3.06;
  double shear_modulus = 0.0;
  double burgers_vector = 0.0;
  double drag_stress = 1.0;
  double rate_exponent = 1.0;
  double t_ref = 1.0;
};

struct HybridLaw {
  KocksMeckingCoeffs kocks_mecking;
  AvramiCoeffs avrami;
  TaylorCoeffs taylor;

  double taylor_hardening(double dislocation_density) const;
  double lamellar_stress(const InternalState& state) const;
  double globular_stress(const InternalState& state) const;
  double mixture_stress(const InternalState& state) const;
  double plastic_strain_rate(double sigma, const InternalState& state) const;
  /// Internal-variable rates driven by a given plastic strain rate.
  InternalRates rates_for_plastic_rate(double plastic_rate, const InternalState& state) const;
};

/// Closed set of constitutive laws behind one evaluation interface.
class ViscoplasticLaw {
 public:
  using Variant = std::variant<ElasticLaw, NortonLaw, HybridLaw>;

  explicit ViscoplasticLaw(Variant law) : law_(std::move(law)) {}

  double plastic_strain_rate(double sigma, const InternalState& state) const;
  InternalRates internal_state_rate(double sigma, const InternalState& state) const;
  std::string_view name() const;
  const Variant& variant() const noexcept { return law_; }

 private:
  Variant law_;
};

ViscoplasticLaw elastic_law();
ViscoplasticLaw norton_law(double sigma_ref, double exponent, double t_ref);
ViscoplasticLaw hybrid_law(const KocksMeckingCoeffs& kocks_mecking, const AvramiCoeffs& avrami,
                           const TaylorCoeffs& taylor);

/// Keeps X in [0, 1] and rho_bar, eq_plastic_strain non-negative.
InternalState clamp_internal_state(InternalState state);

/// One explicit Euler step of the internal variables at frozen stress, clamped.
InternalState euler_step(const ViscoplasticLaw& law, double sigma, const InternalState& state,
                         double dt);

/// max(1e-6 |sigma*|, 1e-8 MPa)
double default_fd_step(double sigma_star);

/// S* = d/dsigma (E eps_p') at sigma*, central differences, internal state frozen.
double compute_s_star(const ViscoplasticLaw& law, const MaterialParams& params,
                      const DesiredState& desired, const InternalState& state, double fd_step);

inline double compute_s_star(const ViscoplasticLaw& law, const MaterialParams& params,
                             const DesiredState& desired, const InternalState& state = {}) {
  return compute_s_star(law, params, desired, state, default_fd_step(desired.sigma_star()));
}

}  // namespace formctl
