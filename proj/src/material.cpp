#include "formctl/material.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "formctl/error.hpp"

namespace formctl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

MaterialParams::MaterialParams(double elastic_modulus, double length, double area)
    : elastic_modulus_(elastic_modulus), length_(length), area_(area) {
  require(finite(elastic_modulus) && elastic_modulus > 0.0, "elastic modulus must be > 0");
  require(finite(length) && length > 0.0, "domain length must be > 0");
  require(finite(area) && area > 0.0, "cross-section area must be > 0");
}

double MaterialParams::wave_speed() const noexcept {
  return std::sqrt(elastic_modulus_ / density());
}

DesiredState::DesiredState(double sigma_star, double length,
                           std::function<double(double)> velocity)
    : sigma_star_(sigma_star), length_(length), velocity_(std::move(velocity)) {
  require(finite(sigma_star), "desired stress must be finite");
  require(finite(length) && length > 0.0, "desired state length must be > 0");
  require(static_cast<bool>(velocity_), "desired velocity profile is empty");
  constexpr int kSamples = 64;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = length * i / kSamples;
    require(finite(velocity_(x)), "desired velocity is not finite at x = " + std::to_string(x));
  }
}

DesiredState DesiredState::from_inward_speeds(double sigma_star, double length,
                                              double speed_left, double speed_right) {
  require(finite(speed_left) && finite(speed_right), "boundary speeds must be finite");
  const double v0 = -speed_left;
  const double slope = (speed_right + speed_left) / length;
  return DesiredState(sigma_star, length, [v0, slope](double x) { return v0 + slope * x; });
}

double NortonLaw::plastic_strain_rate(double sigma) const {
  if (sigma <= 0.0) return 0.0;
  return std::pow(sigma / sigma_ref, exponent) / t_ref;
}

double HybridLaw::taylor_hardening(double dislocation_density) const {
  return taylor.alpha * taylor.taylor_factor * taylor.shear_modulus * taylor.burgers_vector *
         std::sqrt(std::max(dislocation_density, 0.0));
}

double HybridLaw::lamellar_stress(const InternalState& state) const {
  return taylor.sigma0_lamellar + taylor_hardening(state.dislocation_density);
}

double HybridLaw::globular_stress(const InternalState& state) const {
  return taylor.sigma0_globular + taylor_hardening(state.dislocation_density);
}

double HybridLaw::mixture_stress(const InternalState& state) const {
  const double x = state.globular_fraction;
  return x * globular_stress(state) + (1.0 - x) * lamellar_stress(state);
}

double HybridLaw::plastic_strain_rate(double sigma, const InternalState& state) const {
  const double overstress = sigma - mixture_stress(state);
  if (overstress <= 0.0) return 0.0;
  return std::pow(overstress / taylor.drag_stress, taylor.rate_exponent) / taylor.t_ref;
}

InternalRates HybridLaw::rates_for_plastic_rate(double plastic_rate,
                                                const InternalState& state) const {
  const double rate = std::abs(plastic_rate);
  InternalRates out;
  if (rate == 0.0) return out;

  const double rho = std::max(state.dislocation_density, 0.0);
  out.dislocation_density =
      (kocks_mecking.generation * std::sqrt(rho) - kocks_mecking.annihilation * rho) * rate;

  // dX/deps of X = 1 - exp(-k eps^m), evaluated at the accumulated strain.
  const double eps = std::max(state.eq_plastic_strain, 0.0);
  const double k = avrami.rate;
  const double m = avrami.exponent;
  const double dx_deps = k * m * std::pow(eps, m - 1.0) * std::exp(-k * std::pow(eps, m));
  out.globular_fraction = dx_deps * rate;
  out.eq_plastic_strain = rate;
  return out;
}

double ViscoplasticLaw::plastic_strain_rate(double sigma, const InternalState& state) const {
  return std::visit(
      [&](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, ElasticLaw>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, NortonLaw>) {
          return law.plastic_strain_rate(sigma);
        } else {
          return law.plastic_strain_rate(sigma, state);
        }
      },
      law_);
}

InternalRates ViscoplasticLaw::internal_state_rate(double sigma,
                                                   const InternalState& state) const {
  if (const auto* hybrid = std::get_if<HybridLaw>(&law_)) {
    return hybrid->rates_for_plastic_rate(hybrid->plastic_strain_rate(sigma, state), state);
  }
  return {};
}

std::string_view ViscoplasticLaw::name() const {
  switch (law_.index()) {
    case 0: return "elastic";
    case 1: return "norton";
    default: return "hybrid";
  }
}

ViscoplasticLaw elastic_law() { return ViscoplasticLaw(ElasticLaw{}); }

ViscoplasticLaw norton_law(double sigma_ref, double exponent, double t_ref) {
  require(finite(sigma_ref) && sigma_ref > 0.0, "norton: sigma_ref must be > 0");
  require(finite(exponent) && exponent >= 1.0, "norton: exponent must be >= 1");
  require(finite(t_ref) && t_ref > 0.0, "norton: t_ref must be > 0");
  return ViscoplasticLaw(NortonLaw{sigma_ref, exponent, t_ref});
}

ViscoplasticLaw hybrid_law(const KocksMeckingCoeffs& kocks_mecking, const AvramiCoeffs& avrami,
                           const TaylorCoeffs& taylor) {
  const double all[] = {kocks_mecking.generation, kocks_mecking.annihilation, avrami.rate,
                        avrami.exponent, taylor.sigma0_lamellar, taylor.sigma0_globular,
                        taylor.alpha, taylor.taylor_factor, taylor.shear_modulus,
                        taylor.burgers_vector, taylor.drag_stress, taylor.rate_exponent,
                        taylor.t_ref};
  for (double c : all) require(finite(c), "hybrid: coefficients must be finite");
  require(kocks_mecking.generation >= 0.0, "hybrid: generation coefficient must be >= 0");
  require(kocks_mecking.annihilation >= 0.0, "hybrid: annihilation coefficient must be >= 0");
  require(avrami.rate >= 0.0, "hybrid: Avrami rate must be >= 0");
  require(avrami.exponent >= 1.0, "hybrid: Avrami exponent must be >= 1");
  require(taylor.alpha >= 0.0 && taylor.taylor_factor >= 0.0 && taylor.shear_modulus >= 0.0 &&
              taylor.burgers_vector >= 0.0,
          "hybrid: Taylor coefficients must be >= 0");
  require(taylor.drag_stress > 0.0, "hybrid: drag stress must be > 0");
  require(taylor.rate_exponent >= 1.0, "hybrid: rate exponent must be >= 1");
  require(taylor.t_ref > 0.0, "hybrid: t_ref must be > 0");
  return ViscoplasticLaw(HybridLaw{kocks_mecking, avrami, taylor});
}

InternalState clamp_internal_state(InternalState state) {
  state.globular_fraction = std::clamp(state.globular_fraction, 0.0, 1.0);
  state.dislocation_density = std::max(state.dislocation_density, 0.0);
  state.eq_plastic_strain = std::max(state.eq_plastic_strain, 0.0);
  return state;
}

InternalState euler_step(const ViscoplasticLaw& law, double sigma, const InternalState& state,
                         double dt) {
  const InternalRates r = law.internal_state_rate(sigma, state);
  InternalState next = state;
  next.globular_fraction += dt * r.globular_fraction;
  next.dislocation_density += dt * r.dislocation_density;
  next.eq_plastic_strain += dt * r.eq_plastic_strain;
  return clamp_internal_state(next);
}

double default_fd_step(double sigma_star) { return std::max(1e-6 * std::abs(sigma_star), 1e-8); }

double compute_s_star(const ViscoplasticLaw& law, const MaterialParams& params,
                      const DesiredState& desired, const InternalState& state, double fd_step) {
  require(finite(fd_step) && fd_step > 0.0, "fd_step must be > 0");
  const double s = desired.sigma_star();
  const double up = law.plastic_strain_rate(s + fd_step, state);
  const double down = law.plastic_strain_rate(s - fd_step, state);
  const double result = params.elastic_modulus() * (up - down) / (2.0 * fd_step);
  if (!std::isfinite(result)) {
    throw NonFiniteError("S* is not finite: the plastic rate is singular near sigma* = " +
                         std::to_string(s));
  }
  return result;
}

}  // namespace formctl
