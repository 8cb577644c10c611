#include "formctl/control.hpp"

#include <cmath>

#include "formctl/error.hpp"

namespace formctl {

std::string_view to_string(LawVariant v) {
  return v == LawVariant::kRiemannGain ? "riemann-gain" : "coth-closed-form";
}

std::string_view to_string(BoundaryMode m) {
  return m == BoundaryMode::kFeedback ? "feedback" : "wall";
}

double force_to_stress(double force, double area) {
  if (!(area > 0.0)) throw InvalidParameter("force_to_stress: area must be > 0");
  return force / area;
}

BoundarySample BoundarySample::from_forces(double t, double force_left, double force_right,
                                           double area) {
  return {t, force_to_stress(force_left, area), force_to_stress(force_right, area)};
}

FeedbackController::FeedbackController(MaterialParams params, DesiredState desired,
                                       GainPair gains, double s_star, LawVariant variant,
                                       BoundaryMode left, BoundaryMode right)
    : params_(params),
      desired_(std::move(desired)),
      gains_(gains),
      s_star_(s_star),
      variant_(variant),
      left_(left),
      right_(right) {
  if (!std::isfinite(gains.k0) || !std::isfinite(gains.k1) || !std::isfinite(s_star)) {
    throw InvalidParameter("controller: gains and S* must be finite");
  }
  if (gains.k0 == -1.0 || gains.k1 == -1.0) {
    throw InvalidParameter("controller: K = -1 has no velocity-law form");
  }
}

namespace {

double coth_coefficient(const FeedbackController& c) {
  const double sqrt_e = c.params().wave_speed();
  const double a = c.params().length() / sqrt_e * std::abs(c.s_star());
  return 1.0 / (sqrt_e * std::tanh(a));
}

}  // namespace

double FeedbackController::left_coefficient() const {
  if (variant_ == LawVariant::kCothClosedForm) return coth_coefficient(*this);
  const double k = gains_.k0;
  return -(1.0 - k) / (params_.wave_speed() * (1.0 + k));
}

double FeedbackController::right_coefficient() const {
  if (variant_ == LawVariant::kCothClosedForm) return coth_coefficient(*this);
  const double k = gains_.k1;
  return (k - 1.0) / (params_.wave_speed() + k * params_.wave_speed());
}

double feedback_velocity_left(const FeedbackController& ctrl, double sigma_measured) {
  const double dsigma = sigma_measured - ctrl.desired().sigma_star();
  return ctrl.desired().inward_speed_left() + ctrl.left_coefficient() * dsigma;
}

double feedback_velocity_right(const FeedbackController& ctrl, double sigma_measured) {
  const double dsigma = sigma_measured - ctrl.desired().sigma_star();
  return ctrl.desired().inward_speed_right() + ctrl.right_coefficient() * dsigma;
}

BoundaryCommand controller_step(const FeedbackController& ctrl, const BoundarySample& sample) {
  BoundaryCommand cmd;
  cmd.speed_left = ctrl.left_mode() == BoundaryMode::kFeedback
                       ? feedback_velocity_left(ctrl, sample.sigma_left)
                       : 0.0;
  cmd.speed_right = ctrl.right_mode() == BoundaryMode::kFeedback
                        ? feedback_velocity_right(ctrl, sample.sigma_right)
                        : 0.0;
  return cmd;
}

GainPair equivalent_reflection_gains(const FeedbackController& ctrl) {
  // With speed = g dsigma and U = T R, both ends reduce to K = (1 + g sqrt E) / (1 - g sqrt E).
  const double sqrt_e = ctrl.params().wave_speed();
  auto reflection = [&](BoundaryMode mode, double g) {
    if (mode == BoundaryMode::kWall) return 1.0;
    const double denom = 1.0 - g * sqrt_e;
    if (denom == 0.0 || !std::isfinite(g)) {
      throw InvalidParameter("boundary law has no Riemann reflection form");
    }
    return (1.0 + g * sqrt_e) / denom;
  };
  return {reflection(ctrl.left_mode(), ctrl.left_coefficient()),
          reflection(ctrl.right_mode(), ctrl.right_coefficient())};
}

}  // namespace formctl
