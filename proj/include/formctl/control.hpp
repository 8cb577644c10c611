#pragma once

#include <string_view>

#include "formctl/lyapunov.hpp"
#include "formctl/material.hpp"

namespace formctl {

enum class LawVariant {
  kRiemannGain,     ///< dv = -(1 - K)/(sqrt E (1 + K)) dsigma, from the Riemann reflection gains
  kCothClosedForm,  ///< dv = +(1/sqrt E) coth((L/sqrt E)|S*|) dsigma, as printed in closed form
};

enum class BoundaryMode {
  kFeedback,
  kWall,  ///< zero inward speed (mirror-symmetry plane or fixed die)
};

std::string_view to_string(LawVariant v);
std::string_view to_string(BoundaryMode m);

/// Stresses seen by the plant at the end of the previous step.
struct BoundarySample {
  double t = 0.0;
  double sigma_left = 0.0;
  double sigma_right = 0.0;

  static BoundarySample from_forces(double t, double force_left, double force_right, double area);
};

/// Inward boundary speeds (positive = pushing into the bar) for the next step.
struct BoundaryCommand {
  double speed_left = 0.0;
  double speed_right = 0.0;
};

/// sigma = F / A
double force_to_stress(double force, double area);

/// Boundary feedback in physical variables. Commands and desired speeds are inward
/// speeds: at x = 0 the model velocity is -speed, at x = L it is +speed.
class FeedbackController {
 public:
  FeedbackController(MaterialParams params, DesiredState desired, GainPair gains, double s_star,
                     LawVariant variant = LawVariant::kRiemannGain,
                     BoundaryMode left = BoundaryMode::kFeedback,
                     BoundaryMode right = BoundaryMode::kFeedback);

  const MaterialParams& params() const noexcept { return params_; }
  const DesiredState& desired() const noexcept { return desired_; }
  const GainPair& gains() const noexcept { return gains_; }
  double s_star() const noexcept { return s_star_; }
  LawVariant variant() const noexcept { return variant_; }
  BoundaryMode left_mode() const noexcept { return left_; }
  BoundaryMode right_mode() const noexcept { return right_; }

  /// d(command)/d(sigma) of the feedback law at each end (ignores boundary mode).
  double left_coefficient() const;
  double right_coefficient() const;

 private:
  MaterialParams params_;
  DesiredState desired_;
  GainPair gains_;
  double s_star_;
  LawVariant variant_;
  BoundaryMode left_;
  BoundaryMode right_;
};

double feedback_velocity_left(const FeedbackController& ctrl, double sigma_measured);
double feedback_velocity_right(const FeedbackController& ctrl, double sigma_measured);

/// Applies the feedback (or the wall condition) at both ends.
BoundaryCommand controller_step(const FeedbackController& ctrl, const BoundarySample& sample);

/// Riemann reflection gains equivalent to the controller's boundary laws when the
/// law is enforced at the boundary face. A wall gives K = 1; the riemann-gain law
/// gives back the controller's own gains.
GainPair equivalent_reflection_gains(const FeedbackController& ctrl);

}  // namespace formctl
