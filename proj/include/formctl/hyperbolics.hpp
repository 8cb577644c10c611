#pragma once

#include <array>

namespace formctl {

/// Row-major 2x2 matrix.
struct Mat2 {
  std::array<double, 4> m{};

  double operator()(int row, int col) const { return m[2 * row + col]; }
  double& operator()(int row, int col) { return m[2 * row + col]; }

  static Mat2 identity() { return {{1.0, 0.0, 0.0, 1.0}}; }
  Mat2 transposed() const { return {{m[0], m[2], m[1], m[3]}}; }
  double determinant() const { return m[0] * m[3] - m[1] * m[2]; }
  /// Largest absolute entry.
  double max_abs() const;
};

Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat2 operator*(double s, const Mat2& a);

/// Singular values (largest first).
std::array<double, 2> singular_values(const Mat2& a);

/// Smallest eigenvalue of the symmetric matrix [p q; q r].
double min_symmetric_eigenvalue(double p, double q, double r);

/// Physical perturbation U = (dv, dsigma).
struct PerturbationState {
  double delta_v = 0.0;
  double delta_sigma = 0.0;
};

/// Characteristic variables R = T^{-1} U. r_plus travels towards +x.
struct RiemannState {
  double r_plus = 0.0;
  double r_minus = 0.0;
};

/// The linearized 2x2 system dU/dt + A dU/dx = -S U in closed form:
///   A = [0 -1; -E 0], S = diag(0, S*), T = [-1 1; sqrt E sqrt E],
///   Lambda = T^{-1} A T = diag(+sqrt E, -sqrt E), B = T^{-1} S T = (S*/2) [1 1; 1 1].
class HyperbolicSystem {
 public:
  double elastic_modulus() const noexcept { return elastic_modulus_; }
  double s_star() const noexcept { return s_star_; }
  double wave_speed() const noexcept { return wave_speed_; }

  const Mat2& a() const noexcept { return a_; }
  const Mat2& s() const noexcept { return s_; }
  const Mat2& t() const noexcept { return t_; }
  const Mat2& t_inv() const noexcept { return t_inv_; }
  const Mat2& lambda() const noexcept { return lambda_; }
  const Mat2& b() const noexcept { return b_; }

  /// Transport speed of r_plus (+sqrt E) and r_minus (-sqrt E).
  double lambda_plus() const noexcept { return lambda_(0, 0); }
  double lambda_minus() const noexcept { return lambda_(1, 1); }

  /// exp(-B dt); B has eigenvalues {0, S*} so this is I - (1 - e^{-S* dt})/2 * ones.
  Mat2 source_propagator(double dt) const;

 private:
  friend HyperbolicSystem build_system(double elastic_modulus, double s_star);

  double elastic_modulus_ = 1.0;
  double s_star_ = 0.0;
  double wave_speed_ = 1.0;
  Mat2 a_, s_, t_, t_inv_, lambda_, b_;
};

HyperbolicSystem build_system(double elastic_modulus, double s_star);

RiemannState to_riemann(const HyperbolicSystem& sys, const PerturbationState& u);
PerturbationState to_physical(const HyperbolicSystem& sys, const RiemannState& r);

}  // namespace formctl
