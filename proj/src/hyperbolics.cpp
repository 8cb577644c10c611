#include "formctl/hyperbolics.hpp"

#include <algorithm>
#include <cmath>

#include "formctl/error.hpp"

namespace formctl {

double Mat2::max_abs() const {
  double out = 0.0;
  for (double v : m) out = std::max(out, std::abs(v));
  return out;
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
  Mat2 c;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
  return c;
}

Mat2 operator+(const Mat2& a, const Mat2& b) {
  Mat2 c;
  for (int k = 0; k < 4; ++k) c.m[k] = a.m[k] + b.m[k];
  return c;
}

Mat2 operator-(const Mat2& a, const Mat2& b) {
  Mat2 c;
  for (int k = 0; k < 4; ++k) c.m[k] = a.m[k] - b.m[k];
  return c;
}

Mat2 operator*(double s, const Mat2& a) {
  Mat2 c;
  for (int k = 0; k < 4; ++k) c.m[k] = s * a.m[k];
  return c;
}

double min_symmetric_eigenvalue(double p, double q, double r) {
  return 0.5 * (p + r) - std::hypot(0.5 * (p - r), q);
}

std::array<double, 2> singular_values(const Mat2& a) {
  // Eigenvalues of a^T a, whose entries are [p q; q r].
  const double p = a(0, 0) * a(0, 0) + a(1, 0) * a(1, 0);
  const double q = a(0, 0) * a(0, 1) + a(1, 0) * a(1, 1);
  const double r = a(0, 1) * a(0, 1) + a(1, 1) * a(1, 1);
  const double mid = 0.5 * (p + r);
  const double rad = std::hypot(0.5 * (p - r), q);
  const double big = mid + rad;
  // det(a^T a) = det(a)^2 avoids cancellation in mid - rad.
  const double det = a.determinant();
  const double small = big > 0.0 ? det * det / big : 0.0;
  return {std::sqrt(big), std::sqrt(small)};
}

HyperbolicSystem build_system(double elastic_modulus, double s_star) {
  if (!(std::isfinite(elastic_modulus) && elastic_modulus > 0.0)) {
    throw InvalidParameter("build_system: E must be > 0");
  }
  if (!std::isfinite(s_star)) throw InvalidParameter("build_system: S* must be finite");

  const double c = std::sqrt(elastic_modulus);
  HyperbolicSystem sys;
  sys.elastic_modulus_ = elastic_modulus;
  sys.s_star_ = s_star;
  sys.wave_speed_ = c;
  sys.a_ = {{0.0, -1.0, -elastic_modulus, 0.0}};
  sys.s_ = {{0.0, 0.0, 0.0, s_star}};
  sys.t_ = {{-1.0, 1.0, c, c}};
  sys.t_inv_ = {{-0.5, 0.5 / c, 0.5, 0.5 / c}};
  sys.lambda_ = {{c, 0.0, 0.0, -c}};
  sys.b_ = {{0.5 * s_star, 0.5 * s_star, 0.5 * s_star, 0.5 * s_star}};
  return sys;
}

Mat2 HyperbolicSystem::source_propagator(double dt) const {
  const double beta = 0.5 * (-std::expm1(-s_star_ * dt));
  return {{1.0 - beta, -beta, -beta, 1.0 - beta}};
}

RiemannState to_riemann(const HyperbolicSystem& sys, const PerturbationState& u) {
  const Mat2& ti = sys.t_inv();
  return {ti(0, 0) * u.delta_v + ti(0, 1) * u.delta_sigma,
          ti(1, 0) * u.delta_v + ti(1, 1) * u.delta_sigma};
}

PerturbationState to_physical(const HyperbolicSystem& sys, const RiemannState& r) {
  const Mat2& t = sys.t();
  return {t(0, 0) * r.r_plus + t(0, 1) * r.r_minus, t(1, 0) * r.r_plus + t(1, 1) * r.r_minus};
}

}  // namespace formctl
