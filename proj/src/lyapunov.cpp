#include "formctl/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "formctl/error.hpp"

namespace formctl {

WeightProfile::WeightProfile(double mu_hat, double wave_speed, double length)
    : mu_hat_(mu_hat), wave_speed_(wave_speed), length_(length) {
  if (!(std::isfinite(mu_hat) && mu_hat >= 0.0)) {
    throw InvalidParameter("weights: mu_hat must be >= 0");
  }
  if (!(wave_speed > 0.0 && length > 0.0)) {
    throw InvalidParameter("weights: wave speed and length must be > 0");
  }
}

double WeightProfile::w_plus(double x) const { return std::exp(-(mu_hat_ / wave_speed_) * x); }

double WeightProfile::w_minus(double x) const {
  return std::exp(-(mu_hat_ / wave_speed_) * (length_ - x));
}

double WeightProfile::min_weight() const { return std::exp(-(mu_hat_ / wave_speed_) * length_); }

double weighted_source_eigenvalue(const HyperbolicSystem& sys, const WeightProfile& weights,
                                  double x) {
  // W B + B^T W with W = diag(a, b) and B = (S*/2) ones is (S*/2) [2a, a+b; a+b, 2b].
  const double a = weights.w_plus(x);
  const double b = weights.w_minus(x);
  const double h = 0.5 * sys.s_star();
  return min_symmetric_eigenvalue(2.0 * h * a, h * (a + b), 2.0 * h * b);
}

namespace {

double golden_section_min(auto&& f, double lo, double hi, int iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int k = 0; k < iterations; ++k) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return std::min(fc, fd);
}

}  // namespace

double decay_rate(const HyperbolicSystem& sys, double length, double mu_hat, int n_grid) {
  if (!(std::isfinite(mu_hat) && mu_hat >= 0.0)) {
    throw InvalidParameter("decay_rate: mu_hat must be >= 0");
  }
  if (n_grid < 2) throw InvalidParameter("decay_rate: n_grid must be >= 2");

  const WeightProfile weights(mu_hat, sys.wave_speed(), length);
  auto eig = [&](double x) { return weighted_source_eigenvalue(sys, weights, x); };

  const double h = length / (n_grid - 1);
  int best = 0;
  double best_value = eig(0.0);
  for (int i = 1; i < n_grid; ++i) {
    const double v = eig(i == n_grid - 1 ? length : i * h);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double lo = std::max(0.0, (best - 1) * h);
  const double hi = std::min(length, (best + 1) * h);
  const double refined = golden_section_min(eig, lo, hi, 60);
  return mu_hat + std::min(best_value, refined);
}

double decay_rate_lower_bound(const HyperbolicSystem& sys, double mu_hat) {
  return mu_hat - 2.0 * std::abs(sys.s_star());
}

GainPair synthesize_gains(const HyperbolicSystem& sys, const MaterialParams& params) {
  const double k = std::exp(-(params.length() / sys.wave_speed()) * std::abs(sys.s_star()));
  return {k, k};
}

DecayCertificate check_conditions(const HyperbolicSystem& sys, const MaterialParams& params,
                                  const GainPair& gains, double mu_hat, int n_grid) {
  DecayCertificate cert;
  cert.mu_hat = mu_hat;
  cert.gains = gains;
  cert.mu = decay_rate(sys, params.length(), mu_hat, n_grid);
  cert.dissipativity = std::exp(mu_hat * params.length() / (2.0 * sys.wave_speed())) *
                       std::max(std::abs(gains.k0), std::abs(gains.k1));
  cert.condition1_ok = cert.mu > 0.0;
  cert.condition2_ok = cert.dissipativity < 1.0;
  return cert;
}

DecayCertificate search_mu_hat(const HyperbolicSystem& sys, const MaterialParams& params,
                               const GainPair& gains, double mu_hat_max, int n_scan,
                               int n_grid) {
  if (!(std::isfinite(mu_hat_max) && mu_hat_max > 0.0)) {
    throw InvalidParameter("search_mu_hat: mu_hat_max must be > 0");
  }
  if (n_scan < 2) throw InvalidParameter("search_mu_hat: n_scan must be >= 2");

  // Failed-condition count first, then violation size.
  auto violation = [&](const DecayCertificate& c) {
    const int failed = int(!c.condition1_ok) + int(!c.condition2_ok);
    const double scale = std::abs(sys.s_star()) + c.mu_hat;
    const double size = std::max(0.0, -c.mu) / scale + std::max(0.0, c.dissipativity - 1.0);
    return std::make_tuple(failed, size);
  };

  bool have_valid = false;
  DecayCertificate best_valid;
  DecayCertificate least_bad;
  auto least_bad_score = std::make_tuple(3, std::numeric_limits<double>::infinity());

  for (int k = 1; k <= n_scan; ++k) {
    const double mu_hat = mu_hat_max * k / n_scan;
    const DecayCertificate cert = check_conditions(sys, params, gains, mu_hat, n_grid);
    if (cert.valid()) {
      if (!have_valid || cert.mu > best_valid.mu) best_valid = cert;
      have_valid = true;
    } else if (!have_valid) {
      const auto score = violation(cert);
      if (score < least_bad_score) {
        least_bad_score = score;
        least_bad = cert;
      }
    }
  }
  return have_valid ? best_valid : least_bad;
}

double default_mu_hat_max(const HyperbolicSystem& sys, const MaterialParams& params,
                          const GainPair& gains) {
  const double k = std::max(std::abs(gains.k0), std::abs(gains.k1));
  if (k > 0.0 && k < 1.0) {
    return 2.0 * sys.wave_speed() / params.length() * std::log(1.0 / k);
  }
  return 4.0 * std::abs(sys.s_star()) + 1.0;
}

CellWeights cell_weights(const WeightProfile& weights, const Grid& grid) {
  CellWeights out;
  out.dx = grid.dx();
  for (int i = 0; i < grid.n_cells(); ++i) {
    out.plus.push_back(weights.w_plus(grid.center(i)));
    out.minus.push_back(weights.w_minus(grid.center(i)));
  }
  return out;
}

double lyapunov_functional(const CellWeights& weights, const RiemannFields& fields) {
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.plus.size(); ++i) {
    sum += weights.plus[i] * fields.plus[i] * fields.plus[i] +
           weights.minus[i] * fields.minus[i] * fields.minus[i];
  }
  return sum * weights.dx;
}

double lyapunov_functional(const WeightProfile& weights, const Grid& grid,
                           const RiemannFields& fields) {
  return lyapunov_functional(cell_weights(weights, grid), fields);
}

double grid_norm_squared(const Grid& grid, const PerturbationFields& u) {
  double sum = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    sum += u.delta_v[i] * u.delta_v[i] + u.delta_sigma[i] * u.delta_sigma[i];
  }
  return sum * grid.dx();
}

double norm_equivalence_constant(const HyperbolicSystem& sys, const WeightProfile& weights) {
  const auto sv = singular_values(sys.t_inv());
  const double lower = weights.min_weight() * sv[1] * sv[1];
  const double upper = sv[0] * sv[0];
  return std::min(lower, 1.0 / upper);
}

}  // namespace formctl
