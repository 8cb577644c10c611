#pragma once

#include "formctl/grid.hpp"
#include "formctl/hyperbolics.hpp"
#include "formctl/material.hpp"

namespace formctl {

/// Exponential weights of the Lyapunov functional:
///   w+(x) = exp(-(mu_hat / sqrt E) x),  w-(x) = exp(-(mu_hat / sqrt E) (L - x)).
class WeightProfile {
 public:
  WeightProfile(double mu_hat, double wave_speed, double length);

  double mu_hat() const noexcept { return mu_hat_; }
  double length() const noexcept { return length_; }
  double w_plus(double x) const;
  double w_minus(double x) const;
  /// Smallest value either weight takes on [0, L] (the largest is 1 for mu_hat >= 0).
  double min_weight() const;

 private:
  double mu_hat_;
  double wave_speed_;
  double length_;
};

/// Boundary reflection gains: R+(t,0) = K0 R-(t,0), R-(t,L) = K1 R+(t,L).
struct GainPair {
  double k0 = 0.0;
  double k1 = 0.0;
};

struct DecayCertificate {
  double mu_hat = 0.0;
  double mu = 0.0;  ///< certified rate mu(mu_hat)
  GainPair gains;
  double dissipativity = 0.0;  ///< exp(mu_hat L / (2 sqrt E)) max(|K0|, |K1|)
  bool condition1_ok = false;  ///< mu > 0
  bool condition2_ok = false;  ///< dissipativity < 1

  bool valid() const noexcept { return condition1_ok && condition2_ok; }
};

inline constexpr int kDefaultDecayGrid = 1025;

/// mu(mu_hat) = mu_hat + min_x lambda_min[W(x) B + B^T W(x)].
///
/// lambda_min is the signed smallest eigenvalue of the symmetric 2x2 matrix.
/// The minimum over x is taken on n_grid uniform points (endpoints included)
/// and refined by golden-section search around the best sample.
double decay_rate(const HyperbolicSystem& sys, double length, double mu_hat,
                  int n_grid = kDefaultDecayGrid);

/// lambda_min[W(x) B + B^T W(x)] at a single point.
double weighted_source_eigenvalue(const HyperbolicSystem& sys, const WeightProfile& weights,
                                  double x);

/// mu_hat - 2 |S*|
double decay_rate_lower_bound(const HyperbolicSystem& sys, double mu_hat);

/// K0 = K1 = exp(-(L / sqrt E) |S*|)
GainPair synthesize_gains(const HyperbolicSystem& sys, const MaterialParams& params);

DecayCertificate check_conditions(const HyperbolicSystem& sys, const MaterialParams& params,
                                  const GainPair& gains, double mu_hat,
                                  int n_grid = kDefaultDecayGrid);

/// Scans mu_hat_k = k mu_hat_max / n_scan, k = 1..n_scan, and returns the valid
/// certificate with the largest mu. If none is valid, the least-violating one
/// is returned (still flagged invalid).
DecayCertificate search_mu_hat(const HyperbolicSystem& sys, const MaterialParams& params,
                               const GainPair& gains, double mu_hat_max, int n_scan,
                               int n_grid = 257);

/// Upper end of the useful mu_hat range: the dissipativity bound
/// (2 sqrt E / L) ln(1 / max|K|) when the gains are contractive, else 4|S*| + 1.
double default_mu_hat_max(const HyperbolicSystem& sys, const MaterialParams& params,
                          const GainPair& gains);

/// Midpoint rule for int_0^L w+ R+^2 + w- R-^2 dx on cell centers.
double lyapunov_functional(const WeightProfile& weights, const Grid& grid,
                           const RiemannFields& fields);

/// Weights sampled at cell centers, for repeated evaluation on one grid.
struct CellWeights {
  std::vector<double> plus;
  std::vector<double> minus;
  double dx = 0.0;
};

CellWeights cell_weights(const WeightProfile& weights, const Grid& grid);
double lyapunov_functional(const CellWeights& weights, const RiemannFields& fields);

/// sum_i (dv_i^2 + dsigma_i^2) dx
double grid_norm_squared(const Grid& grid, const PerturbationFields& u);

/// C with C |U|^2 <= L <= (1/C) |U|^2 for R = T^{-1} U, built from the singular
/// values of T^{-1} and the weight range [min_weight, 1].
double norm_equivalence_constant(const HyperbolicSystem& sys, const WeightProfile& weights);

}  // namespace formctl
