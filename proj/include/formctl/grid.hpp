#pragma once

#include <vector>

namespace formctl {

/// Uniform cell-centered grid on [0, L].
class Grid {
 public:
  Grid(double length, int n_cells);

  int n_cells() const noexcept { return n_cells_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / n_cells_; }
  double center(int i) const noexcept { return (i + 0.5) * dx(); }

 private:
  double length_;
  int n_cells_;
};

/// Riemann invariants per cell.
struct RiemannFields {
  std::vector<double> plus;
  std::vector<double> minus;

  static RiemannFields zeros(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
  int size() const noexcept { return static_cast<int>(plus.size()); }
};

/// Physical perturbation (dv, dsigma) per cell.
struct PerturbationFields {
  std::vector<double> delta_v;
  std::vector<double> delta_sigma;

  int size() const noexcept { return static_cast<int>(delta_v.size()); }
};

}  // namespace formctl
