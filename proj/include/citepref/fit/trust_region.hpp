#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace citepref::fit {

/// Bound-constrained derivative-free minimization with quadratic interpolation models
/// inside a trust region (the BOBYQA family). Each iteration fits a full quadratic
/// through (n+1)(n+2)/2 points, minimizes it over the box intersected with a ball, and
/// swaps one interpolation point for the new trial point.
struct TrustRegionOptions {
  double rho_begin = 0.2;
  double rho_end = 1e-7;
  int max_evaluations = 5000;
};

struct TrustRegionResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
  double final_rho = 0.0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Requires lower[i] < upper[i] for every coordinate. x0 is clipped into the box.
/// Throws std::invalid_argument on inconsistent sizes, empty/degenerate bounds or bad
/// options.
TrustRegionResult minimize_bounded(const Objective& f, std::span<const double> x0, std::span<const double> lower,
                                   std::span<const double> upper, const TrustRegionOptions& options = {});

/// Minimizes g'd + d'Hd/2 subject to |d| <= radius and lo <= d <= hi (lo <= 0 <= hi).
/// Exact on the ball (More-Sorensen via eigendecomposition), then an active-set pass for
/// the box, compared against the projected Cauchy point. Exposed for testing.
Eigen::VectorXd trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& H, double radius,
                                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Unconstrained ball-only subproblem.
Eigen::VectorXd ball_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& H, double radius);

}  // namespace citepref::fit
