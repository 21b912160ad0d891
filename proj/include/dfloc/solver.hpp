#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dfloc/geometry.hpp"

namespace dfloc {

enum class LossKind { kNone, kCauchy };

struct RobustLoss {
  LossKind kind = LossKind::kCauchy;
  double scale = 0.1;  ///< Cauchy scale c, meters

  static RobustLoss None() { return {LossKind::kNone, 1.0}; }
  static RobustLoss Cauchy(double scale = 0.1) { return {LossKind::kCauchy, scale}; }

  void validate() const;
};

/// rho(s) and d rho / d s for a squared residual s.
struct LossValue {
  double rho = 0.0;
  double drho_ds = 1.0;
};

/// rho = c^2 log(1 + s / c^2), drho/ds = 1 / (1 + s / c^2).
LossValue cauchy_rho(double s, double scale);
LossValue evaluate_loss(const RobustLoss& loss, double s);
/// drho/ds alone; the IRLS weight.
double loss_weight(const RobustLoss& loss, double s);

struct SolverOptions {
  int max_iterations = 50;
  double param_tolerance = 1e-6;
  double cost_tolerance = 1e-8;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 0.5;

  void validate() const;
};

enum class Termination { kParamTol, kCostTol, kMaxIter, kNumericalFailure };

const char* to_string(Termination t);

struct SolveReport {
  Pose4 final_params;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  Termination termination = Termination::kMaxIter;
  std::vector<double> accepted_costs;  ///< robust cost after each accepted step, initial first
};

using Residuals = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, 4>;

/// Anything that fills residuals r_i and 1x4 Jacobian rows at a pose,
/// columns ordered [tx, ty, tz, yaw].
template <typename P>
concept ResidualProvider = requires(const P& p, const Pose4& x, Residuals& r, Jacobian& j) {
  p.evaluate(x, r, j);
};

struct NormalEquations {
  Eigen::Matrix4d hessian = Eigen::Matrix4d::Zero();  ///< sum w J^T J
  Eigen::Vector4d gradient = Eigen::Vector4d::Zero(); ///< sum w J^T r
};

/// Reweighted normal equations with w_i = drho/ds at r_i^2. The gradient of
/// the robust cost with respect to the parameters is 2 * gradient.
NormalEquations build_normal_equations(const Residuals& r, const Jacobian& j,
                                       const RobustLoss& loss);

double robust_cost(const Residuals& r, const RobustLoss& loss);

/// Solves the damped system (H + lambda * D) delta = -g with D = diag(H)
/// floored away from zero. Returns false when the solve is not finite.
bool damped_step(const NormalEquations& ne, double lambda, Eigen::Vector4d& delta);

/// Levenberg-Marquardt over the 4-DOF pose with iteratively reweighted robust
/// loss. Only steps that lower the robust cost are accepted.
template <ResidualProvider P>
SolveReport solve_lm(const P& provider, const Pose4& x0, const RobustLoss& loss,
                     const SolverOptions& opts) {
  loss.validate();
  opts.validate();
  constexpr double kMaxDamping = 1e32;

  SolveReport report;
  Pose4 x = x0;
  Residuals r;
  Jacobian jac;
  provider.evaluate(x, r, jac);
  double cost = robust_cost(r, loss);
  report.initial_cost = cost;
  report.final_params = x;
  report.final_cost = cost;
  if (!std::isfinite(cost) || !jac.allFinite()) {
    report.termination = Termination::kNumericalFailure;
    return report;
  }
  report.accepted_costs.push_back(cost);

  double lambda = opts.initial_damping;
  Residuals r_new;
  Jacobian jac_new;
  NormalEquations ne = build_normal_equations(r, jac, loss);
  bool stopped = false;
  while (report.iterations < opts.max_iterations) {
    ++report.iterations;
    Eigen::Vector4d delta;
    while (!damped_step(ne, lambda, delta)) {
      lambda *= opts.damping_up;
      if (lambda > kMaxDamping) {
        report.termination = Termination::kNumericalFailure;
        return report;
      }
    }
    // A step below tolerance is still taken when it helps, then ends the solve.
    const bool last = delta.norm() < opts.param_tolerance;
    const Pose4 candidate = Pose4::FromParams(x.params() + delta);
    provider.evaluate(candidate, r_new, jac_new);
    const double cost_new = robust_cost(r_new, loss);
    const bool better = std::isfinite(cost_new) && jac_new.allFinite() && cost_new < cost;
    if (last) {
      if (better) {
        x = candidate;
        cost = cost_new;
        report.accepted_costs.push_back(cost);
      }
      report.termination = Termination::kParamTol;
      stopped = true;
      break;
    }
    if (better) {
      const double rel = (cost - cost_new) / std::max(cost, std::numeric_limits<double>::min());
      x = candidate;
      cost = cost_new;
      r.swap(r_new);
      jac.swap(jac_new);
      ne = build_normal_equations(r, jac, loss);
      report.accepted_costs.push_back(cost);
      lambda = std::max(lambda * opts.damping_down, 1e-15);
      if (rel < opts.cost_tolerance) {
        report.termination = Termination::kCostTol;
        stopped = true;
        break;
      }
    } else {
      lambda *= opts.damping_up;
      if (lambda > kMaxDamping) {
        report.termination = Termination::kNumericalFailure;
        report.final_params = x;
        report.final_cost = cost;
        return report;
      }
    }
  }
  if (!stopped) report.termination = Termination::kMaxIter;
  report.converged = stopped;
  report.final_params = x;
  report.final_cost = cost;
  return report;
}

}  // namespace dfloc
