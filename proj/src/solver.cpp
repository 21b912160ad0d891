#include "dfloc/solver.hpp"

#include <string>

namespace dfloc {

void RobustLoss::validate() const {
  if (kind == LossKind::kCauchy && !(scale > 0.0 && std::isfinite(scale))) {
    throw Error(ErrorCode::kInvalidValue, "Cauchy loss scale must be > 0");
  }
}

LossValue cauchy_rho(double s, double scale) {
  const double c2 = scale * scale;
  const double u = s / c2;
  return {c2 * std::log1p(u), 1.0 / (1.0 + u)};
}

LossValue evaluate_loss(const RobustLoss& loss, double s) {
  if (loss.kind == LossKind::kCauchy) return cauchy_rho(s, loss.scale);
  return {s, 1.0};
}

double loss_weight(const RobustLoss& loss, double s) {
  if (loss.kind == LossKind::kCauchy) return 1.0 / (1.0 + s / (loss.scale * loss.scale));
  return 1.0;
}

void SolverOptions::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidValue, std::string("solver option ") + what);
  };
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(param_tolerance > 0.0, "param_tolerance must be > 0");
  require(cost_tolerance > 0.0, "cost_tolerance must be > 0");
  require(initial_damping > 0.0, "initial_damping must be > 0");
  require(damping_up > 1.0, "damping_up must be > 1");
  require(damping_down > 0.0 && damping_down < 1.0, "damping_down must be in (0, 1)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kParamTol: return "param_tol";
    case Termination::kCostTol: return "cost_tol";
    case Termination::kMaxIter: return "max_iter";
    case Termination::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

NormalEquations build_normal_equations(const Residuals& r, const Jacobian& j,
                                       const RobustLoss& loss) {
  NormalEquations ne;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double w = loss_weight(loss, r[i] * r[i]);
    const Eigen::Matrix<double, 1, 4> row = j.row(i);
    ne.hessian.noalias() += w * row.transpose() * row;
    ne.gradient.noalias() += (w * r[i]) * row.transpose();
  }
  return ne;
}

double robust_cost(const Residuals& r, const RobustLoss& loss) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) cost += evaluate_loss(loss, r[i] * r[i]).rho;
  return cost;
}

bool damped_step(const NormalEquations& ne, double lambda, Eigen::Vector4d& delta) {
  const double floor = 1e-12 * std::max(1.0, ne.hessian.diagonal().maxCoeff());
  Eigen::Matrix4d a = ne.hessian;
  for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(ne.hessian(k, k), floor);
  const Eigen::LDLT<Eigen::Matrix4d> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  delta = ldlt.solve(-ne.gradient);
  return delta.allFinite();
}

}  // namespace dfloc
