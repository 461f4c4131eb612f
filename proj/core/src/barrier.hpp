#pragma once

// Dense log-barrier interior point method for small smooth convex programs
//
//   minimize f(v)  subject to  c_k(v) <= 0,  k = 0..K-1,
//
// followed by an optional Newton polish on the KKT equations of the active
// set identified at the end of the barrier path.

#include <cstddef>

#include <Eigen/Dense>

namespace raopt::detail {

class ConvexProgram {
 public:
  virtual ~ConvexProgram() = default;

  virtual std::size_t num_vars() const = 0;
  virtual std::size_t num_constraints() const = 0;

  virtual double objective(const Eigen::VectorXd& v) const = 0;
  virtual void objective_gradient(const Eigen::VectorXd& v, Eigen::VectorXd& grad) const = 0;
  /// H += weight * Hessian of f. Linear objectives keep the default.
  virtual void add_objective_hessian(const Eigen::VectorXd& /*v*/, double /*weight*/,
                                     Eigen::MatrixXd& /*hess*/) const {}

  /// Evaluates all c_k. Returns false when v is outside the domain where the
  /// functions are defined (the values are then meaningless).
  virtual bool constraints(const Eigen::VectorXd& v, Eigen::VectorXd& values) const = 0;
  virtual void constraint_jacobian(const Eigen::VectorXd& v, Eigen::MatrixXd& jac) const = 0;
  /// H += sum_k weights[k] * Hessian of c_k.
  virtual void add_constraint_hessian(const Eigen::VectorXd& v, const Eigen::VectorXd& weights,
                                      Eigen::MatrixXd& hess) const = 0;
};

struct BarrierOptions {
  double initial_t = 1.0;
  double t_growth = 10.0;
  double gap_tolerance = 1e-6;      // stop when K / t falls below this
  double newton_tolerance = 1e-10;  // on half the squared Newton decrement
  int max_newton_per_stage = 200;
  int max_total_newton = 20000;
  bool polish = true;
  double polish_tolerance = 1e-12;
};

struct BarrierResult {
  Eigen::VectorXd v;
  Eigen::VectorXd multipliers;  // one per constraint, >= 0
  int iterations = 0;
  double gap = 0.0;        // K / t at the last barrier stage, 0 after a successful polish
  double stationarity = 0.0;  // max |grad f + J^T y|
  bool converged = false;
  bool polished = false;
};

/// v0 must be strictly feasible (all c_k(v0) < 0, inside the domain).
BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& v0,
                            const BarrierOptions& options);

}  // namespace raopt::detail
