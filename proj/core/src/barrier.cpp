#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace raopt::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_feasible(const ConvexProgram& program, const Eigen::VectorXd& v,
                       Eigen::VectorXd& c) {
  if (!v.allFinite()) return false;
  if (!program.constraints(v, c)) return false;
  return c.allFinite() && (c.array() < 0.0).all();
}

double barrier_value(const ConvexProgram& program, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& c, double t) {
  return t * program.objective(v) - (-c.array()).log().sum();
}

/// Solves H d = -g for a symmetric positive semidefinite H, regularizing if
/// the Cholesky factorization fails.
Eigen::VectorXd newton_direction(Eigen::MatrixXd hess, const Eigen::VectorXd& grad) {
  double shift = 0.0;
  const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(-grad);
      if (d.allFinite()) return d;
    }
    const double next = shift == 0.0 ? 1e-12 * scale : shift * 10.0;
    hess.diagonal().array() += next - shift;
    shift = next;
  }
  return Eigen::VectorXd::Zero(grad.size());
}

double stationarity(const ConvexProgram& program, const Eigen::VectorXd& v,
                    const Eigen::VectorXd& y) {
  Eigen::VectorXd grad(program.num_vars());
  program.objective_gradient(v, grad);
  Eigen::MatrixXd jac(program.num_constraints(), program.num_vars());
  program.constraint_jacobian(v, jac);
  return (grad + jac.transpose() * y).cwiseAbs().maxCoeff();
}

/// Newton's method on the KKT equations restricted to `active`. Returns true
/// and overwrites (v, y) only when the solution is a valid KKT point.
bool polish(const ConvexProgram& program, const std::vector<int>& active, Eigen::VectorXd& v,
            Eigen::VectorXd& y, double tolerance) {
  const auto n = static_cast<Eigen::Index>(program.num_vars());
  const auto k_total = static_cast<Eigen::Index>(program.num_constraints());
  const auto na = static_cast<Eigen::Index>(active.size());

  Eigen::VectorXd x = v;
  Eigen::VectorXd ya(na);
  for (Eigen::Index a = 0; a < na; ++a) ya[a] = y[active[a]];

  Eigen::VectorXd c(k_total), grad(n), full_y(k_total);
  Eigen::MatrixXd jac(k_total, n);
  double best = kInf;
  for (int iter = 0; iter < 50; ++iter) {
    if (!program.constraints(x, c) || !c.allFinite()) return false;
    program.objective_gradient(x, grad);
    program.constraint_jacobian(x, jac);
    full_y.setZero();
    for (Eigen::Index a = 0; a < na; ++a) full_y[active[a]] = ya[a];

    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = grad + jac.transpose() * full_y;
    for (Eigen::Index a = 0; a < na; ++a) rhs[n + a] = c[active[a]];
    const double residual = rhs.cwiseAbs().maxCoeff();
    if (residual <= tolerance) break;
    if (iter > 5 && residual >= 0.5 * best) break;  // stalled at rounding level
    best = std::min(best, residual);

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
    program.add_objective_hessian(x, 1.0, hess);
    program.add_constraint_hessian(x, full_y, hess);
    kkt.topLeftCorner(n, n) = hess;
    for (Eigen::Index a = 0; a < na; ++a) {
      kkt.block(0, n + a, n, 1) = jac.row(active[a]).transpose();
      kkt.block(n + a, 0, 1, n) = jac.row(active[a]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd step = lu.solve(-rhs);
    if (!step.allFinite()) return false;
    x += step.head(n);
    ya += step.tail(na);
  }

  if (!program.constraints(x, c) || !c.allFinite()) return false;
  program.objective_gradient(x, grad);
  program.constraint_jacobian(x, jac);
  full_y.setZero();
  for (Eigen::Index a = 0; a < na; ++a) full_y[active[a]] = ya[a];
  const double stat = (grad + jac.transpose() * full_y).cwiseAbs().maxCoeff();
  if (!(stat <= 1e3 * tolerance)) return false;

  std::vector<bool> is_active(k_total, false);
  for (int k : active) is_active[k] = true;
  for (Eigen::Index k = 0; k < k_total; ++k) {
    if (is_active[k]) {
      if (std::abs(c[k]) > 1e3 * tolerance || full_y[k] < -1e3 * tolerance) return false;
    } else if (!(c[k] < 0.0)) {
      return false;
    }
  }
  v = x;
  y = full_y.cwiseMax(0.0);
  return true;
}

}  // namespace

BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& v0,
                            const BarrierOptions& options) {
  const auto n = static_cast<Eigen::Index>(program.num_vars());
  const auto k_total = static_cast<Eigen::Index>(program.num_constraints());

  BarrierResult result;
  Eigen::VectorXd v = v0;
  Eigen::VectorXd c(k_total), c_trial(k_total);
  if (!strictly_feasible(program, v, c)) {
    result.v = v;
    result.multipliers = Eigen::VectorXd::Zero(k_total);
    return result;
  }

  Eigen::VectorXd grad_f(n), grad(n), inv_slack(k_total);
  Eigen::MatrixXd jac(k_total, n), hess(n, n);

  double t = options.initial_t;
  int total = 0;
  bool budget_exhausted = false;
  while (true) {
    for (int inner = 0; inner < options.max_newton_per_stage; ++inner) {
      if (total >= options.max_total_newton) {
        budget_exhausted = true;
        break;
      }
      ++total;
      program.objective_gradient(v, grad_f);
      program.constraint_jacobian(v, jac);
      inv_slack = (-c).cwiseInverse();
      grad = t * grad_f + jac.transpose() * inv_slack;

      hess.setZero();
      program.add_objective_hessian(v, t, hess);
      program.add_constraint_hessian(v, inv_slack, hess);
      const Eigen::MatrixXd scaled = inv_slack.asDiagonal() * jac;
      hess.noalias() += scaled.transpose() * scaled;

      const Eigen::VectorXd step = newton_direction(hess, grad);
      const double slope = grad.dot(step);
      const double decrement = -slope;
      if (!(decrement > 2.0 * options.newton_tolerance)) break;

      const double phi = barrier_value(program, v, c, t);
      double s = 1.0;
      Eigen::VectorXd trial;
      bool accepted = false;
      while (s > 1e-16) {
        trial = v + s * step;
        if (strictly_feasible(program, trial, c_trial)) {
          if (decrement < 1e-6 ||
              barrier_value(program, trial, c_trial, t) <= phi + 0.01 * s * slope) {
            accepted = true;
            break;
          }
        }
        s *= 0.5;
      }
      if (!accepted) break;  // no progress possible at this precision
      v = trial;
      c = c_trial;
    }
    if (budget_exhausted) break;
    const double gap = static_cast<double>(k_total) / t;
    if (gap <= options.gap_tolerance) {
      result.converged = true;
      break;
    }
    t *= options.t_growth;
  }

  result.iterations = total;
  result.gap = static_cast<double>(k_total) / t;
  result.v = v;
  result.multipliers = (-c).cwiseInverse() / t;
  result.stationarity = stationarity(program, v, result.multipliers);

  if (options.polish && result.converged) {
    std::vector<int> active;
    for (Eigen::Index k = 0; k < k_total; ++k) {
      if (result.multipliers[k] > -c[k]) active.push_back(static_cast<int>(k));
    }
    Eigen::VectorXd v_polished = v;
    Eigen::VectorXd y_polished = result.multipliers;
    if (polish(program, active, v_polished, y_polished, options.polish_tolerance)) {
      result.v = v_polished;
      result.multipliers = y_polished;
      result.stationarity = stationarity(program, v_polished, y_polished);
      result.polished = true;
      result.gap = 0.0;
    }
  }
  return result;
}

}  // namespace raopt::detail
