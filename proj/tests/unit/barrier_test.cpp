#include <gtest/gtest.h>

#include <cmath>

#include "barrier.hpp"

namespace raopt::detail {
namespace {

// min (x-2)^2 + (y-1)^2  s.t.  x + y <= 1,  -x <= 0.
class ProjectionQp : public ConvexProgram {
 public:
  std::size_t num_vars() const override { return 2; }
  std::size_t num_constraints() const override { return 2; }
  double objective(const Eigen::VectorXd& v) const override {
    return (v[0] - 2) * (v[0] - 2) + (v[1] - 1) * (v[1] - 1);
  }
  void objective_gradient(const Eigen::VectorXd& v, Eigen::VectorXd& g) const override {
    g.resize(2);
    g << 2 * (v[0] - 2), 2 * (v[1] - 1);
  }
  void add_objective_hessian(const Eigen::VectorXd&, double w, Eigen::MatrixXd& h) const override {
    h(0, 0) += 2 * w;
    h(1, 1) += 2 * w;
  }
  bool constraints(const Eigen::VectorXd& v, Eigen::VectorXd& c) const override {
    c.resize(2);
    c << v[0] + v[1] - 1, -v[0];
    return true;
  }
  void constraint_jacobian(const Eigen::VectorXd&, Eigen::MatrixXd& j) const override {
    j.resize(2, 2);
    j << 1, 1, -1, 0;
  }
  void add_constraint_hessian(const Eigen::VectorXd&, const Eigen::VectorXd&,
                              Eigen::MatrixXd&) const override {}
};

// min x + y  s.t.  x^2 + y^2 - 1 <= 0.
class DiskLp : public ConvexProgram {
 public:
  std::size_t num_vars() const override { return 2; }
  std::size_t num_constraints() const override { return 1; }
  double objective(const Eigen::VectorXd& v) const override { return v[0] + v[1]; }
  void objective_gradient(const Eigen::VectorXd&, Eigen::VectorXd& g) const override {
    g = Eigen::VectorXd::Ones(2);
  }
  bool constraints(const Eigen::VectorXd& v, Eigen::VectorXd& c) const override {
    c.resize(1);
    c[0] = v.squaredNorm() - 1;
    return true;
  }
  void constraint_jacobian(const Eigen::VectorXd& v, Eigen::MatrixXd& j) const override {
    j.resize(1, 2);
    j << 2 * v[0], 2 * v[1];
  }
  void add_constraint_hessian(const Eigen::VectorXd&, const Eigen::VectorXd& w,
                              Eigen::MatrixXd& h) const override {
    h(0, 0) += 2 * w[0];
    h(1, 1) += 2 * w[0];
  }
};

TEST(Barrier, ProjectionOntoHalfPlane) {
  ProjectionQp qp;
  Eigen::VectorXd v0(2);
  v0 << 0.2, 0.2;
  const auto result = solve_barrier(qp, v0, {});
  ASSERT_TRUE(result.converged);
  EXPECT_TRUE(result.polished);
  EXPECT_NEAR(result.v[0], 1.0, 1e-10);
  EXPECT_NEAR(result.v[1], 0.0, 1e-10);
  EXPECT_NEAR(result.multipliers[0], 2.0, 1e-8);
  EXPECT_NEAR(result.multipliers[1], 0.0, 1e-8);
  EXPECT_LE(result.stationarity, 1e-9);
}

TEST(Barrier, LinearObjectiveOnDisk) {
  DiskLp lp;
  const Eigen::VectorXd v0 = Eigen::VectorXd::Zero(2);
  BarrierOptions options;
  options.polish = false;
  const auto plain = solve_barrier(lp, v0, options);
  ASSERT_TRUE(plain.converged);
  EXPECT_FALSE(plain.polished);
  EXPECT_LE(plain.gap, options.gap_tolerance);
  const double c = -1.0 / std::sqrt(2.0);
  EXPECT_NEAR(plain.v[0], c, 1e-5);

  const auto polished = solve_barrier(lp, v0, {});
  ASSERT_TRUE(polished.converged);
  EXPECT_NEAR(polished.v[0], c, 1e-12);
  EXPECT_NEAR(polished.v[1], c, 1e-12);
  EXPECT_NEAR(polished.multipliers[0], -c, 1e-10);
}

}  // namespace
}  // namespace raopt::detail
