#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace pkc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// min f(z) s.t. h(z) = 0, lower <= z <= upper.
class ConstrainedProblem {
 public:
  virtual ~ConstrainedProblem() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::Index constraint_count() const = 0;
  // grad, when non-null, is resized and filled.
  virtual double objective(const Vector& z, Vector* grad) const = 0;
  // values is resized to constraint_count(); jacobian, when non-null, to m x n.
  virtual void constraints(const Vector& z, Vector& values, Matrix* jacobian) const = 0;
  virtual const Vector& lower_bounds() const = 0;
  virtual const Vector& upper_bounds() const = 0;
  // Optional Gauss-Newton structure: when f(z) = |r(z)|^2, fills J^T J of
  // the residuals. Problems that provide it get a Gauss-Newton model instead
  // of a quasi-Newton one.
  virtual bool gauss_newton_matrix(const Vector& z, Matrix& jtj) const {
    (void)z;
    (void)jtj;
    return false;
  }
};

struct SolverSettings {
  // A stage stops once its objective falls below epsilon.
  double epsilon = 1e-6;
  int max_iterations = 200;
  double kkt_tolerance = 1e-6;
  // Equality violation accepted at return.
  double constraint_tolerance = 1e-8;
  // Target of the Gauss-Newton feasibility restoration run after every step.
  double restoration_tolerance = 1e-12;
};

enum class Termination { Tolerance, IterationCap, Stalled };
std::string to_string(Termination t);

struct StageReport {
  int iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  Termination termination = Termination::Tolerance;
  // Every accepted step lowered the objective.
  bool monotone = true;
};

struct SolveOutcome {
  Vector unknowns;
  double objective = 0.0;
  std::vector<StageReport> stage_reports;
  // The start vector violated a bound and was clamped.
  bool start_clamped = false;
  // Second stage failed; unknowns hold the first stage's result.
  bool degraded = false;
};

struct KktReport {
  double max_equality_violation = 0.0;
  double max_bound_violation = 0.0;
  double projected_gradient_norm = 0.0;
};

// Feasible descent: the start is clamped to the bounds and restored onto the
// constraint manifold, then every accepted iterate stays feasible and lowers f.
// Throws InfeasibleError when restoration fails, NumericalError on NaN.
SolveOutcome solve_stage(const ConstrainedProblem& problem, const SolverSettings& settings, const Vector& start);

KktReport kkt_report(const ConstrainedProblem& problem, const Vector& point);

// Moves z onto h(z) = 0 (to `tolerance`) by damped minimum-norm Gauss-Newton
// steps within the bounds. Returns false when it cannot get there.
bool restore_feasibility(const ConstrainedProblem& problem, Vector& z, double tolerance, int max_iterations = 50);

}  // namespace pkc
