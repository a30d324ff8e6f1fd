#pragma once

#include <vector>

#include "pkcurve/bezier.hpp"
#include "pkcurve/continuity.hpp"
#include "pkcurve/energy.hpp"
#include "pkcurve/solver.hpp"

namespace pkc {

// How the window's outer control points are tied down.
enum class WindowEnd {
  Fixed,   // the end control point is pinned (open-curve end condition)
  Frozen,  // the control points that couple to an untouched neighbour are pinned
  Wrap,    // the window is a whole closed curve; last segment joins the first
};

struct WindowSegment {
  BezierSegment initial;  // start geometry; pinned control points are read from it
  Point2 target;          // point interpolated at parameter t
  double t_hat = 0.5;     // initial parameter; t is boxed to [t_hat / 2, (t_hat + 1) / 2]
  ParabolaModel parabola;
  bool fix_t = false;     // degenerate parabola: hold t at t_hat for this solve
};

struct WindowSolution {
  std::vector<BezierSegment> segments;
  std::vector<ParabolaModel> parabolas;
  std::vector<double> t;
  // One entry per joint inside the window (geometric modes only), the wrap
  // joint last when present.
  std::vector<GeometricJointParams> joints;
};

// The local optimization problem over a window of consecutive segments.
// Linear constraints (pinned points, parametric joints, shared joint points)
// are eliminated through an affine map x = M z + b from the unknowns z to the
// full per-segment variables; interpolation, extremum coupling and geometric
// joint equations stay explicit.
class SegmentProblem final : public ConstrainedProblem {
 public:
  SegmentProblem(std::vector<WindowSegment> window, ContinuityMode mode, WindowEnd left, WindowEnd right,
                 EnergyWeights weights, QuadratureRule rule = {},
                 std::vector<GeometricJointParams> joint_start = {});

  Eigen::Index dimension() const override { return lower_.size(); }
  Eigen::Index constraint_count() const override { return constraint_rows_; }
  double objective(const Vector& z, Vector* grad) const override;
  void constraints(const Vector& z, Vector& values, Matrix* jacobian) const override;
  const Vector& lower_bounds() const override { return lower_; }
  const Vector& upper_bounds() const override { return upper_; }
  bool gauss_newton_matrix(const Vector& z, Matrix& jtj) const override;

  Vector start_vector() const;
  WindowSolution unpack(const Vector& z) const;

  EnergyWeights weights() const { return weights_; }
  void set_weights(EnergyWeights weights) { weights_ = weights; }
  ContinuityMode mode() const { return mode_; }
  std::size_t segment_count() const { return window_.size(); }
  std::size_t joint_count() const { return joint_count_; }
  // Parabolic term of each window segment at z.
  std::vector<double> parabolic_energies(const Vector& z) const;

 private:
  std::size_t segment_offset(std::size_t s) const { return s * block_; }
  std::size_t joint_offset(std::size_t j) const;
  Vector full_vector(const Vector& z) const;
  BezierSegment segment_at(const Vector& x, std::size_t s) const;

  std::vector<WindowSegment> window_;
  ContinuityMode mode_;
  WindowEnd left_;
  WindowEnd right_;
  EnergyWeights weights_;
  QuadratureRule rule_;
  int degree_ = 0;
  std::size_t block_ = 0;        // full variables per segment: control coords, a0, a1, a2, t
  std::size_t joint_count_ = 0;  // geometric joints carrying explicit unknowns
  Eigen::Index constraint_rows_ = 0;
  Matrix map_;                   // full = map_ * z + offset_
  Vector offset_;
  Vector lower_;
  Vector upper_;
  Vector start_;
};

// Stage one minimizes the weighted energy; stage two restarts from its result
// with both weights at zero. If stage two throws, stage one's result is
// returned with `degraded` set.
SolveOutcome solve_two_stage(const SegmentProblem& problem, const SolverSettings& settings, const Vector& start);

}  // namespace pkc
