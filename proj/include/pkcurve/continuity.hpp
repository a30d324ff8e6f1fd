#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pkcurve/bezier.hpp"

namespace pkc {

enum class ContinuityKind { Parametric, Geometric };

// One of C1, C2, G1, G2.
struct ContinuityMode {
  int order = 2;
  ContinuityKind kind = ContinuityKind::Parametric;

  static ContinuityMode C1() { return {1, ContinuityKind::Parametric}; }
  static ContinuityMode C2() { return {2, ContinuityKind::Parametric}; }
  static ContinuityMode G1() { return {1, ContinuityKind::Geometric}; }
  static ContinuityMode G2() { return {2, ContinuityKind::Geometric}; }

  bool geometric() const { return kind == ContinuityKind::Geometric; }
  // Quartic segments for first-order modes, quintic for second-order.
  int segment_degree() const { return order + 3; }

  friend bool operator==(const ContinuityMode&, const ContinuityMode&) = default;
};

std::string to_string(ContinuityMode mode);
// Accepts "C1", "C2", "G1", "G2" (case-insensitive); throws ArgumentError otherwise.
ContinuityMode parse_continuity(const std::string& text);

inline constexpr double kAlphaMin = 1e-6;

struct GeometricJointParams {
  double alpha = 1.0;
  double eta = 2.0;

  friend bool operator==(const GeometricJointParams&, const GeometricJointParams&) = default;
};

struct ConstraintResidual {
  std::vector<double> values;
  std::vector<std::string> labels;

  void push(const std::string& label, const Point2& v);
  double max_abs() const;
  double norm() const;
};

// Stacked joint residuals for the given mode; zero iff the joint satisfies it.
// params must be present exactly when mode is geometric.
ConstraintResidual joint_residual(const BezierSegment& left, const BezierSegment& right, ContinuityMode mode,
                                  std::optional<GeometricJointParams> params = std::nullopt);

// evaluate(seg, t) - target.
ConstraintResidual interpolation_residual(const BezierSegment& seg, double t, const Point2& target);

// Builds the right segment of a C2 joint: its first three control points are
// fixed by `left`, the remaining ones (c_3..c_k) come from right_tail.
BezierSegment enforce_c2_forward(const BezierSegment& left, std::span<const Point2> right_tail);

// Same for a C1 joint: c_0, c_1 from `left`, c_2..c_k from right_tail.
BezierSegment enforce_c1_forward(const BezierSegment& left, std::span<const Point2> right_tail);

// Geometric joint parameters that best explain an existing joint: alpha from the
// leg-length ratio, eta by least squares on the second-order relation.
// Throws DegenerateInputError when a leg is shorter than the speed epsilon.
GeometricJointParams estimate_joint_params(const BezierSegment& left, const BezierSegment& right);

}  // namespace pkc
