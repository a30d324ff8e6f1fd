#include "pkcurve/continuity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pkcurve/errors.hpp"

namespace pkc {

std::string to_string(ContinuityMode mode) {
  return std::string(mode.geometric() ? "G" : "C") + std::to_string(mode.order);
}

ContinuityMode parse_continuity(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "C1") return ContinuityMode::C1();
  if (s == "C2") return ContinuityMode::C2();
  if (s == "G1") return ContinuityMode::G1();
  if (s == "G2") return ContinuityMode::G2();
  throw ArgumentError("unknown continuity mode '" + text + "' (expected C1, C2, G1 or G2)");
}

void ConstraintResidual::push(const std::string& label, const Point2& v) {
  values.push_back(v.x);
  labels.push_back(label + ".x");
  values.push_back(v.y);
  labels.push_back(label + ".y");
}

double ConstraintResidual::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double ConstraintResidual::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

ConstraintResidual joint_residual(const BezierSegment& left, const BezierSegment& right, ContinuityMode mode,
                                  std::optional<GeometricJointParams> params) {
  if (left.degree() != right.degree()) throw ShapeError("joint_residual: degree mismatch");
  if (left.degree() < mode.order) throw ShapeError("joint_residual: degree too low for continuity order");
  if (mode.geometric() != params.has_value()) {
    throw ArgumentError(mode.geometric() ? "joint_residual: geometric mode requires joint parameters"
                                         : "joint_residual: parametric mode takes no joint parameters");
  }
  const auto k = static_cast<std::size_t>(left.degree());
  ConstraintResidual r;
  r.push("C0", left[k] - right[0]);
  const Point2 left_leg = left[k] - left[k - 1];
  const Point2 right_leg = right[1] - right[0];
  if (!mode.geometric()) {
    r.push("C1", left_leg - right_leg);
    if (mode.order >= 2) {
      r.push("C2", (left[k - 2] - 2.0 * left[k - 1]) - (right[2] - 2.0 * right[1]));
    }
  } else {
    const double alpha = params->alpha;
    r.push("G1", alpha * left_leg - right_leg);
    if (mode.order >= 2) {
      r.push("G2", (-(alpha * alpha) * (left[k - 1] - left[k - 2]) + params->eta * left_leg) - (right[2] - right[1]));
    }
  }
  return r;
}

ConstraintResidual interpolation_residual(const BezierSegment& seg, double t, const Point2& target) {
  ConstraintResidual r;
  r.push("I", evaluate(seg, t) - target);
  return r;
}

BezierSegment enforce_c2_forward(const BezierSegment& left, std::span<const Point2> right_tail) {
  const int k = left.degree();
  if (k < 2 || static_cast<int>(right_tail.size()) != k - 2) {
    throw ShapeError("enforce_c2_forward: tail must supply degree - 2 control points");
  }
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(k + 1));
  const Point2 c0 = left[k];
  const Point2 c1 = 2.0 * left[k] - left[k - 1];
  pts.push_back(c0);
  pts.push_back(c1);
  pts.push_back(left[k - 2] - 2.0 * left[k - 1] + 2.0 * c1);
  pts.insert(pts.end(), right_tail.begin(), right_tail.end());
  return BezierSegment(std::move(pts));
}

BezierSegment enforce_c1_forward(const BezierSegment& left, std::span<const Point2> right_tail) {
  const int k = left.degree();
  if (k < 1 || static_cast<int>(right_tail.size()) != k - 1) {
    throw ShapeError("enforce_c1_forward: tail must supply degree - 1 control points");
  }
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(k + 1));
  pts.push_back(left[k]);
  pts.push_back(2.0 * left[k] - left[k - 1]);
  pts.insert(pts.end(), right_tail.begin(), right_tail.end());
  return BezierSegment(std::move(pts));
}

GeometricJointParams estimate_joint_params(const BezierSegment& left, const BezierSegment& right) {
  if (left.degree() != right.degree()) throw ShapeError("estimate_joint_params: degree mismatch");
  const auto k = static_cast<std::size_t>(left.degree());
  const Point2 left_leg = left[k] - left[k - 1];
  const Point2 right_leg = right[1] - right[0];
  const double eps = std::max(speed_epsilon(left), speed_epsilon(right));
  const double left_len = norm(left_leg);
  const double right_len = norm(right_leg);
  if (!(left_len > eps) || !(right_len > eps)) {
    throw DegenerateInputError("geometric joint with a zero-length control leg");
  }
  GeometricJointParams p;
  p.alpha = std::max(right_len / left_len, kAlphaMin);
  p.eta = 2.0;
  if (k >= 2) {
    const Point2 rhs = (right[2] - right[1]) + (p.alpha * p.alpha) * (left[k - 1] - left[k - 2]);
    p.eta = dot(rhs, left_leg) / squared_norm(left_leg);
  }
  return p;
}

}  // namespace pkc
