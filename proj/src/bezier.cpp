#include "pkcurve/bezier.hpp"

#include <algorithm>
#include <string>

#include "pkcurve/errors.hpp"

namespace pkc {

namespace {

void require_unit_parameter(double t, const char* op) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError(std::string(op) + ": parameter " + std::to_string(t) + " outside [0,1]");
  }
}

// Left half of the de Casteljau triangle at z, written over pts.
void casteljau_left(std::vector<Point2>& pts, double z) {
  const std::size_t n = pts.size();
  std::vector<Point2> work = pts;
  const double u = 1.0 - z;
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t j = 0; j + r < n; ++j) {
      work[j] = u * work[j] + z * work[j + 1];
    }
    pts[r] = work[0];
  }
}

}  // namespace

BoundingBox bounding_box(std::span<const Point2> points) {
  BoundingBox box;
  if (points.empty()) return box;
  box.min = box.max = points.front();
  for (const Point2& p : points) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
  }
  return box;
}

BezierSegment::BezierSegment(std::vector<Point2> control_points) : points_(std::move(control_points)) {
  if (points_.empty()) throw ShapeError("BezierSegment: at least one control point required");
}

BezierSegment::BezierSegment(std::initializer_list<Point2> control_points)
    : BezierSegment(std::vector<Point2>(control_points)) {}

BezierSegment BezierSegment::reversed() const {
  return BezierSegment(std::vector<Point2>(points_.rbegin(), points_.rend()));
}

double speed_epsilon(const BezierSegment& seg) {
  return kSpeedEpsilonFactor * bounding_box(seg.control_points()).diagonal();
}

Point2 evaluate(const BezierSegment& seg, double t) {
  require_unit_parameter(t, "evaluate");
  auto cps = seg.control_points();
  std::vector<Point2> work(cps.begin(), cps.end());
  const double u = 1.0 - t;
  for (std::size_t n = work.size(); n > 1; --n) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      work[j] = u * work[j] + t * work[j + 1];
    }
  }
  return work[0];
}

BezierSegment derivative_segment(const BezierSegment& seg, int order) {
  if (order < 1 || order > seg.degree()) {
    throw DomainError("derivative_segment: order " + std::to_string(order) + " not in [1, degree=" +
                      std::to_string(seg.degree()) + "]");
  }
  auto cps = seg.control_points();
  std::vector<Point2> pts(cps.begin(), cps.end());
  for (int r = 0; r < order; ++r) {
    const double k = static_cast<double>(pts.size() - 1);
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) pts[j] = k * (pts[j + 1] - pts[j]);
    pts.pop_back();
  }
  return BezierSegment(std::move(pts));
}

void bernstein_basis(int degree, double t, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(degree + 1)) {
    throw ShapeError("bernstein_basis: output size must be degree + 1");
  }
  const double u = 1.0 - t;
  out[0] = 1.0;
  for (int k = 1; k <= degree; ++k) {
    double carry = 0.0;
    for (int j = 0; j < k; ++j) {
      const double b = out[j];
      out[j] = carry + u * b;
      carry = t * b;
    }
    out[k] = carry;
  }
}

Derivatives derivatives(const BezierSegment& seg, double t) {
  const int k = seg.degree();
  Derivatives d;
  if (k < 1) return d;
  double basis[8];
  bernstein_basis(k - 1, t, std::span<double>(basis, k));
  for (int j = 0; j < k; ++j) d.first += (k * basis[j]) * (seg[j + 1] - seg[j]);
  if (k >= 2) {
    bernstein_basis(k - 2, t, std::span<double>(basis, k - 1));
    for (int j = 0; j + 1 < k; ++j) {
      d.second += (k * (k - 1) * basis[j]) * (seg[j + 2] - 2.0 * seg[j + 1] + seg[j]);
    }
  }
  return d;
}

double curvature(const BezierSegment& seg, double t) {
  require_unit_parameter(t, "curvature");
  const Derivatives d = derivatives(seg, t);
  const double speed = norm(d.first);
  if (!(speed > speed_epsilon(seg))) throw DegenerateSpeedError(t);
  return cross(d.first, d.second) / (speed * speed * speed);
}

BezierSegment elevate_degree(const BezierSegment& seg) {
  const int k = seg.degree();
  std::vector<Point2> out(static_cast<std::size_t>(k + 2));
  out.front() = seg.front();
  out.back() = seg.back();
  for (int l = 1; l <= k; ++l) {
    const double w = static_cast<double>(l) / static_cast<double>(k + 1);
    out[l] = w * seg[l - 1] + (1.0 - w) * seg[l];
  }
  return BezierSegment(std::move(out));
}

std::pair<BezierSegment, BezierSegment> subdivide(const BezierSegment& seg, double z) {
  if (!(z > 0.0 && z < 1.0)) {
    throw DomainError("subdivide: split parameter " + std::to_string(z) + " outside (0,1)");
  }
  auto cps = seg.control_points();
  std::vector<Point2> left(cps.begin(), cps.end());
  casteljau_left(left, z);
  // Right half by symmetry: reverse, take the left part at 1 - z, reverse back.
  std::vector<Point2> right(cps.rbegin(), cps.rend());
  casteljau_left(right, 1.0 - z);
  std::reverse(right.begin(), right.end());
  // Both halves must share the split point exactly.
  right.front() = left.back();
  return {BezierSegment(std::move(left)), BezierSegment(std::move(right))};
}

std::vector<CurvatureSample> sample_curvature(const BezierSegment& seg, int count) {
  if (count < 2) throw DomainError("sample_curvature: count must be >= 2");
  std::vector<CurvatureSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  const double eps = speed_epsilon(seg);
  for (int j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(count - 1);
    const Derivatives d = derivatives(seg, t);
    const double speed = norm(d.first);
    if (!(speed > eps)) throw DegenerateSpeedError(t);
    samples.push_back({t, cross(d.first, d.second) / (speed * speed * speed), speed});
  }
  return samples;
}

}  // namespace pkc
