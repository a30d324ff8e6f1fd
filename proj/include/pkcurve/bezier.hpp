#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace pkc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2() = default;
  constexpr Point2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Point2& operator+=(const Point2& o) { x += o.x; y += o.y; return *this; }
  constexpr Point2& operator-=(const Point2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Point2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Point2 operator+(Point2 a, const Point2& b) { return a += b; }
  friend constexpr Point2 operator-(Point2 a, const Point2& b) { return a -= b; }
  friend constexpr Point2 operator-(const Point2& a) { return {-a.x, -a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return a *= s; }
  friend constexpr Point2 operator*(double s, Point2 a) { return a *= s; }
  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

constexpr double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Point2& a) { return a.x * a.x + a.y * a.y; }
inline double distance(const Point2& a, const Point2& b) { return norm(a - b); }
inline bool is_finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Axis-aligned bounds of a point set; diagonal() is 0 for a single point.
struct BoundingBox {
  Point2 min{0.0, 0.0};
  Point2 max{0.0, 0.0};

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double diagonal() const { return std::hypot(width(), height()); }
};

BoundingBox bounding_box(std::span<const Point2> points);

// Polynomial Bezier segment of degree control_points.size() - 1.
class BezierSegment {
 public:
  BezierSegment() = default;
  explicit BezierSegment(std::vector<Point2> control_points);
  BezierSegment(std::initializer_list<Point2> control_points);

  int degree() const { return static_cast<int>(points_.size()) - 1; }
  std::span<const Point2> control_points() const { return points_; }
  const Point2& operator[](std::size_t j) const { return points_[j]; }
  Point2& operator[](std::size_t j) { return points_[j]; }
  const Point2& front() const { return points_.front(); }
  const Point2& back() const { return points_.back(); }

  BezierSegment reversed() const;

  friend bool operator==(const BezierSegment&, const BezierSegment&) = default;

 private:
  std::vector<Point2> points_;
};

struct CurvatureSample {
  double t = 0.0;
  double kappa = 0.0;
  double speed = 0.0;
};

// Relative factor of the speed guard: curvature is refused where
// ||P'(t)|| <= kSpeedEpsilonFactor * bbox_diagonal(control polygon).
inline constexpr double kSpeedEpsilonFactor = 1e-9;

double speed_epsilon(const BezierSegment& seg);

// De Casteljau evaluation. Throws DomainError for t outside [0,1].
Point2 evaluate(const BezierSegment& seg, double t);

// Hodograph of the given order (1 <= order <= degree).
BezierSegment derivative_segment(const BezierSegment& seg, int order);

// Signed curvature det(P', P'') / ||P'||^3.
double curvature(const BezierSegment& seg, double t);

BezierSegment elevate_degree(const BezierSegment& seg);

// Splits at z in (0,1). left(s) = seg(z s), right(s) = seg(z + (1 - z) s).
std::pair<BezierSegment, BezierSegment> subdivide(const BezierSegment& seg, double z);

// Curvature at count uniformly spaced parameters j / (count - 1).
std::vector<CurvatureSample> sample_curvature(const BezierSegment& seg, int count);

// Bernstein basis values B_j^k(t), j = 0..k, written into out (size k + 1).
void bernstein_basis(int degree, double t, std::span<double> out);

// First and second parametric derivatives at t, via the Bernstein basis.
struct Derivatives {
  Point2 first;
  Point2 second;
};
Derivatives derivatives(const BezierSegment& seg, double t);

}  // namespace pkc
