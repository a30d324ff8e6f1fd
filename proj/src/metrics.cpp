#include "pkcurve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pkcurve/errors.hpp"

namespace pkc {

EnergyReport energy_report(const CurveDocument& doc, EnergyWeights weights, QuadratureRule rule) {
  EnergyReport report;
  report.per_segment.reserve(doc.segments.size());
  double sum = 0.0;
  for (const auto& s : doc.segments) {
    auto terms = energy_terms(s.curve, s.parabola, weights, rule);
    sum += terms.parabolic;
    report.max_ep = std::max(report.max_ep, terms.parabolic);
    report.per_segment.push_back(terms);
  }
  if (!doc.segments.empty()) report.average_ep = sum / static_cast<double>(doc.segments.size());
  return report;
}

namespace {

double angle_between(Point2 a, Point2 b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return std::numbers::pi;
  return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

}  // namespace

std::vector<JointRecord> joint_report(const CurveDocument& doc) {
  std::vector<JointRecord> out;
  std::size_t n = doc.segments.size();
  if (n < 2) return out;
  std::size_t joints = doc.closed() ? n : n - 1;
  for (std::size_t j = 0; j < joints; ++j) {
    const auto& l = doc.segments[j].curve;
    const auto& r = doc.segments[(j + 1) % n].curve;
    int k = l.degree();
    JointRecord rec;
    rec.left = j;
    rec.right = (j + 1) % n;
    rec.position_gap = distance(l.back(), r.front());
    rec.tangent_gap = angle_between(l[k] - l[k - 1], r[1] - r[0]);
    rec.curvature_gap = std::abs(curvature(l, 1.0) - curvature(r, 0.0));
    std::optional<GeometricJointParams> params;
    if (doc.mode.geometric()) params = j < doc.joints.size() ? doc.joints[j] : GeometricJointParams{};
    rec.mode_residual = joint_residual(l, r, doc.mode, params).max_abs();
    out.push_back(rec);
  }
  return out;
}

int monotone_interval_count(const BezierSegment& seg, int samples) {
  if (samples < 2) throw DomainError("monotone_interval_count needs at least 2 samples");
  auto kappa = sample_curvature(seg, samples);
  double peak = 0.0;
  for (const auto& s : kappa) peak = std::max(peak, std::abs(s.kappa));
  double flat = 1e-9 * peak;
  int runs = 1;
  int direction = 0;
  for (std::size_t i = 1; i < kappa.size(); ++i) {
    double d = kappa[i].kappa - kappa[i - 1].kappa;
    if (std::abs(d) <= flat) continue;
    int s = d > 0.0 ? 1 : -1;
    if (direction != 0 && s != direction) ++runs;
    direction = s;
  }
  return runs;
}

CombGeometry comb_geometry(const CurveDocument& doc, int samples_per_segment, double scale) {
  if (samples_per_segment < 2) throw DomainError("comb needs at least 2 samples per segment");
  if (!(scale > 0.0)) throw DomainError("comb scale must be positive");
  CombGeometry comb;
  comb.scale = scale;
  for (const auto& s : doc.segments) {
    for (int i = 0; i < samples_per_segment; ++i) {
      double t = static_cast<double>(i) / (samples_per_segment - 1);
      auto d = derivatives(s.curve, t);
      double speed = norm(d.first);
      if (speed <= speed_epsilon(s.curve)) throw DegenerateSpeedError(t);
      Point2 normal{-d.first.y / speed, d.first.x / speed};
      double kappa = cross(d.first, d.second) / (speed * speed * speed);
      Point2 base = evaluate(s.curve, t);
      comb.base_points.push_back(base);
      comb.tip_points.push_back(base + normal * (scale * kappa));
    }
  }
  return comb;
}

}  // namespace pkc
