#pragma once

#include <cstddef>
#include <vector>

#include "pkcurve/builder.hpp"

namespace pkc {

struct EnergyReport {
  std::vector<EnergyTerms> per_segment;
  double average_ep = 0.0;  // E-bar
  double max_ep = 0.0;      // E-hat
};

// Terms are evaluated against the parabolas stored in the document.
EnergyReport energy_report(const CurveDocument& doc, EnergyWeights weights = {}, QuadratureRule rule = {});

struct JointRecord {
  std::size_t left = 0;  // segment indices
  std::size_t right = 0;
  double position_gap = 0.0;
  double tangent_gap = 0.0;  // radians
  double curvature_gap = 0.0;
  double mode_residual = 0.0;  // max |.| of the declared mode's residual
};

// One record per joint between consecutive segments, wrap joint last on
// closed curves.
std::vector<JointRecord> joint_report(const CurveDocument& doc);

// Relative curvature gap under which a second-order joint counts as verified.
inline constexpr double kCurvatureGapTolerance = 1e-4;

inline constexpr int kMonotoneSamples = 201;

// Maximal monotone runs of the curvature sampled at `samples` uniform
// parameters. Differences within 1e-9 max|kappa| are treated as flat.
int monotone_interval_count(const BezierSegment& seg, int samples = kMonotoneSamples);

struct CombGeometry {
  std::vector<Point2> base_points;
  std::vector<Point2> tip_points;
  double scale = 1.0;
};

// tip = base + scale * kappa * n, n the unit tangent rotated a quarter turn left.
CombGeometry comb_geometry(const CurveDocument& doc, int samples_per_segment, double scale);

}  // namespace pkc
