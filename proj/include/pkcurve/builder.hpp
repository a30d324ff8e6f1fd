#pragma once

#include <cstddef>
#include <vector>

#include "pkcurve/bezier.hpp"
#include "pkcurve/continuity.hpp"
#include "pkcurve/energy.hpp"
#include "pkcurve/solver.hpp"

namespace pkc {

enum class Topology { Open, Closed };

struct SegmentRecord {
  BezierSegment curve;
  ParabolaModel parabola;
  double t = 0.5;      // parameter at which the segment interpolates its point
  double t_hat = 0.5;  // initialization of t in the last solve that touched the segment
  std::size_t point_index = 0;

  friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

// Open: points p_0..p_m, segment j interpolates p_{j+1}, runs from p_0 to p_m.
// Closed: N points and N segments, segment j interpolates p_{(j+1) mod N} and
// the last segment joins back into the first.
// joints (geometric modes): joint j sits between segments j and j+1, the
// wrap joint last on closed curves.
struct CurveDocument {
  ContinuityMode mode = ContinuityMode::C2();
  Topology topology = Topology::Open;
  std::vector<Point2> points;
  std::vector<SegmentRecord> segments;
  std::vector<GeometricJointParams> joints;

  bool closed() const { return topology == Topology::Closed; }
  std::size_t joint_count() const;

  friend bool operator==(const CurveDocument&, const CurveDocument&) = default;
};

struct BuildOptions {
  EnergyWeights weights;
  QuadratureRule rule;
  SolverSettings settings;
};

struct EditReport {
  // Document segment indices the edit re-optimized, in window order.
  std::vector<std::size_t> window;
  // Stage reports of the final solve (two per stage pair).
  std::vector<StageReport> stages;
  bool degraded = false;
  // Extra intermediate solves a move needed to stay feasible.
  int continuation_steps = 0;
  double seconds = 0.0;
};

CurveDocument make_document(ContinuityMode mode);

CurveDocument bootstrap_three_points(Point2 p0, Point2 p1, Point2 p2, ContinuityMode mode,
                                     const BuildOptions& options = {}, EditReport* report = nullptr);

// Appends a point to an open document. With fewer than three points it is
// only stored; the third point triggers bootstrap_three_points.
CurveDocument insert_point(const CurveDocument& doc, Point2 p, const BuildOptions& options = {},
                           EditReport* report = nullptr);

CurveDocument close_curve(const CurveDocument& doc, const BuildOptions& options = {}, EditReport* report = nullptr);

CurveDocument move_point(const CurveDocument& doc, std::size_t index, Point2 position,
                         const BuildOptions& options = {}, EditReport* report = nullptr);

// Inserts the points in order and closes the curve when asked.
CurveDocument build_curve(const std::vector<Point2>& points, ContinuityMode mode, Topology topology,
                          const BuildOptions& options = {}, std::vector<EditReport>* reports = nullptr);

// Segment indices move_point re-optimizes for the given point.
std::vector<std::size_t> edit_window(const CurveDocument& doc, std::size_t index);

// Least-squares parabola through s = 100 uniform curvature samples whose axis
// of symmetry is t = t_axis.
ParabolaModel fit_parabola(const BezierSegment& seg, double t_axis, int samples = 100);

// t_hat = |a p| / (|a p| + |p b|).
double chord_parameter(Point2 a, Point2 p, Point2 b);

// Quadratic through p0, p1, p2 at parameters 0, t, 1.
BezierSegment interpolating_quadratic(Point2 p0, Point2 p1, Point2 p2, double t);

// Snapshot stack for undo.
class EditHistory {
 public:
  void record(const CurveDocument& doc) { snapshots_.push_back(doc); }
  bool can_undo() const { return !snapshots_.empty(); }
  // Returns the most recent snapshot and drops it; throws InvariantError when empty.
  CurveDocument undo();
  std::size_t size() const { return snapshots_.size(); }

 private:
  std::vector<CurveDocument> snapshots_;
};

}  // namespace pkc
