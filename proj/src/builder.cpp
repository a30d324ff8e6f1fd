#include "pkcurve/builder.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <cmath>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "pkcurve/errors.hpp"
#include "pkcurve/segment_problem.hpp"

namespace pkc {

namespace {

using Clock = std::chrono::steady_clock;

// Initial state of a window, in world coordinates.
struct WindowInit {
  std::vector<std::size_t> indices;
  std::vector<BezierSegment> curves;
  std::vector<double> t_hat;
  std::vector<Point2> targets;
  WindowEnd left = WindowEnd::Fixed;
  WindowEnd right = WindowEnd::Fixed;
  // Start values of the joints inside the window; missing entries are estimated.
  std::vector<GeometricJointParams> joints;
  // Present when warm starting: world-unit parabolas to reuse instead of refitting.
  std::vector<ParabolaModel> parabolas;
};

struct WindowResult {
  std::vector<SegmentRecord> records;
  std::vector<GeometricJointParams> joints;
  std::vector<StageReport> stages;
  bool degraded = false;
  // Weighted window energy at the solution, in the window frame.
  double score = 0.0;
};

BezierSegment raise_to(BezierSegment seg, int degree) {
  while (seg.degree() < degree) seg = elevate_degree(seg);
  return seg;
}

WindowResult solve_window(const WindowInit& init, ContinuityMode mode, const BuildOptions& options) {
  for (const auto& c : init.curves)
    for (const auto& p : c.control_points())
      if (!is_finite(p)) throw NumericalError("window geometry is not finite", 0);
  // The frame depends only on the targets and the window's outer ends, so
  // different starts for the same window share it.
  std::vector<Point2> frame = init.targets;
  frame.push_back(init.curves.front().front());
  frame.push_back(init.curves.back().back());
  const BoundingBox box = bounding_box(frame);
  const double scale = std::max(box.width(), box.height());
  if (!(scale > 0.0)) throw DegenerateInputError("window points coincide");
  const Point2 origin = box.min;
  auto to_local = [&](Point2 p) { return Point2{(p.x - origin.x) / scale, (p.y - origin.y) / scale}; };
  auto to_world = [&](Point2 p) { return Point2{origin.x + scale * p.x, origin.y + scale * p.y}; };

  std::vector<WindowSegment> window;
  for (std::size_t s = 0; s < init.curves.size(); ++s) {
    std::vector<Point2> pts;
    for (const auto& p : init.curves[s].control_points()) pts.push_back(to_local(p));
    WindowSegment ws;
    ws.initial = BezierSegment(std::move(pts));
    ws.target = to_local(init.targets[s]);
    ws.t_hat = init.t_hat[s];
    if (init.parabolas.empty()) {
      ws.parabola = fit_parabola(ws.initial, ws.t_hat);
    } else {
      const ParabolaModel& q = init.parabolas[s];
      ws.parabola = {q.a0 * scale, q.a1 * scale, q.a2 * scale};
    }
    ws.fix_t = std::abs(ws.parabola.a2) < kA2Min;
    if (ws.fix_t) ws.parabola.a1 = -2.0 * ws.parabola.a2 * ws.t_hat;
    window.push_back(std::move(ws));
  }

  const SegmentProblem problem(window, mode, init.left, init.right, options.weights, options.rule, init.joints);
  const SolveOutcome outcome = solve_two_stage(problem, options.settings, problem.start_vector());
  const WindowSolution sol = problem.unpack(outcome.unknowns);
  const double score = problem.objective(outcome.unknowns, nullptr);

  const int order = mode.order;
  const std::size_t k = static_cast<std::size_t>(mode.segment_degree());
  WindowResult out;
  for (std::size_t s = 0; s < sol.segments.size(); ++s) {
    std::vector<Point2> pts;
    for (const auto& p : sol.segments[s].control_points()) pts.push_back(to_world(p));
    // Pinned points keep their exact world values so untouched neighbours
    // still share them bitwise.
    if (s == 0) {
      if (init.left == WindowEnd::Fixed) pts[0] = init.curves[0][0];
      if (init.left == WindowEnd::Frozen)
        for (std::size_t j = 0; j <= static_cast<std::size_t>(order); ++j) pts[j] = init.curves[0][j];
    }
    if (s + 1 == sol.segments.size()) {
      if (init.right == WindowEnd::Fixed) pts[k] = init.curves[s][k];
      if (init.right == WindowEnd::Frozen)
        for (std::size_t j = k - static_cast<std::size_t>(order); j <= k; ++j) pts[j] = init.curves[s][j];
    }
    SegmentRecord rec;
    rec.curve = BezierSegment(std::move(pts));
    const ParabolaModel& q = sol.parabolas[s];
    rec.parabola = {q.a0 / scale, q.a1 / scale, q.a2 / scale};
    rec.t = sol.t[s];
    rec.t_hat = init.t_hat[s];
    out.records.push_back(std::move(rec));
  }
  // Joint points shared inside the window.
  for (std::size_t s = 1; s < out.records.size(); ++s) out.records[s].curve[0] = out.records[s - 1].curve.back();
  if (init.left == WindowEnd::Wrap) out.records.front().curve[0] = out.records.back().curve.back();
  out.joints = sol.joints;
  out.stages = outcome.stage_reports;
  out.degraded = outcome.degraded;
  out.score = score;
  return out;
}

// Solves every start and keeps the lowest weighted energy; the first start
// wins ties. Errors surface only when every start fails.
std::pair<std::size_t, WindowResult> solve_best(const std::vector<WindowInit>& starts, ContinuityMode mode,
                                               const BuildOptions& options) {
  std::optional<std::pair<std::size_t, WindowResult>> best;
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    try {
      WindowResult r = solve_window(starts[i], mode, options);
      if (!best || r.score < best->second.score) best.emplace(i, std::move(r));
    } catch (const std::runtime_error&) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (!best) std::rethrow_exception(first_error);
  return std::move(*best);
}

std::size_t joint_slots(const CurveDocument& doc, std::size_t segment_count) {
  if (!doc.mode.geometric() || segment_count == 0) return 0;
  return doc.closed() ? segment_count : segment_count - 1;
}

// Writes a window result into the document. Joint j of the window lies
// between window segments j and j+1 (the wrap joint last).
void apply_window(CurveDocument& doc, const WindowInit& init, const WindowResult& result, EditReport* report) {
  for (std::size_t s = 0; s < init.indices.size(); ++s) {
    SegmentRecord rec = result.records[s];
    rec.point_index = doc.segments[init.indices[s]].point_index;
    doc.segments[init.indices[s]] = std::move(rec);
  }
  if (doc.mode.geometric()) {
    doc.joints.resize(joint_slots(doc, doc.segments.size()));
    for (std::size_t j = 0; j < result.joints.size(); ++j) doc.joints[init.indices[j]] = result.joints[j];
  }
  if (report) {
    report->window = init.indices;
    report->stages = result.stages;
    report->degraded = result.degraded;
  }
}

std::vector<GeometricJointParams> window_joints(const CurveDocument& doc, const std::vector<std::size_t>& indices,
                                                bool wrap) {
  std::vector<GeometricJointParams> out;
  if (!doc.mode.geometric()) return out;
  const std::size_t count = indices.size() - (wrap ? 0 : 1);
  for (std::size_t j = 0; j < count; ++j) out.push_back(doc.joints.at(indices[j]));
  return out;
}

double scale_of(const std::vector<Point2>& points) {
  if (points.empty()) return 1.0;
  return std::max(bounding_box(points).diagonal(), 1.0);
}

void check_distinct(Point2 a, Point2 b, double scale) {
  if (distance(a, b) <= 1e-12 * scale) throw DegenerateInputError("consecutive points coincide");
}

// Fills the free control points of a segment that follows `left` with
// parametric continuity: the midpoint rule ties the last free point to the
// next one, and the point before that is solved so p is hit at t.
BezierSegment forward_segment(const BezierSegment& left, int order, Point2 p, double t, Point2 end) {
  const int k = left.degree();
  std::vector<Point2> tail(static_cast<std::size_t>(k - order), Point2{});
  tail.back() = end;
  BezierSegment seg = order == 2 ? enforce_c2_forward(left, tail) : enforce_c1_forward(left, tail);
  // Free index f = order + 1 (c3 for quintics, c2 for quartics); c_{k-1} = (c_f + c_k) / 2
  // holds because k - 1 = f + 1 for both degrees.
  const auto f = static_cast<std::size_t>(order + 1);
  const auto kk = static_cast<std::size_t>(k);
  std::vector<double> b(kk + 1);
  bernstein_basis(k, t, b);
  Point2 known{};
  for (std::size_t j = 0; j < f; ++j) known = known + b[j] * seg[j];
  known = known + (0.5 * b[kk - 1]) * end + b[kk] * end;
  const double coeff = b[f] + 0.5 * b[kk - 1];
  seg[f] = (1.0 / coeff) * (p - known);
  seg[kk - 1] = 0.5 * (seg[f] + end);
  return seg;
}

void finish_report(EditReport* report, Clock::time_point start) {
  if (report) report->seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::size_t CurveDocument::joint_count() const {
  if (!mode.geometric() || segments.empty()) return 0;
  return closed() ? segments.size() : segments.size() - 1;
}

CurveDocument make_document(ContinuityMode mode) {
  CurveDocument doc;
  doc.mode = mode;
  return doc;
}

double chord_parameter(Point2 a, Point2 p, Point2 b) {
  const double l0 = distance(a, p);
  const double l1 = distance(p, b);
  if (!(l0 + l1 > 0.0)) throw DegenerateInputError("zero chord length");
  return l0 / (l0 + l1);
}

BezierSegment interpolating_quadratic(Point2 p0, Point2 p1, Point2 p2, double t) {
  if (!(t > 0.0 && t < 1.0)) throw DegenerateInputError("interpolation parameter outside (0, 1)");
  const double u = 1.0 - t;
  const Point2 c1 = (1.0 / (2.0 * t * u)) * (p1 - (u * u) * p0 - (t * t) * p2);
  return BezierSegment{p0, c1, p2};
}

ParabolaModel fit_parabola(const BezierSegment& seg, double t_axis, int samples) {
  // Q = a0 + a2 (t^2 - 2 t_axis t), so a1 = -2 a2 t_axis exactly.
  double s1 = 0.0, su = 0.0, suu = 0.0, sk = 0.0, suk = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = samples == 1 ? 0.0 : static_cast<double>(j) / (samples - 1);
    double kappa = 0.0;
    try {
      kappa = curvature(seg, t);
    } catch (const DegenerateSpeedError&) {
      continue;
    }
    const double u = t * t - 2.0 * t_axis * t;
    s1 += 1.0;
    su += u;
    suu += u * u;
    sk += kappa;
    suk += u * kappa;
  }
  ParabolaModel q;
  if (s1 == 0.0) return q;
  const double det = s1 * suu - su * su;
  if (std::abs(det) <= 1e-14 * std::max(1.0, s1 * suu)) {
    q.a0 = sk / s1;
    return q;
  }
  q.a0 = (suu * sk - su * suk) / det;
  q.a2 = (s1 * suk - su * sk) / det;
  q.a1 = -2.0 * q.a2 * t_axis;
  return q;
}

CurveDocument bootstrap_three_points(Point2 p0, Point2 p1, Point2 p2, ContinuityMode mode, const BuildOptions& options,
                                     EditReport* report) {
  const auto start = Clock::now();
  for (const auto& p : {p0, p1, p2})
    if (!is_finite(p)) throw ArgumentError("point coordinates must be finite");
  const double scale = scale_of({p0, p1, p2});
  check_distinct(p0, p1, scale);
  check_distinct(p1, p2, scale);
  const double t = chord_parameter(p0, p1, p2);

  CurveDocument doc = make_document(mode);
  doc.points = {p0, p1, p2};
  SegmentRecord rec;
  rec.point_index = 1;
  doc.segments.push_back(rec);

  WindowInit init;
  init.indices = {0};
  init.curves = {raise_to(interpolating_quadratic(p0, p1, p2, t), mode.segment_degree())};
  init.t_hat = {t};
  init.targets = {p1};
  apply_window(doc, init, solve_window(init, mode, options), report);
  finish_report(report, start);
  return doc;
}

CurveDocument insert_point(const CurveDocument& doc, Point2 p, const BuildOptions& options, EditReport* report) {
  if (doc.closed()) throw ArgumentError("cannot insert into a closed curve");
  if (!is_finite(p)) throw ArgumentError("point coordinates must be finite");
  const auto start = Clock::now();
  if (!doc.points.empty()) {
    std::vector<Point2> pts = doc.points;
    pts.push_back(p);
    check_distinct(doc.points.back(), p, scale_of(pts));
  }
  if (doc.points.size() < 2) {
    CurveDocument out = doc;
    out.points.push_back(p);
    if (report) *report = {};
    return out;
  }
  if (doc.points.size() == 2) return bootstrap_three_points(doc.points[0], doc.points[1], p, doc.mode, options, report);

  const ContinuityMode mode = doc.mode;
  const int order = mode.order;
  const std::size_t k = static_cast<std::size_t>(mode.segment_degree());
  const std::size_t count = doc.segments.size();
  const std::size_t m = doc.points.size() - 1;
  const Point2 p_last = doc.points[m];

  const SegmentRecord& old_last = doc.segments[count - 1];
  const double t_old = old_last.t;
  if (!(t_old > 0.0 && t_old < 1.0)) throw InvariantError("stored interpolation parameter outside (0, 1)");
  const double z = 0.5 * (1.0 + t_old);
  BezierSegment left = subdivide(old_last.curve, z).first;
  const double t_left = t_old / z;

  WindowInit init;
  if (count >= 2) {
    const SegmentRecord& prev = doc.segments[count - 2];
    BezierSegment before = prev.curve;
    if (!mode.geometric()) {
      // Restore parametric continuity at the joint the subdivision broke.
      const Point2 joint = 0.5 * (before[k - 1] + left[1]);
      before[k] = joint;
      left[0] = joint;
      if (order == 2) left[2] = before[k - 2] - 2.0 * before[k - 1] + 2.0 * left[1];
    }
    init.indices = {count - 2, count - 1, count};
    init.curves = {before, left};
    init.t_hat = {prev.t, t_left};
    init.targets = {doc.points[prev.point_index], doc.points[old_last.point_index]};
    init.left = count - 2 == 0 ? WindowEnd::Fixed : WindowEnd::Frozen;
  } else {
    init.indices = {0, 1};
    init.curves = {left};
    init.t_hat = {t_left};
    init.targets = {doc.points[old_last.point_index]};
    init.left = WindowEnd::Fixed;
  }
  const double t_new = chord_parameter(left.back(), p_last, p);
  init.t_hat.push_back(t_new);
  init.targets.push_back(p_last);
  init.right = WindowEnd::Fixed;
  // Second start: the new segment as the quadratic through the joint, p_i and
  // p_{i+1}; its head is re-derived from the joint during the solve.
  WindowInit alt = init;
  init.curves.push_back(forward_segment(left, order, p_last, t_new, p));
  alt.curves.push_back(raise_to(interpolating_quadratic(left.back(), p_last, p, t_new), mode.segment_degree()));

  CurveDocument out = doc;
  out.points.push_back(p);
  SegmentRecord rec;
  rec.point_index = m;
  out.segments.push_back(rec);
  if (mode.geometric()) {
    out.joints.resize(joint_slots(out, out.segments.size()));
    // Joints touched by the window are re-estimated from the initial geometry.
    init.joints.clear();
  }
  const auto [chosen, result] = solve_best({init, alt}, mode, options);
  apply_window(out, chosen == 0 ? init : alt, result, report);
  finish_report(report, start);
  return out;
}

namespace {

// Initial P_{n+1}, P_0, P_1 of a closure. a and b are the old last and first
// segments of the open curve that already ends at p_0.
std::vector<BezierSegment> closure_init(const BezierSegment& a, const BezierSegment& b, int order, Point2 p_last,
                                        double t_last, Point2 p0, double t0, Point2 p1, double t1, Point2 c00,
                                        Point2 c0k, const BezierSegment& a_left, const BezierSegment& b_right) {
  const std::size_t k = static_cast<std::size_t>(a.degree());
  const int kd = a.degree();
  if (order == 1) {
    BezierSegment pl = a_left;
    pl[1] = a[1];
    BezierSegment pf = b_right;
    pf[k - 1] = b[k - 1];
    std::vector<Point2> mid(k + 1);
    mid[0] = c00;
    mid[1] = 2.0 * c00 - pl[k - 1];
    mid[k] = c0k;
    mid[k - 1] = 2.0 * c0k - pf[1];
    std::vector<double> basis(k + 1);
    bernstein_basis(kd, t0, basis);
    Point2 known{};
    for (std::size_t j = 0; j <= k; ++j)
      if (j != 2) known = known + basis[j] * mid[j];
    mid[2] = (1.0 / basis[2]) * (p0 - known);
    return {pl, BezierSegment(std::move(mid)), pf};
  }

  // Quintic: unknowns a3, a4 (of P_{n+1}) and b3, b4 (of P_0); P_0's head and
  // P_1's head follow from C2 at c00 and c0k.
  std::vector<double> bl(k + 1), b0(k + 1), bh(k + 1), b1(k + 1);
  bernstein_basis(kd, t_last, bl);
  bernstein_basis(kd, t0, b0);
  bernstein_basis(kd, 0.5, bh);
  bernstein_basis(kd, t1, b1);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 2> rhs;
  auto set_rhs = [&](int row, Point2 v) {
    rhs(row, 0) = v.x;
    rhs(row, 1) = v.y;
  };
  // P_{n+1}(t_last) = p_last.
  m(0, 0) = bl[3];
  m(0, 1) = bl[4];
  set_rhs(0, p_last - (bl[0] * a[0] + bl[1] * a[1] + bl[2] * a[2] + bl[5] * c00));
  // P_0 = [c00, 2 c00 - a4, a3 - 4 a4 + 4 c00, b3, b4, c0k].
  auto p0_row = [&](int row, const std::vector<double>& w, Point2 target) {
    m(row, 0) = w[2];
    m(row, 1) = -w[1] - 4.0 * w[2];
    m(row, 2) = w[3];
    m(row, 3) = w[4];
    set_rhs(row, target - ((w[0] + 2.0 * w[1] + 4.0 * w[2]) * c00 + w[5] * c0k));
  };
  p0_row(1, b0, p0);
  p0_row(2, bh, 0.25 * (c00 + 2.0 * p0 + c0k));
  // P_1 = [c0k, 2 c0k - b4, b3 - 4 b4 + 4 c0k, b[3], b[4], b[5]].
  m(3, 2) = b1[2];
  m(3, 3) = -b1[1] - 4.0 * b1[2];
  set_rhs(3, p1 - ((b1[0] + 2.0 * b1[1] + 4.0 * b1[2]) * c0k + b1[3] * b[3] + b1[4] * b[4] + b1[5] * b[5]));

  Eigen::Matrix<double, 4, 2> sol;
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(m);
  if (lu.isInvertible())
    sol = lu.solve(rhs);
  else
    sol = m.completeOrthogonalDecomposition().solve(rhs);
  auto at = [&](int r) { return Point2{sol(r, 0), sol(r, 1)}; };
  const Point2 a3 = at(0), a4 = at(1), b3 = at(2), b4 = at(3);
  BezierSegment pl{a[0], a[1], a[2], a3, a4, c00};
  BezierSegment mid{c00, 2.0 * c00 - a4, a3 - 4.0 * a4 + 4.0 * c00, b3, b4, c0k};
  BezierSegment pf{c0k, 2.0 * c0k - b4, b3 - 4.0 * b4 + 4.0 * c0k, b[3], b[4], b[5]};
  return {pl, mid, pf};
}

}  // namespace

CurveDocument close_curve(const CurveDocument& doc, const BuildOptions& options, EditReport* report) {
  if (doc.closed()) throw ArgumentError("curve is already closed");
  if (doc.points.size() < 3) throw DomainError("closing needs at least three points");
  const auto start = Clock::now();
  const CurveDocument open = insert_point(doc, doc.points.front(), options);

  const ContinuityMode mode = doc.mode;
  const std::size_t n1 = open.segments.size();  // segments before the bridge; last is P_{n+1}
  const SegmentRecord& last = open.segments[n1 - 1];
  const SegmentRecord& first = open.segments[0];
  if (!(last.t > 0.0 && last.t < 1.0 && first.t > 0.0 && first.t < 1.0))
    throw InvariantError("stored interpolation parameter outside (0, 1)");
  const double z_last = 0.5 * (last.t + 1.0);
  const double z_first = 0.5 * first.t;
  const BezierSegment a_left = subdivide(last.curve, z_last).first;
  const BezierSegment b_right = subdivide(first.curve, z_first).second;
  const double t_last = last.t / z_last;
  const double t_first = first.t / (2.0 - 2.0 * z_first);
  const Point2 c00 = a_left.back();
  const Point2 c0k = b_right.front();
  const Point2 p0 = doc.points.front();
  const double t0 = chord_parameter(c00, p0, c0k);
  const Point2 p_last = open.points[last.point_index];
  const Point2 p1 = open.points[first.point_index];

  CurveDocument out = open;
  out.points.pop_back();
  out.topology = Topology::Closed;
  SegmentRecord bridge;
  bridge.point_index = 0;
  out.segments.push_back(bridge);
  if (mode.geometric()) out.joints.resize(joint_slots(out, out.segments.size()));

  WindowInit init;
  init.indices = {n1 - 1, n1, 0};
  init.curves = closure_init(last.curve, first.curve, mode.order, p_last, t_last, p0, t0, p1, t_first, c00, c0k,
                             a_left, b_right);
  init.t_hat = {t_last, t0, t_first};
  init.targets = {p_last, p0, p1};
  const bool wrap = out.segments.size() == 3;
  init.left = wrap ? WindowEnd::Wrap : WindowEnd::Frozen;
  init.right = init.left;
  // Second start: the subdivided parts as they are and a quadratic bridge.
  WindowInit alt = init;
  BezierSegment alt_left = a_left;
  BezierSegment alt_right = b_right;
  const auto k = static_cast<std::size_t>(mode.segment_degree());
  for (std::size_t j = 1; j <= static_cast<std::size_t>(mode.order); ++j) {
    alt_left[j] = last.curve[j];
    alt_right[k - j] = first.curve[k - j];
  }
  alt.curves = {alt_left, raise_to(interpolating_quadratic(c00, p0, c0k, t0), mode.segment_degree()), alt_right};
  const auto [chosen, result] = solve_best({init, alt}, mode, options);
  apply_window(out, chosen == 0 ? init : alt, result, report);
  finish_report(report, start);
  return out;
}

std::vector<std::size_t> edit_window(const CurveDocument& doc, std::size_t index) {
  const std::size_t count = doc.segments.size();
  if (index >= doc.points.size()) throw DomainError("point index out of range");
  if (count == 0) return {};
  if (doc.closed()) {
    const std::size_t j = (index + count - 1) % count;
    return {(j + count - 1) % count, j, (j + 1) % count};
  }
  if (count == 1) return {0};
  if (count == 2) return {0, 1};
  const std::size_t m = doc.points.size() - 1;
  if (index <= 1) return {0, 1};
  if (index >= m - 1) return {count - 2, count - 1};
  return {index - 2, index - 1, index};
}

namespace {

WindowInit move_init(const CurveDocument& doc, std::size_t index) {
  WindowInit init;
  init.indices = edit_window(doc, index);
  const std::size_t count = doc.segments.size();
  const std::size_t k = static_cast<std::size_t>(doc.mode.segment_degree());
  const bool wrap = doc.closed() && count == 3;
  for (std::size_t s : init.indices) {
    const SegmentRecord& rec = doc.segments[s];
    init.curves.push_back(rec.curve);
    init.t_hat.push_back(std::clamp(rec.t, 1e-6, 1.0 - 1e-6));
    init.targets.push_back(doc.points[rec.point_index]);
    init.parabolas.push_back(rec.parabola);
  }
  if (doc.closed()) {
    init.left = init.right = wrap ? WindowEnd::Wrap : WindowEnd::Frozen;
  } else {
    init.left = init.indices.front() == 0 ? WindowEnd::Fixed : WindowEnd::Frozen;
    init.right = init.indices.back() == count - 1 ? WindowEnd::Fixed : WindowEnd::Frozen;
    if (index == 0) init.curves.front()[0] = doc.points[0];
    if (index == doc.points.size() - 1) init.curves.back()[k] = doc.points.back();
  }
  init.joints = window_joints(doc, init.indices, wrap);
  return init;
}

CurveDocument move_step(const CurveDocument& doc, std::size_t index, Point2 from, Point2 to,
                        const BuildOptions& options, EditReport* report, int depth) {
  CurveDocument out = doc;
  out.points[index] = to;
  const WindowInit init = move_init(out, index);
  try {
    apply_window(out, init, solve_window(init, doc.mode, options), report);
    return out;
  } catch (const InfeasibleError&) {
    if (depth >= 8) throw;
  }
  // Too far for the warm start: approach the target through a midpoint.
  const Point2 mid = 0.5 * (from + to);
  const CurveDocument half = move_step(doc, index, from, mid, options, report, depth + 1);
  if (report) ++report->continuation_steps;
  return move_step(half, index, mid, to, options, report, depth + 1);
}

}  // namespace

CurveDocument move_point(const CurveDocument& doc, std::size_t index, Point2 position, const BuildOptions& options,
                         EditReport* report) {
  if (index >= doc.points.size()) throw DomainError("point index out of range");
  if (!is_finite(position)) throw ArgumentError("point coordinates must be finite");
  const auto start = Clock::now();
  const std::size_t n = doc.points.size();
  const double scale = scale_of(doc.points);
  if (doc.closed() || index > 0) check_distinct(doc.points[(index + n - 1) % n], position, scale);
  if (doc.closed() || index + 1 < n) check_distinct(doc.points[(index + 1) % n], position, scale);
  if (doc.segments.empty()) {
    CurveDocument out = doc;
    out.points[index] = position;
    if (report) *report = {};
    return out;
  }
  if (report) *report = {};
  CurveDocument out = move_step(doc, index, doc.points[index], position, options, report, 0);
  finish_report(report, start);
  return out;
}

CurveDocument build_curve(const std::vector<Point2>& points, ContinuityMode mode, Topology topology,
                          const BuildOptions& options, std::vector<EditReport>* reports) {
  CurveDocument doc = make_document(mode);
  for (const auto& p : points) {
    EditReport r;
    doc = insert_point(doc, p, options, &r);
    if (reports && !r.window.empty()) reports->push_back(std::move(r));
  }
  if (topology == Topology::Closed) {
    EditReport r;
    doc = close_curve(doc, options, &r);
    if (reports) reports->push_back(std::move(r));
  }
  return doc;
}

CurveDocument EditHistory::undo() {
  if (snapshots_.empty()) throw InvariantError("nothing to undo");
  CurveDocument doc = std::move(snapshots_.back());
  snapshots_.pop_back();
  return doc;
}

}  // namespace pkc
