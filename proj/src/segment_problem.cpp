#include "pkcurve/segment_problem.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

#include "pkcurve/errors.hpp"

namespace pkc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Affine expression of one control point in terms of free points.
struct PointExpr {
  std::vector<std::pair<std::size_t, double>> terms;
  Point2 constant{};
  bool defined = false;

  static PointExpr pinned(Point2 p) { return {{}, p, true}; }
  static PointExpr free_point(std::size_t f) { return {{{f, 1.0}}, {}, true}; }
};

PointExpr combine(std::initializer_list<std::pair<double, const PointExpr*>> parts) {
  PointExpr out;
  out.defined = true;
  for (const auto& [c, e] : parts) {
    if (!e->defined) throw InvariantError("joint expression refers to an undefined control point");
    out.constant = out.constant + c * e->constant;
    for (const auto& [f, w] : e->terms) {
      bool merged = false;
      for (auto& t : out.terms) {
        if (t.first == f) {
          t.second += c * w;
          merged = true;
          break;
        }
      }
      if (!merged) out.terms.emplace_back(f, c * w);
    }
  }
  return out;
}

// Head of `right` implied by a parametric joint with `left`.
void parametric_head(const std::vector<PointExpr>& left, std::vector<PointExpr>& right, int order) {
  const std::size_t k = left.size() - 1;
  right[0] = combine({{1.0, &left[k]}});
  right[1] = combine({{2.0, &left[k]}, {-1.0, &left[k - 1]}});
  if (order == 2) right[2] = combine({{1.0, &left[k - 2]}, {-4.0, &left[k - 1]}, {4.0, &left[k]}});
}

}  // namespace

SegmentProblem::SegmentProblem(std::vector<WindowSegment> window, ContinuityMode mode, WindowEnd left,
                               WindowEnd right, EnergyWeights weights, QuadratureRule rule,
                               std::vector<GeometricJointParams> joint_start)
    : window_(std::move(window)), mode_(mode), left_(left), right_(right), weights_(weights), rule_(rule) {
  if (window_.empty()) throw ArgumentError("segment window is empty");
  if ((left_ == WindowEnd::Wrap) != (right_ == WindowEnd::Wrap))
    throw ArgumentError("a wrapped window must wrap at both ends");
  const bool wrap = left_ == WindowEnd::Wrap;
  if (wrap && window_.size() < 2) throw ArgumentError("a wrapped window needs at least two segments");
  degree_ = mode_.segment_degree();
  for (const auto& w : window_) {
    if (w.initial.degree() != degree_) throw ShapeError("window segment degree does not match the continuity mode");
    if (!(w.t_hat > 0.0 && w.t_hat < 1.0)) throw ArgumentError("t_hat must lie strictly inside (0, 1)");
  }

  const std::size_t w = window_.size();
  const std::size_t k = static_cast<std::size_t>(degree_);
  const int order = mode_.order;
  block_ = 2 * (k + 1) + 4;
  joint_count_ = mode_.geometric() ? (w - 1 + (wrap ? 1 : 0)) : 0;
  const std::size_t full_size = w * block_ + joint_count_ * static_cast<std::size_t>(order);

  // Control point expressions; free points are numbered as they are met.
  std::vector<std::vector<PointExpr>> expr(w, std::vector<PointExpr>(k + 1));
  std::vector<std::pair<std::size_t, std::size_t>> free_origin;
  const std::size_t head = mode_.geometric() ? 1 : static_cast<std::size_t>(order) + 1;

  if (left_ == WindowEnd::Fixed) expr[0][0] = PointExpr::pinned(window_[0].initial[0]);
  if (left_ == WindowEnd::Frozen)
    for (std::size_t j = 0; j <= static_cast<std::size_t>(order); ++j)
      expr[0][j] = PointExpr::pinned(window_[0].initial[j]);

  for (std::size_t s = 0; s < w; ++s) {
    if (s > 0) {
      if (mode_.geometric())
        expr[s][0] = combine({{1.0, &expr[s - 1][k]}});
      else
        parametric_head(expr[s - 1], expr[s], order);
    }
    if (s + 1 == w) {
      if (right_ == WindowEnd::Fixed) expr[s][k] = PointExpr::pinned(window_[s].initial[k]);
      if (right_ == WindowEnd::Frozen)
        for (std::size_t j = k - static_cast<std::size_t>(order); j <= k; ++j)
          expr[s][j] = PointExpr::pinned(window_[s].initial[j]);
    }
    for (std::size_t j = 0; j <= k; ++j) {
      if (expr[s][j].defined) continue;
      if (wrap && s == 0 && j < head) continue;
      expr[s][j] = PointExpr::free_point(free_origin.size());
      free_origin.emplace_back(s, j);
    }
  }
  if (wrap) {
    if (mode_.geometric())
      expr[0][0] = combine({{1.0, &expr[w - 1][k]}});
    else
      parametric_head(expr[w - 1], expr[0], order);
  }

  // Unknown layout: free point coordinates, then a0, a1, a2 [, t] per segment,
  // then alpha [, eta] per joint.
  std::size_t n = 2 * free_origin.size();
  for (const auto& ws : window_) n += ws.fix_t ? 3 : 4;
  n += joint_count_ * static_cast<std::size_t>(order);
  const auto ni = static_cast<Eigen::Index>(n);

  map_ = Matrix::Zero(static_cast<Eigen::Index>(full_size), ni);
  offset_ = Vector::Zero(static_cast<Eigen::Index>(full_size));
  lower_ = Vector::Constant(ni, -kInf);
  upper_ = Vector::Constant(ni, kInf);
  start_ = Vector::Zero(ni);

  for (std::size_t s = 0; s < w; ++s) {
    for (std::size_t j = 0; j <= k; ++j) {
      const auto row = static_cast<Eigen::Index>(segment_offset(s) + 2 * j);
      const PointExpr& e = expr[s][j];
      offset_[row] = e.constant.x;
      offset_[row + 1] = e.constant.y;
      for (const auto& [f, c] : e.terms) {
        map_(row, static_cast<Eigen::Index>(2 * f)) += c;
        map_(row + 1, static_cast<Eigen::Index>(2 * f + 1)) += c;
      }
    }
  }
  for (std::size_t f = 0; f < free_origin.size(); ++f) {
    const auto [s, j] = free_origin[f];
    start_[static_cast<Eigen::Index>(2 * f)] = window_[s].initial[j].x;
    start_[static_cast<Eigen::Index>(2 * f + 1)] = window_[s].initial[j].y;
  }

  Eigen::Index zi = static_cast<Eigen::Index>(2 * free_origin.size());
  for (std::size_t s = 0; s < w; ++s) {
    const auto base = static_cast<Eigen::Index>(segment_offset(s) + 2 * (k + 1));
    const WindowSegment& ws = window_[s];
    const double coeffs[3] = {ws.parabola.a0, ws.parabola.a1, ws.parabola.a2};
    for (int m = 0; m < 3; ++m) {
      map_(base + m, zi) = 1.0;
      start_[zi] = coeffs[m];
      ++zi;
    }
    if (ws.fix_t) {
      offset_[base + 3] = ws.t_hat;
    } else {
      map_(base + 3, zi) = 1.0;
      lower_[zi] = 0.5 * ws.t_hat;
      upper_[zi] = 0.5 * (ws.t_hat + 1.0);
      start_[zi] = ws.t_hat;
      ++zi;
    }
  }
  for (std::size_t j = 0; j < joint_count_; ++j) {
    const auto base = static_cast<Eigen::Index>(joint_offset(j));
    GeometricJointParams p;
    if (j < joint_start.size()) {
      p = joint_start[j];
    } else {
      const std::size_t l = j + 1 < w ? j : w - 1;
      const std::size_t r = j + 1 < w ? j + 1 : 0;
      try {
        p = estimate_joint_params(window_[l].initial, window_[r].initial);
      } catch (const DegenerateInputError&) {
        p = {};
      }
    }
    map_(base, zi) = 1.0;
    lower_[zi] = kAlphaMin;
    start_[zi] = std::max(p.alpha, kAlphaMin);
    ++zi;
    if (order == 2) {
      map_(base + 1, zi) = 1.0;
      start_[zi] = p.eta;
      ++zi;
    }
  }

  constraint_rows_ = static_cast<Eigen::Index>(3 * w + joint_count_ * 2 * static_cast<std::size_t>(order));
}

std::size_t SegmentProblem::joint_offset(std::size_t j) const {
  return window_.size() * block_ + j * static_cast<std::size_t>(mode_.order);
}

Vector SegmentProblem::full_vector(const Vector& z) const { return map_ * z + offset_; }

BezierSegment SegmentProblem::segment_at(const Vector& x, std::size_t s) const {
  std::vector<Point2> pts(static_cast<std::size_t>(degree_) + 1);
  const auto base = static_cast<Eigen::Index>(segment_offset(s));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const auto row = base + static_cast<Eigen::Index>(2 * j);
    pts[j] = {x[row], x[row + 1]};
  }
  return BezierSegment(std::move(pts));
}

double SegmentProblem::objective(const Vector& z, Vector* grad) const {
  const Vector x = full_vector(z);
  const std::size_t k = static_cast<std::size_t>(degree_);
  const std::size_t unknowns = segment_unknown_count(degree_);
  Vector gx = Vector::Zero(x.size());
  double total = 0.0;
  std::vector<double> g(unknowns);
  for (std::size_t s = 0; s < window_.size(); ++s) {
    const BezierSegment seg = segment_at(x, s);
    const auto base = static_cast<Eigen::Index>(segment_offset(s));
    const auto pb = base + static_cast<Eigen::Index>(2 * (k + 1));
    const ParabolaModel q{x[pb], x[pb + 1], x[pb + 2]};
    total += segment_energy_and_gradient(seg, q, weights_, rule_, g);
    for (std::size_t i = 0; i < unknowns; ++i) gx[base + static_cast<Eigen::Index>(i)] = g[i];
  }
  if (grad) *grad = map_.transpose() * gx;
  return total;
}

bool SegmentProblem::gauss_newton_matrix(const Vector& z, Matrix& jtj) const {
  const Vector x = full_vector(z);
  const std::size_t k = static_cast<std::size_t>(degree_);
  const std::size_t rows = segment_residual_count(degree_, rule_);
  const std::size_t cols = segment_unknown_count(degree_);
  std::vector<double> r(rows);
  std::vector<double> j(rows * cols);
  jtj = Matrix::Zero(dimension(), dimension());
  for (std::size_t s = 0; s < window_.size(); ++s) {
    const auto base = static_cast<Eigen::Index>(segment_offset(s));
    const auto pb = base + static_cast<Eigen::Index>(2 * (k + 1));
    segment_energy_residuals(segment_at(x, s), {x[pb], x[pb + 1], x[pb + 2]}, weights_, rule_, r, j);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> js(
        j.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const Matrix block = js.transpose() * js;
    const auto mb = map_.middleRows(base, static_cast<Eigen::Index>(cols));
    jtj.noalias() += mb.transpose() * block * mb;
  }
  return true;
}

void SegmentProblem::constraints(const Vector& z, Vector& values, Matrix* jacobian) const {
  const Vector x = full_vector(z);
  const std::size_t w = window_.size();
  const std::size_t k = static_cast<std::size_t>(degree_);
  values.resize(constraint_rows_);
  Matrix jx;
  if (jacobian) jx = Matrix::Zero(constraint_rows_, x.size());

  auto point_col = [&](std::size_t s, std::size_t j) { return static_cast<Eigen::Index>(segment_offset(s) + 2 * j); };
  auto point = [&](std::size_t s, std::size_t j) {
    const auto c = point_col(s, j);
    return Point2{x[c], x[c + 1]};
  };
  // Adds coefficient c * I (2x2) at rows (row, row+1) for control point (s, j).
  auto add_point = [&](Eigen::Index row, std::size_t s, std::size_t j, double c) {
    const auto col = point_col(s, j);
    jx(row, col) += c;
    jx(row + 1, col + 1) += c;
  };

  std::vector<double> basis(k + 1);
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < w; ++s) {
    const BezierSegment seg = segment_at(x, s);
    const auto pb = point_col(s, k + 1);
    const double t = x[pb + 3];
    const Point2 r = evaluate(seg, t) - window_[s].target;
    values[row] = r.x;
    values[row + 1] = r.y;
    if (jacobian) {
      bernstein_basis(degree_, t, basis);
      for (std::size_t j = 0; j <= k; ++j) add_point(row, s, j, basis[j]);
      const Point2 d = derivatives(seg, t).first;
      jx(row, pb + 3) = d.x;
      jx(row + 1, pb + 3) = d.y;
    }
    row += 2;
    const double a1 = x[pb + 1];
    const double a2 = x[pb + 2];
    values[row] = a1 + 2.0 * a2 * t;
    if (jacobian) {
      jx(row, pb + 1) = 1.0;
      jx(row, pb + 2) = 2.0 * t;
      jx(row, pb + 3) = 2.0 * a2;
    }
    ++row;
  }

  for (std::size_t j = 0; j < joint_count_; ++j) {
    const std::size_t l = j + 1 < w ? j : w - 1;
    const std::size_t r = j + 1 < w ? j + 1 : 0;
    const auto jb = static_cast<Eigen::Index>(joint_offset(j));
    const double alpha = x[jb];
    const Point2 left_leg = point(l, k) - point(l, k - 1);
    const Point2 g1 = alpha * left_leg - (point(r, 1) - point(r, 0));
    values[row] = g1.x;
    values[row + 1] = g1.y;
    if (jacobian) {
      add_point(row, l, k, alpha);
      add_point(row, l, k - 1, -alpha);
      add_point(row, r, 1, -1.0);
      add_point(row, r, 0, 1.0);
      jx(row, jb) = left_leg.x;
      jx(row + 1, jb) = left_leg.y;
    }
    row += 2;
    if (mode_.order == 2) {
      const double eta = x[jb + 1];
      const Point2 inner_leg = point(l, k - 1) - point(l, k - 2);
      const Point2 g2 = (-(alpha * alpha) * inner_leg + eta * left_leg) - (point(r, 2) - point(r, 1));
      values[row] = g2.x;
      values[row + 1] = g2.y;
      if (jacobian) {
        add_point(row, l, k, eta);
        add_point(row, l, k - 1, -(alpha * alpha) - eta);
        add_point(row, l, k - 2, alpha * alpha);
        add_point(row, r, 2, -1.0);
        add_point(row, r, 1, 1.0);
        jx(row, jb) = -2.0 * alpha * inner_leg.x;
        jx(row + 1, jb) = -2.0 * alpha * inner_leg.y;
        jx(row, jb + 1) = left_leg.x;
        jx(row + 1, jb + 1) = left_leg.y;
      }
      row += 2;
    }
  }
  if (jacobian) *jacobian = jx * map_;
}

Vector SegmentProblem::start_vector() const { return start_; }

WindowSolution SegmentProblem::unpack(const Vector& z) const {
  const Vector x = full_vector(z);
  const std::size_t k = static_cast<std::size_t>(degree_);
  WindowSolution out;
  for (std::size_t s = 0; s < window_.size(); ++s) {
    out.segments.push_back(segment_at(x, s));
    const auto pb = static_cast<Eigen::Index>(segment_offset(s) + 2 * (k + 1));
    out.parabolas.push_back({x[pb], x[pb + 1], x[pb + 2]});
    out.t.push_back(x[pb + 3]);
  }
  for (std::size_t j = 0; j < joint_count_; ++j) {
    const auto jb = static_cast<Eigen::Index>(joint_offset(j));
    GeometricJointParams p;
    p.alpha = x[jb];
    if (mode_.order == 2) p.eta = x[jb + 1];
    out.joints.push_back(p);
  }
  return out;
}

std::vector<double> SegmentProblem::parabolic_energies(const Vector& z) const {
  const Vector x = full_vector(z);
  const std::size_t k = static_cast<std::size_t>(degree_);
  std::vector<double> out;
  for (std::size_t s = 0; s < window_.size(); ++s) {
    const auto pb = static_cast<Eigen::Index>(segment_offset(s) + 2 * (k + 1));
    out.push_back(parabolic_energy(segment_at(x, s), {x[pb], x[pb + 1], x[pb + 2]}, rule_));
  }
  return out;
}

SolveOutcome solve_two_stage(const SegmentProblem& problem, const SolverSettings& settings, const Vector& start) {
  SolveOutcome first = solve_stage(problem, settings, start);
  SegmentProblem bare = problem;
  bare.set_weights({0.0, 0.0});
  try {
    SolveOutcome second = solve_stage(bare, settings, first.unknowns);
    SolveOutcome out = std::move(second);
    out.stage_reports.insert(out.stage_reports.begin(), first.stage_reports.begin(), first.stage_reports.end());
    out.start_clamped = first.start_clamped;
    return out;
  } catch (const std::runtime_error&) {
    first.degraded = true;
    return first;
  }
}

}  // namespace pkc
