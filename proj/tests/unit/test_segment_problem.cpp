#include <doctest.h>

#include "oracles.hpp"
#include "pkcurve/builder.hpp"
#include "pkcurve/segment_problem.hpp"

using namespace pkc;

namespace {

struct Window {
  std::vector<WindowSegment> segs;
  std::vector<GeometricJointParams> joints;
};

// Three quintic segments, consecutive ones joined in the given mode.
Window chain(ContinuityMode mode, oracle::Gen& gen) {
  Window w;
  int k = mode.segment_degree();
  BezierSegment prev = gen.smooth_segment(k);
  for (int s = 0; s < 3; ++s) {
    BezierSegment cur = prev;
    if (s > 0) {
      std::vector<Point2> cps{prev[k]};
      double alpha = mode.geometric() ? gen.uniform(0.7, 1.4) : 1.0;
      double eta = mode.geometric() ? gen.uniform(1.0, 3.0) : 2.0;
      Point2 leg = prev[k] - prev[k - 1];
      cps.push_back(prev[k] + alpha * leg);
      if (mode.order == 2) cps.push_back(cps[1] - alpha * alpha * (prev[k - 1] - prev[k - 2]) + eta * leg);
      // continue roughly along the previous direction
      while (static_cast<int>(cps.size()) <= k) cps.push_back(cps.back() + leg * 0.8 + gen.point(-0.05, 0.05));
      cur = BezierSegment(cps);
      if (mode.geometric()) w.joints.push_back({alpha, eta});
    }
    double t_hat = gen.uniform(0.35, 0.65);
    w.segs.push_back({cur, evaluate(cur, t_hat), t_hat, fit_parabola(cur, t_hat), false});
    prev = cur;
  }
  return w;
}

Vector perturbed(const SegmentProblem& p, oracle::Gen& gen, double amount) {
  Vector z = p.start_vector();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] += gen.uniform(-amount, amount);
    z[i] = std::clamp(z[i], p.lower_bounds()[i], p.upper_bounds()[i]);
  }
  return z;
}

const ContinuityMode kModes[] = {ContinuityMode::C1(), ContinuityMode::C2(), ContinuityMode::G1(),
                                 ContinuityMode::G2()};

}  // namespace

TEST_CASE("start vector reproduces the window and satisfies its constraints") {
  oracle::Gen gen(31);
  for (auto mode : kModes) {
    auto w = chain(mode, gen);
    SegmentProblem p(w.segs, mode, WindowEnd::Fixed, WindowEnd::Fixed, {}, {}, w.joints);
    auto sol = p.unpack(p.start_vector());
    for (std::size_t s = 0; s < 3; ++s)
      for (int j = 0; j <= mode.segment_degree(); ++j) CHECK(distance(sol.segments[s][j], w.segs[s].initial[j]) <= 1e-14);
    Vector h;
    p.constraints(p.start_vector(), h, nullptr);
    CHECK(h.lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(p.joint_count() == (mode.geometric() ? 2u : 0u));
  }
}

TEST_CASE("property: eliminated constraints hold for every z") {
  oracle::Gen gen(32);
  for (auto mode : kModes) {
    for (WindowEnd end : {WindowEnd::Fixed, WindowEnd::Frozen}) {
      auto w = chain(mode, gen);
      SegmentProblem p(w.segs, mode, end, end, {}, {}, w.joints);
      for (int trial = 0; trial < 10; ++trial) {
        auto sol = p.unpack(perturbed(p, gen, 0.3));
        int k = mode.segment_degree();
        for (std::size_t s = 0; s + 1 < 3; ++s) {
          CHECK(distance(sol.segments[s][k], sol.segments[s + 1][0]) <= 1e-14);
          if (!mode.geometric())
            CHECK(joint_residual(sol.segments[s], sol.segments[s + 1], mode).max_abs() <= 1e-12);
        }
        // pinned ends
        CHECK(sol.segments.front()[0] == w.segs.front().initial[0]);
        CHECK(sol.segments.back()[k] == w.segs.back().initial[k]);
        if (end == WindowEnd::Frozen) {
          for (int j = 0; j <= mode.order; ++j) {
            CHECK(sol.segments.front()[j] == w.segs.front().initial[j]);
            CHECK(sol.segments.back()[k - j] == w.segs.back().initial[k - j]);
          }
        }
      }
    }
  }
}

TEST_CASE("t is boxed around its initial value") {
  oracle::Gen gen(33);
  auto w = chain(ContinuityMode::C2(), gen);
  SegmentProblem p(w.segs, ContinuityMode::C2(), WindowEnd::Fixed, WindowEnd::Fixed, {});
  Vector z = p.lower_bounds().cwiseMax(-1e3);
  auto sol = p.unpack(z);
  for (std::size_t s = 0; s < 3; ++s) CHECK(sol.t[s] == doctest::Approx(w.segs[s].t_hat / 2));
  z = p.upper_bounds().cwiseMin(1e3);
  sol = p.unpack(z);
  for (std::size_t s = 0; s < 3; ++s) CHECK(sol.t[s] == doctest::Approx((w.segs[s].t_hat + 1) / 2));
}

TEST_CASE("objective gradient matches central differences") {
  oracle::Gen gen(34);
  for (auto mode : kModes) {
    auto w = chain(mode, gen);
    SegmentProblem p(w.segs, mode, WindowEnd::Fixed, WindowEnd::Frozen, {0.1, 0.1}, {}, w.joints);
    Vector z = perturbed(p, gen, 0.01);
    Vector g;
    p.objective(z, &g);
    std::vector<double> x(z.data(), z.data() + z.size());
    auto fd = oracle::central_gradient(
        [&](const std::vector<double>& v) { return p.objective(Eigen::Map<const Vector>(v.data(), v.size()), nullptr); },
        x, 1e-6);
    for (Eigen::Index i = 0; i < z.size(); ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("constraint Jacobian matches central differences") {
  oracle::Gen gen(35);
  for (auto mode : kModes) {
    auto w = chain(mode, gen);
    SegmentProblem p(w.segs, mode, WindowEnd::Frozen, WindowEnd::Fixed, {}, {}, w.joints);
    Vector z = perturbed(p, gen, 0.05);
    Vector h;
    Matrix J;
    p.constraints(z, h, &J);
    REQUIRE(J.rows() == p.constraint_count());
    REQUIRE(J.cols() == p.dimension());
    for (Eigen::Index c = 0; c < z.size(); ++c) {
      Vector zp = z, zm = z, hp, hm;
      zp[c] += 1e-6;
      zm[c] -= 1e-6;
      p.constraints(zp, hp, nullptr);
      p.constraints(zm, hm, nullptr);
      Vector col = (hp - hm) / 2e-6;
      CHECK((col - J.col(c)).lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + col.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("Gauss-Newton matrix equals the Hessian at a zero-residual point") {
  // Straight segments with zero parabolas and no regularizers: every residual vanishes.
  std::vector<WindowSegment> segs;
  for (int s = 0; s < 2; ++s) {
    std::vector<Point2> cps;
    for (int j = 0; j <= 5; ++j) cps.push_back({s + j / 5.0, 0.5 * (s + j / 5.0)});
    BezierSegment seg(cps);
    segs.push_back({seg, evaluate(seg, 0.5), 0.5, {}, true});
  }
  SegmentProblem p(segs, ContinuityMode::C2(), WindowEnd::Fixed, WindowEnd::Fixed, {0.0, 0.0});
  Vector z = p.start_vector();
  CHECK(p.objective(z, nullptr) <= 1e-20);
  Matrix jtj;
  REQUIRE(p.gauss_newton_matrix(z, jtj));
  Matrix hess(z.size(), z.size());
  for (Eigen::Index c = 0; c < z.size(); ++c) {
    Vector zp = z, zm = z, gp, gm;
    zp[c] += 1e-5;
    zm[c] -= 1e-5;
    p.objective(zp, &gp);
    p.objective(zm, &gm);
    hess.col(c) = (gp - gm) / 2e-5;
  }
  CHECK((2.0 * jtj - hess).lpNorm<Eigen::Infinity>() <= 1e-5 * (1.0 + hess.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("two-stage solve keeps the constraints and lowers the parabolic term") {
  oracle::Gen gen(36);
  for (auto mode : kModes) {
    auto w = chain(mode, gen);
    SegmentProblem p(w.segs, mode, WindowEnd::Fixed, WindowEnd::Fixed, {0.1, 0.1}, {}, w.joints);
    auto out = solve_two_stage(p, {}, p.start_vector());
    REQUIRE(out.stage_reports.size() == 2);
    Vector h;
    p.constraints(out.unknowns, h, nullptr);
    CHECK(h.lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(out.stage_reports[1].final_objective <= out.stage_reports[1].initial_objective);
    CHECK(p.weights().lambda_e == 0.1);
    auto sol = p.unpack(out.unknowns);
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(distance(evaluate(sol.segments[s], sol.t[s]), w.segs[s].target) <= 1e-8);
      CHECK(std::abs(sol.parabolas[s].extremum_residual(sol.t[s])) <= 1e-8);
    }
  }
}
