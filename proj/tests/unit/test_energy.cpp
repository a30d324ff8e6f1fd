#include <doctest.h>

#include "oracles.hpp"
#include "pkcurve/energy.hpp"
#include "pkcurve/errors.hpp"

using namespace pkc;

namespace {

ParabolaModel random_parabola(oracle::Gen& gen) { return {gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1)}; }

double integrand(const BezierSegment& seg, const ParabolaModel& q, double t) {
  auto c = oracle::power_coefficients(oracle::control_points(seg));
  Point2 d1 = oracle::power_derivative(c, t, 1);
  double e = oracle::curvature(seg, t) - q(t);
  return e * e * std::hypot(d1.x, d1.y);
}

std::vector<double> flatten(const BezierSegment& seg, const ParabolaModel& q) {
  std::vector<double> x;
  for (const auto& p : seg.control_points()) x.insert(x.end(), {p.x, p.y});
  x.insert(x.end(), {q.a0, q.a1, q.a2});
  return x;
}

std::pair<BezierSegment, ParabolaModel> unflatten(const std::vector<double>& x, int degree) {
  std::vector<Point2> cps;
  for (int j = 0; j <= degree; ++j) cps.push_back({x[2 * j], x[2 * j + 1]});
  std::size_t a = 2 * (degree + 1);
  return {BezierSegment(cps), ParabolaModel{x[a], x[a + 1], x[a + 2]}};
}

}  // namespace

TEST_CASE("Simpson rule has 201 nodes and integrates cubics exactly") {
  auto q = quadrature_nodes({});
  REQUIRE(q.nodes.size() == 201);
  CHECK(q.nodes.front() == 0.0);
  CHECK(q.nodes.back() == 1.0);
  double sum = 0, cubic = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    sum += q.weights[i];
    cubic += q.weights[i] * q.nodes[i] * q.nodes[i] * q.nodes[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cubic == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS(parabolic_energy(BezierSegment{{0, 0}, {1, 1}, {2, 0}}, {}, QuadratureRule{0}));
}

TEST_CASE("parabolic energy matches adaptive quadrature") {
  oracle::Gen gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto seg = gen.smooth_segment(gen.integer(3, 5));
    auto q = random_parabola(gen);
    double ref = oracle::adaptive_simpson([&](double t) { return integrand(seg, q, t); }, 0.0, 1.0, 1e-12);
    CHECK(parabolic_energy(seg, q) == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("doubling the sub-intervals barely moves the energy") {
  oracle::Gen gen(22);
  for (int trial = 0; trial < 200; ++trial) {
    auto seg = gen.smooth_segment(5);
    auto q = random_parabola(gen);
    CHECK(parabolic_energy(seg, q, {200}) == doctest::Approx(parabolic_energy(seg, q, {100})).epsilon(1e-6));
  }
}

TEST_CASE("straight segment with zero parabola has no parabolic energy") {
  BezierSegment s{{0, 0}, {1, 0.5}, {2, 1}, {3, 1.5}, {4, 2}};
  CHECK(parabolic_energy(s, {}) == 0.0);
  CHECK(edge_length_energy(s) == doctest::Approx(0.0).scale(1.0));
  CHECK(segment_energy(s, {}, {}) == doctest::Approx(0.1 * curve_length_energy(s)));
  auto g = segment_energy_gradient(s, {}, {0.1, 0.0});
  for (double v : g) CHECK(v == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("regularizer arithmetic") {
  CHECK(curve_length_energy(BezierSegment{{0, 0}, {3, 4}}) == 25.0);
  CHECK(edge_length_energy(BezierSegment{{0, 0}, {1, 0}, {2, 1}}) == doctest::Approx(1.0));
  CHECK(curve_length_energy(BezierSegment{{1, 1}, {1, 1}, {1, 1}}) == 0.0);
  CHECK(segment_energy(BezierSegment{{0, 0}, {1, 1}, {2, 0}}, {1, 0, 0}, {0, 0}) ==
        parabolic_energy(BezierSegment{{0, 0}, {1, 1}, {2, 0}}, {1, 0, 0}));
}

TEST_CASE("property: scaling laws and rigid invariance") {
  oracle::Gen gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto seg = gen.smooth_segment(5);
    auto q = random_parabola(gen);
    double s = gen.uniform(0.3, 3.0), th = gen.uniform(0, 6.28);
    Point2 shift = gen.point(-5, 5);
    std::vector<Point2> scaled, moved;
    for (const auto& p : seg.control_points()) {
      scaled.push_back(p * s);
      moved.push_back(Point2{std::cos(th) * p.x - std::sin(th) * p.y, std::sin(th) * p.x + std::cos(th) * p.y} +
                      shift);
    }
    BezierSegment a(scaled), b(moved);
    ParabolaModel qs{q.a0 / s, q.a1 / s, q.a2 / s};
    CHECK(parabolic_energy(a, qs) == doctest::Approx(parabolic_energy(seg, q) / s).epsilon(1e-10));
    CHECK(curve_length_energy(a) == doctest::Approx(s * s * curve_length_energy(seg)).epsilon(1e-12));
    CHECK(edge_length_energy(a) == doctest::Approx(s * s * s * s * edge_length_energy(seg)).epsilon(1e-10));
    CHECK(curve_length_energy(b) == doctest::Approx(curve_length_energy(seg)).epsilon(1e-12));
    CHECK(edge_length_energy(b) == doctest::Approx(edge_length_energy(seg)).epsilon(1e-10));
    CHECK(parabolic_energy(b, q) == doctest::Approx(parabolic_energy(seg, q)).epsilon(1e-10));
  }
}

TEST_CASE("gradient matches central differences") {
  oracle::Gen gen(24);
  for (int trial = 0; trial < 30; ++trial) {
    int k = gen.integer(4, 5);
    auto seg = gen.smooth_segment(k);
    auto q = random_parabola(gen);
    EnergyWeights w{0.1, 0.1};
    auto g = segment_energy_gradient(seg, q, w);
    auto fd = oracle::central_gradient(
        [&](const std::vector<double>& x) {
          auto [s, p] = unflatten(x, k);
          return segment_energy(s, p, w);
        },
        flatten(seg, q), 1e-6);
    REQUIRE(g.size() == fd.size());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("a0 gradient is minus twice the weighted curvature error") {
  oracle::Gen gen(25);
  auto seg = gen.smooth_segment(5);
  auto q = random_parabola(gen);
  auto g = segment_energy_gradient(seg, q, {0, 0});
  auto nodes = quadrature_nodes({});
  double ref = 0;
  for (std::size_t i = 0; i < nodes.nodes.size(); ++i) {
    double t = nodes.nodes[i];
    auto c = oracle::power_coefficients(oracle::control_points(seg));
    Point2 d1 = oracle::power_derivative(c, t, 1);
    ref += nodes.weights[i] * -2.0 * (oracle::curvature(seg, t) - q(t)) * std::hypot(d1.x, d1.y);
  }
  CHECK(g[12] == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("residual form sums to the energy and differentiates consistently") {
  oracle::Gen gen(26);
  auto seg = gen.smooth_segment(5);
  auto q = random_parabola(gen);
  EnergyWeights w{0.1, 0.3};
  std::size_t rows = segment_residual_count(5), cols = segment_unknown_count(5);
  std::vector<double> r(rows), jac(rows * cols);
  segment_energy_residuals(seg, q, w, {}, r, jac);
  double sum = 0;
  for (double v : r) sum += v * v;
  CHECK(sum == doctest::Approx(segment_energy(seg, q, w)).epsilon(1e-12));
  auto g = segment_energy_gradient(seg, q, w);
  for (std::size_t c = 0; c < cols; ++c) {
    double jr = 0;
    for (std::size_t i = 0; i < rows; ++i) jr += 2 * jac[i * cols + c] * r[i];
    CHECK(jr == doctest::Approx(g[c]).epsilon(1e-9).scale(1e-9));
  }
}

TEST_CASE("degenerate speed is reported") {
  BezierSegment s{{0, 0}, {0, 0}, {1, 1}, {2, 0}};
  CHECK_THROWS_AS(parabolic_energy(s, {}), DegenerateSpeedError);
}
