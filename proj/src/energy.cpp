#include "pkcurve/energy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "pkcurve/errors.hpp"

namespace pkc {

namespace {

// Derivative basis values at every quadrature node for one (degree, rule) pair.
struct BasisTable {
  int degree = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> d1;  // node-major, degree + 1 entries per node
  std::vector<double> d2;
};

std::shared_ptr<const BasisTable> build_table(int degree, QuadratureRule rule) {
  auto table = std::make_shared<BasisTable>();
  table->degree = degree;
  QuadratureNodes q = quadrature_nodes(rule);
  table->nodes = std::move(q.nodes);
  table->weights = std::move(q.weights);
  const std::size_t width = static_cast<std::size_t>(degree + 1);
  table->d1.assign(table->nodes.size() * width, 0.0);
  table->d2.assign(table->nodes.size() * width, 0.0);
  double low[8];
  for (std::size_t q_i = 0; q_i < table->nodes.size(); ++q_i) {
    const double t = table->nodes[q_i];
    double* d1 = &table->d1[q_i * width];
    double* d2 = &table->d2[q_i * width];
    if (degree >= 1) {
      // d/dt B_j^k = k (B_{j-1}^{k-1} - B_j^{k-1})
      bernstein_basis(degree - 1, t, std::span<double>(low, degree));
      for (int j = 0; j < degree; ++j) {
        d1[j] -= degree * low[j];
        d1[j + 1] += degree * low[j];
      }
    }
    if (degree >= 2) {
      bernstein_basis(degree - 2, t, std::span<double>(low, degree - 1));
      const double c = static_cast<double>(degree * (degree - 1));
      for (int j = 0; j + 1 < degree; ++j) {
        d2[j] += c * low[j];
        d2[j + 1] -= 2.0 * c * low[j];
        d2[j + 2] += c * low[j];
      }
    }
  }
  return table;
}

std::shared_ptr<const BasisTable> basis_table(int degree, QuadratureRule rule) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const BasisTable>> cache;
  if (degree < 1 || degree > 7) throw ShapeError("energy: unsupported degree " + std::to_string(degree));
  if (rule.subintervals < 1) throw DomainError("energy: quadrature needs at least one sub-interval");
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{degree, rule.subintervals}];
  if (!slot) slot = build_table(degree, rule);
  return slot;
}

// Parabolic term, optionally accumulating its gradient into grad.
double parabolic_term(const BezierSegment& seg, const ParabolaModel& parabola, QuadratureRule rule, double* grad) {
  const int k = seg.degree();
  const auto table = basis_table(k, rule);
  const std::size_t width = static_cast<std::size_t>(k + 1);
  const double eps = speed_epsilon(seg);
  double sum = 0.0;
  for (std::size_t q = 0; q < table->nodes.size(); ++q) {
    const double t = table->nodes[q];
    const double* b1 = &table->d1[q * width];
    const double* b2 = &table->d2[q * width];
    Point2 d1, d2;
    for (std::size_t j = 0; j < width; ++j) {
      d1 += b1[j] * seg[j];
      d2 += b2[j] * seg[j];
    }
    const double s2 = squared_norm(d1);
    const double s = std::sqrt(s2);
    if (!(s > eps)) throw DegenerateSpeedError(t);
    const double det = cross(d1, d2);
    const double kappa = det / (s2 * s);
    const double r = kappa - parabola(t);
    const double w = table->weights[q];
    sum += w * r * r * s;
    if (grad == nullptr) continue;
    // f = r^2 s; df/dd1 = 2 r s dkappa/dd1 + r^2 d1 / s; df/dd2 = 2 r s dkappa/dd2
    const double inv_s3 = 1.0 / (s2 * s);
    const Point2 dk_dd1 = Point2(d2.y, -d2.x) * inv_s3 - d1 * (3.0 * kappa / s2);
    const Point2 dk_dd2 = Point2(-d1.y, d1.x) * inv_s3;
    const Point2 g1 = (w * 2.0 * r * s) * dk_dd1 + (w * r * r / s) * d1;
    const Point2 g2 = (w * 2.0 * r * s) * dk_dd2;
    for (std::size_t j = 0; j < width; ++j) {
      grad[2 * j] += b1[j] * g1.x + b2[j] * g2.x;
      grad[2 * j + 1] += b1[j] * g1.y + b2[j] * g2.y;
    }
    const double ga = -2.0 * w * r * s;
    grad[2 * width] += ga;
    grad[2 * width + 1] += ga * t;
    grad[2 * width + 2] += ga * t * t;
  }
  return sum;
}

double edge_term(const BezierSegment& seg, double scale, double* grad) {
  const auto k = static_cast<std::size_t>(seg.degree());
  double sum = 0.0;
  for (std::size_t j = 0; j + 2 <= k; ++j) {
    const Point2 e0 = seg[j] - seg[j + 1];
    const Point2 e1 = seg[j + 1] - seg[j + 2];
    const double diff = squared_norm(e0) - squared_norm(e1);
    sum += diff * diff;
    if (grad == nullptr) continue;
    // d(diff^2) = 2 diff (dL0 - dL1), dL = 2 e along the edge.
    const double c = scale * 2.0 * diff * 2.0;
    grad[2 * j] += c * e0.x;
    grad[2 * j + 1] += c * e0.y;
    grad[2 * (j + 1)] += c * (-e0.x - e1.x);
    grad[2 * (j + 1) + 1] += c * (-e0.y - e1.y);
    grad[2 * (j + 2)] += c * e1.x;
    grad[2 * (j + 2) + 1] += c * e1.y;
  }
  return sum;
}

double length_term(const BezierSegment& seg, double scale, double* grad) {
  const auto k = static_cast<std::size_t>(seg.degree());
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const Point2 e = seg[j] - seg[j + 1];
    sum += squared_norm(e);
    if (grad == nullptr) continue;
    const double c = scale * 2.0;
    grad[2 * j] += c * e.x;
    grad[2 * j + 1] += c * e.y;
    grad[2 * (j + 1)] -= c * e.x;
    grad[2 * (j + 1) + 1] -= c * e.y;
  }
  return sum;
}

}  // namespace

QuadratureNodes quadrature_nodes(QuadratureRule rule) {
  if (rule.subintervals < 1) throw DomainError("quadrature: at least one sub-interval required");
  const int n = rule.subintervals;
  QuadratureNodes q;
  q.nodes.resize(static_cast<std::size_t>(2 * n + 1));
  q.weights.assign(q.nodes.size(), 0.0);
  const double h = 1.0 / n;
  for (int i = 0; i <= 2 * n; ++i) q.nodes[i] = (i == 2 * n) ? 1.0 : (0.5 * h) * i;
  for (int i = 0; i < n; ++i) {
    q.weights[2 * i] += h / 6.0;
    q.weights[2 * i + 1] += 4.0 * h / 6.0;
    q.weights[2 * i + 2] += h / 6.0;
  }
  return q;
}

double parabolic_energy(const BezierSegment& seg, const ParabolaModel& parabola, QuadratureRule rule) {
  return parabolic_term(seg, parabola, rule, nullptr);
}

double edge_length_energy(const BezierSegment& seg) { return edge_term(seg, 0.0, nullptr); }

double curve_length_energy(const BezierSegment& seg) { return length_term(seg, 0.0, nullptr); }

EnergyTerms energy_terms(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                         QuadratureRule rule) {
  EnergyTerms e;
  e.parabolic = parabolic_energy(seg, parabola, rule);
  e.edge = edge_length_energy(seg);
  e.length = curve_length_energy(seg);
  e.total = e.parabolic + weights.lambda_e * e.edge + weights.lambda_c * e.length;
  return e;
}

double segment_energy(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                      QuadratureRule rule) {
  return energy_terms(seg, parabola, weights, rule).total;
}

double segment_energy_and_gradient(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                                   QuadratureRule rule, std::span<double> grad) {
  if (grad.size() != segment_unknown_count(seg.degree())) {
    throw ShapeError("segment_energy_and_gradient: gradient buffer has the wrong size");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double value = parabolic_term(seg, parabola, rule, grad.data());
  value += weights.lambda_e * edge_term(seg, weights.lambda_e, grad.data());
  value += weights.lambda_c * length_term(seg, weights.lambda_c, grad.data());
  return value;
}

std::size_t segment_residual_count(int degree, QuadratureRule rule) {
  const auto k = static_cast<std::size_t>(degree);
  return static_cast<std::size_t>(2 * rule.subintervals + 1) + (k - 1) + 2 * k;
}

void segment_energy_residuals(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                              QuadratureRule rule, std::span<double> residuals, std::span<double> jacobian) {
  const int k = seg.degree();
  const std::size_t rows = segment_residual_count(k, rule);
  const std::size_t cols = segment_unknown_count(k);
  if (residuals.size() != rows) throw ShapeError("segment_energy_residuals: residual buffer has the wrong size");
  const bool with_jac = !jacobian.empty();
  if (with_jac && jacobian.size() != rows * cols)
    throw ShapeError("segment_energy_residuals: jacobian buffer has the wrong size");
  if (with_jac) std::fill(jacobian.begin(), jacobian.end(), 0.0);

  const auto table = basis_table(k, rule);
  const std::size_t width = static_cast<std::size_t>(k + 1);
  const double eps = speed_epsilon(seg);
  std::size_t row = 0;
  for (std::size_t q = 0; q < table->nodes.size(); ++q, ++row) {
    const double t = table->nodes[q];
    const double* b1 = &table->d1[q * width];
    const double* b2 = &table->d2[q * width];
    Point2 d1, d2;
    for (std::size_t j = 0; j < width; ++j) {
      d1 += b1[j] * seg[j];
      d2 += b2[j] * seg[j];
    }
    const double s2 = squared_norm(d1);
    const double s = std::sqrt(s2);
    if (!(s > eps)) throw DegenerateSpeedError(t);
    const double kappa = cross(d1, d2) / (s2 * s);
    const double rho = kappa - parabola(t);
    const double sw = std::sqrt(table->weights[q]);
    const double root_s = std::sqrt(s);
    residuals[row] = sw * root_s * rho;
    if (!with_jac) continue;
    // r = sqrt(w s) rho; dr/dd1 = sqrt(w) (rho d1 / (2 s^1.5) + sqrt(s) dkappa/dd1)
    const double inv_s3 = 1.0 / (s2 * s);
    const Point2 dk_dd1 = Point2(d2.y, -d2.x) * inv_s3 - d1 * (3.0 * kappa / s2);
    const Point2 dk_dd2 = Point2(-d1.y, d1.x) * inv_s3;
    const Point2 g1 = sw * ((rho / (2.0 * s * root_s)) * d1 + root_s * dk_dd1);
    const Point2 g2 = (sw * root_s) * dk_dd2;
    double* out = &jacobian[row * cols];
    for (std::size_t j = 0; j < width; ++j) {
      out[2 * j] = b1[j] * g1.x + b2[j] * g2.x;
      out[2 * j + 1] = b1[j] * g1.y + b2[j] * g2.y;
    }
    const double ga = -sw * root_s;
    out[2 * width] = ga;
    out[2 * width + 1] = ga * t;
    out[2 * width + 2] = ga * t * t;
  }
  const double re = std::sqrt(weights.lambda_e);
  for (std::size_t j = 0; j + 2 < width; ++j, ++row) {
    const Point2 e0 = seg[j] - seg[j + 1];
    const Point2 e1 = seg[j + 1] - seg[j + 2];
    residuals[row] = re * (squared_norm(e0) - squared_norm(e1));
    if (!with_jac) continue;
    double* out = &jacobian[row * cols];
    out[2 * j] = re * 2.0 * e0.x;
    out[2 * j + 1] = re * 2.0 * e0.y;
    out[2 * (j + 1)] = re * -2.0 * (e0.x + e1.x);
    out[2 * (j + 1) + 1] = re * -2.0 * (e0.y + e1.y);
    out[2 * (j + 2)] = re * 2.0 * e1.x;
    out[2 * (j + 2) + 1] = re * 2.0 * e1.y;
  }
  const double rc = std::sqrt(weights.lambda_c);
  for (std::size_t j = 0; j + 1 < width; ++j, row += 2) {
    const Point2 e = seg[j] - seg[j + 1];
    residuals[row] = rc * e.x;
    residuals[row + 1] = rc * e.y;
    if (!with_jac) continue;
    jacobian[row * cols + 2 * j] = rc;
    jacobian[row * cols + 2 * (j + 1)] = -rc;
    jacobian[(row + 1) * cols + 2 * j + 1] = rc;
    jacobian[(row + 1) * cols + 2 * (j + 1) + 1] = -rc;
  }
}

std::vector<double> segment_energy_gradient(const BezierSegment& seg, const ParabolaModel& parabola,
                                            EnergyWeights weights, QuadratureRule rule) {
  std::vector<double> grad(segment_unknown_count(seg.degree()));
  segment_energy_and_gradient(seg, parabola, weights, rule, grad);
  return grad;
}

}  // namespace pkc
