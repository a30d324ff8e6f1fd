#pragma once

#include <span>
#include <vector>

#include "pkcurve/bezier.hpp"

namespace pkc {

// Target curvature profile Q(t) = a0 + a1 t + a2 t^2.
struct ParabolaModel {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  double operator()(double t) const { return a0 + t * (a1 + t * a2); }
  // Residual of the vertex condition Q'(t) = 0.
  double extremum_residual(double t) const { return a1 + 2.0 * a2 * t; }

  friend bool operator==(const ParabolaModel&, const ParabolaModel&) = default;
};

// |a2| below this (in window-normalized units) means no usable vertex.
inline constexpr double kA2Min = 1e-8;

struct EnergyWeights {
  double lambda_e = 0.1;
  double lambda_c = 0.1;
};

// Composite Simpson over `subintervals` equal pieces of [0,1]
// (2 * subintervals + 1 distinct nodes, shared endpoints).
struct QuadratureRule {
  int subintervals = 100;
};

struct EnergyTerms {
  double parabolic = 0.0;
  double edge = 0.0;
  double length = 0.0;
  double total = 0.0;
};

double parabolic_energy(const BezierSegment& seg, const ParabolaModel& parabola, QuadratureRule rule = {});
double edge_length_energy(const BezierSegment& seg);
double curve_length_energy(const BezierSegment& seg);
double segment_energy(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                      QuadratureRule rule = {});
EnergyTerms energy_terms(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                         QuadratureRule rule = {});

// Number of unknowns of one segment: 2 (k + 1) control coordinates, then a0, a1, a2.
inline std::size_t segment_unknown_count(int degree) { return 2 * static_cast<std::size_t>(degree + 1) + 3; }

// Gradient of segment_energy with respect to [x0, y0, x1, y1, ..., a0, a1, a2],
// obtained by differentiating the quadrature sum itself.
std::vector<double> segment_energy_gradient(const BezierSegment& seg, const ParabolaModel& parabola,
                                            EnergyWeights weights, QuadratureRule rule = {});

// Value and gradient in one pass; grad must hold segment_unknown_count(degree)
// entries and is overwritten.
double segment_energy_and_gradient(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                                   QuadratureRule rule, std::span<double> grad);

// Residual form of segment_energy: the energy is the sum of squares of the
// rows, one per quadrature node, then sqrt(lambda_e) times each adjacent edge
// difference, then sqrt(lambda_c) times each edge coordinate. jacobian, when
// given, receives the row-major rows x segment_unknown_count(degree) matrix.
std::size_t segment_residual_count(int degree, QuadratureRule rule = {});
void segment_energy_residuals(const BezierSegment& seg, const ParabolaModel& parabola, EnergyWeights weights,
                              QuadratureRule rule, std::span<double> residuals, std::span<double> jacobian = {});

// Simpson nodes and weights of the rule on [0,1].
struct QuadratureNodes {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureNodes quadrature_nodes(QuadratureRule rule);

}  // namespace pkc
