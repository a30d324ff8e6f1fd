#include "pkcurve/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pkcurve/errors.hpp"

namespace pkc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool at_lower(const ConstrainedProblem& p, const Vector& z, Eigen::Index i) {
  const double lo = p.lower_bounds()[i];
  return std::isfinite(lo) && z[i] <= lo + 1e-14 * std::max(1.0, std::abs(lo));
}

bool at_upper(const ConstrainedProblem& p, const Vector& z, Eigen::Index i) {
  const double hi = p.upper_bounds()[i];
  return std::isfinite(hi) && z[i] >= hi - 1e-14 * std::max(1.0, std::abs(hi));
}

Vector clamp_to_bounds(const ConstrainedProblem& p, const Vector& z) {
  return z.cwiseMax(p.lower_bounds()).cwiseMin(p.upper_bounds());
}

Matrix select_columns(const Matrix& m, const std::vector<Eigen::Index>& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

Vector select(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[idx[j]];
  return out;
}

// Least-squares multipliers for the free block: argmin || J_F^T lambda - g_F ||.
Vector multipliers(const Matrix& jac_free, const Vector& grad_free) {
  if (jac_free.rows() == 0) return Vector();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jac_free.transpose());
  cod.setThreshold(1e-12);
  return cod.solve(grad_free);
}

// Orthonormal basis of the null space of jac_free (columns).
Matrix null_space(const Matrix& jac_free) {
  const Eigen::Index n = jac_free.cols();
  if (jac_free.rows() == 0) return Matrix::Identity(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(jac_free.transpose());
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Matrix q = qr.householderQ();
  return q.rightCols(n - rank);
}

struct Evaluation {
  bool ok = false;
  double value = kInf;
  Vector grad;
};

Evaluation evaluate_objective(const ConstrainedProblem& p, const Vector& z) {
  Evaluation e;
  try {
    e.value = p.objective(z, &e.grad);
  } catch (const DegenerateSpeedError&) {
    return e;
  }
  e.ok = std::isfinite(e.value) && e.grad.allFinite();
  return e;
}

// Active set: variables pinned at a bound whose Lagrangian gradient pushes outward.
std::vector<bool> active_set(const ConstrainedProblem& p, const Vector& z, const Vector& lagrangian_grad,
                             const std::vector<bool>* previous) {
  const Eigen::Index n = z.size();
  std::vector<bool> active(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool lo = at_lower(p, z, i);
    const bool hi = at_upper(p, z, i);
    if (lo && hi) {
      active[i] = true;
    } else if (lo) {
      active[i] = previous == nullptr || (*previous)[i] ? lagrangian_grad[i] >= 0.0 : lagrangian_grad[i] > 0.0;
    } else if (hi) {
      active[i] = previous == nullptr || (*previous)[i] ? lagrangian_grad[i] <= 0.0 : lagrangian_grad[i] < 0.0;
    }
  }
  return active;
}

double projected_gradient_norm(const ConstrainedProblem& p, const Vector& z, const Vector& lagrangian_grad) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const bool lo = at_lower(p, z, i);
    const bool hi = at_upper(p, z, i);
    double r = lagrangian_grad[i];
    if (lo && hi) r = 0.0;
    else if (lo) r = std::min(r, 0.0);
    else if (hi) r = std::max(r, 0.0);
    m = std::max(m, std::abs(r));
  }
  return m;
}

std::vector<Eigen::Index> free_indices(const std::vector<bool>& active) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

// Bound activity with its multipliers and Lagrangian gradient, releasing or
// re-pinning bounds until the multiplier signs agree.
std::vector<bool> resolve_active_set(const ConstrainedProblem& p, const Vector& z, const Vector& grad,
                                     const Matrix& jac, const std::vector<bool>* previous, Vector& lambda,
                                     Vector& lg) {
  std::vector<bool> guess = active_set(p, z, grad, previous);
  lg = grad;
  for (int pass = 0; pass < 4; ++pass) {
    const std::vector<Eigen::Index> cols = free_indices(guess);
    lambda = multipliers(select_columns(jac, cols), select(grad, cols));
    lg = lambda.size() ? Vector(grad - jac.transpose() * lambda) : grad;
    std::vector<bool> next = active_set(p, z, lg, &guess);
    if (next == guess) break;
    guess = std::move(next);
  }
  return guess;
}

bool restore_masked(const ConstrainedProblem& p, Vector& z, double tolerance, int max_iterations,
                    std::vector<bool> pinned) {
  const Eigen::Index m = p.constraint_count();
  Vector h;
  Matrix jac;
  p.constraints(z, h, &jac);
  if (!h.allFinite()) return false;
  double viol = max_abs(h);
  if (m == 0 || viol <= tolerance) return true;
  for (int it = 0; it < max_iterations; ++it) {
    const std::vector<Eigen::Index> cols = free_indices(pinned);
    if (cols.empty()) return false;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(select_columns(jac, cols));
    cod.setThreshold(1e-13);
    const Vector step = cod.solve(-h);
    if (!step.allFinite()) return false;
    bool improved = false;
    double scale = 1.0;
    for (int ls = 0; ls < 12 && !improved; ++ls, scale *= 0.5) {
      Vector trial = z;
      for (std::size_t j = 0; j < cols.size(); ++j) trial[cols[j]] += scale * step[static_cast<Eigen::Index>(j)];
      trial = clamp_to_bounds(p, trial);
      Vector ht;
      p.constraints(trial, ht, nullptr);
      if (!ht.allFinite()) continue;
      const double vt = max_abs(ht);
      if (vt < viol) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
          const Eigen::Index i = cols[j];
          const double moved = z[i] + scale * step[static_cast<Eigen::Index>(j)];
          if (moved != trial[i]) pinned[i] = true;
        }
        z = trial;
        viol = vt;
        improved = true;
      }
    }
    if (!improved) return viol <= tolerance;
    p.constraints(z, h, &jac);
    if (viol <= tolerance) return true;
  }
  return viol <= tolerance;
}

// Powell-damped BFGS update keeping h positive definite.
void bfgs_update(Matrix& hess, const Vector& s, Vector y) {
  const Vector hs = hess * s;
  const double shs = s.dot(hs);
  if (!(shs > 0.0)) return;
  double sy = s.dot(y);
  if (sy < 0.2 * shs) {
    const double theta = 0.8 * shs / (shs - sy);
    y = theta * y + (1.0 - theta) * hs;
    sy = s.dot(y);
  }
  if (!(sy > 0.0)) return;
  hess += (y * y.transpose()) / sy - (hs * hs.transpose()) / shs;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Tolerance: return "tolerance";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::Stalled: return "stalled";
  }
  return "unknown";
}

bool restore_feasibility(const ConstrainedProblem& problem, Vector& z, double tolerance, int max_iterations) {
  std::vector<bool> pinned(static_cast<std::size_t>(z.size()), false);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (problem.lower_bounds()[i] == problem.upper_bounds()[i]) pinned[i] = true;
  }
  return restore_masked(problem, z, tolerance, max_iterations, std::move(pinned));
}

KktReport kkt_report(const ConstrainedProblem& problem, const Vector& point) {
  if (point.size() != problem.dimension()) throw ShapeError("kkt_report: point has the wrong dimension");
  KktReport r;
  Vector h;
  Matrix jac;
  problem.constraints(point, h, &jac);
  r.max_equality_violation = max_abs(h);
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    r.max_bound_violation = std::max({r.max_bound_violation, problem.lower_bounds()[i] - point[i],
                                      point[i] - problem.upper_bounds()[i]});
  }
  Vector g;
  problem.objective(point, &g);
  Vector lambda;
  Vector lg;
  resolve_active_set(problem, point, g, jac, nullptr, lambda, lg);
  r.projected_gradient_norm = projected_gradient_norm(problem, point, lg);
  return r;
}

SolveOutcome solve_stage(const ConstrainedProblem& problem, const SolverSettings& settings, const Vector& start) {
  const Eigen::Index n = problem.dimension();
  if (start.size() != n) throw ShapeError("solve_stage: start vector has the wrong dimension");
  SolveOutcome out;
  StageReport report;
  if (n == 0) {
    out.unknowns = start;
    out.objective = problem.objective(start, nullptr);
    report.initial_objective = report.final_objective = out.objective;
    out.stage_reports.push_back(report);
    return out;
  }

  Vector z = clamp_to_bounds(problem, start);
  out.start_clamped = (z != start);
  const double restore_tol = std::min(settings.restoration_tolerance, settings.constraint_tolerance);
  if (!restore_feasibility(problem, z, restore_tol)) {
    Vector h;
    problem.constraints(z, h, nullptr);
    throw InfeasibleError("feasibility restoration failed", max_abs(h));
  }
  Evaluation cur;
  cur.value = problem.objective(z, &cur.grad);
  for (Eigen::Index i = 0; i < cur.grad.size(); ++i) {
    if (!std::isfinite(cur.grad[i]) || !std::isfinite(z[i])) {
      throw NumericalError("objective gradient is not finite at the restored start", static_cast<std::size_t>(i));
    }
  }
  if (!std::isfinite(cur.value)) throw NumericalError("objective is not finite at the restored start", 0);
  cur.ok = true;
  report.initial_objective = cur.value;

  Matrix hess = Matrix::Identity(n, n);
  bool hess_scaled = false;
  bool hess_fresh = true;
  Matrix probe;
  const bool gauss_newton = problem.gauss_newton_matrix(z, probe);
  double damping = 1e-8;
  Vector h;
  Matrix jac;
  problem.constraints(z, h, &jac);
  std::vector<bool> active;
  report.termination = Termination::IterationCap;

  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    // Active set and multipliers, releasing bounds whose multiplier has the wrong sign.
    Vector lambda;
    Vector lg;
    active = resolve_active_set(problem, z, cur.grad, jac, active.empty() ? nullptr : &active, lambda, lg);
    report.kkt_residual = projected_gradient_norm(problem, z, lg);
    if (report.kkt_residual <= settings.kkt_tolerance || cur.value <= settings.epsilon) {
      report.termination = Termination::Tolerance;
      break;
    }

    const std::vector<Eigen::Index> cols = free_indices(active);
    const Matrix jac_free = select_columns(jac, cols);
    const Matrix basis = null_space(jac_free);
    if (basis.cols() == 0) {
      report.termination = Termination::Tolerance;
      break;
    }
    const Vector g_free = select(cur.grad, cols);
    const Vector gz = basis.transpose() * g_free;
    Matrix model = hess;
    if (gauss_newton) {
      problem.gauss_newton_matrix(z, model);
      model *= 2.0;
    }
    Matrix model_free(static_cast<Eigen::Index>(cols.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) model_free(a, b) = model(cols[a], cols[b]);
    }
    Matrix reduced = basis.transpose() * model_free * basis;
    if (gauss_newton) {
      // Levenberg-Marquardt damping relative to the largest curvature.
      const double top = std::max(reduced.diagonal().maxCoeff(), std::numeric_limits<double>::min());
      reduced.diagonal().array() += damping * top;
    }
    Eigen::LLT<Matrix> llt(reduced);
    Vector pz = llt.info() == Eigen::Success ? Vector(-llt.solve(gz)) : Vector(-gz);
    if (!pz.allFinite() || gz.dot(pz) >= 0.0) pz = -gz;
    const Vector d_free = basis * pz;
    Vector dir = Vector::Zero(n);
    for (std::size_t j = 0; j < cols.size(); ++j) dir[cols[j]] = d_free[static_cast<Eigen::Index>(j)];
    const double slope = cur.grad.dot(dir);
    if (!(slope < 0.0)) {
      report.termination = Termination::Stalled;
      break;
    }

    // Longest step keeping the free variables inside their bounds.
    double step_max = 1.0;
    for (Eigen::Index i : cols) {
      if (dir[i] < 0.0 && std::isfinite(problem.lower_bounds()[i])) {
        step_max = std::min(step_max, (problem.lower_bounds()[i] - z[i]) / dir[i]);
      } else if (dir[i] > 0.0 && std::isfinite(problem.upper_bounds()[i])) {
        step_max = std::min(step_max, (problem.upper_bounds()[i] - z[i]) / dir[i]);
      }
    }
    step_max = std::max(step_max, 0.0);

    std::vector<bool> pinned = active;
    bool accepted = false;
    Vector z_new;
    Evaluation next;
    double last_step = 0.0;
    for (double step = step_max; step > 1e-12; step *= 0.5) {
      last_step = step;
      z_new = clamp_to_bounds(problem, z + step * dir);
      if (!restore_masked(problem, z_new, restore_tol, 20, pinned)) continue;
      next = evaluate_objective(problem, z_new);
      if (next.ok && next.value <= cur.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted && gauss_newton) {
      if (damping >= 1e6) {
        report.termination = Termination::Stalled;
        break;
      }
      damping = std::max(damping * 100.0, 1e-6);
      continue;
    }
    if (!accepted) {
      if (hess_fresh) {
        report.termination = Termination::Stalled;
        break;
      }
      // Retry once from a fresh curvature model before giving up.
      hess = Matrix::Identity(n, n);
      hess_scaled = false;
      hess_fresh = true;
      continue;
    }
    hess_fresh = false;
    if (gauss_newton) {
      if (last_step >= step_max && step_max == 1.0)
        damping = std::max(damping * 0.1, 1e-12);
      else if (last_step < 0.25 * step_max)
        damping = std::min(damping * 10.0, 1e6);
    }
    if (next.value > cur.value) report.monotone = false;

    Vector h_new;
    Matrix jac_new;
    problem.constraints(z_new, h_new, &jac_new);
    const Vector s = z_new - z;
    if (s.cwiseAbs().maxCoeff() == 0.0) {
      report.termination = Termination::Stalled;
      break;
    }
    if (!gauss_newton) {
      Vector y = next.grad - cur.grad;
      if (lambda.size()) y -= (jac_new - jac).transpose() * lambda;
      if (!hess_scaled) {
        const double sy = s.dot(y);
        if (sy > 0.0) hess = Matrix::Identity(n, n) * (y.squaredNorm() / sy);
        hess_scaled = true;
      }
      bfgs_update(hess, s, y);
    }
    z = std::move(z_new);
    cur = std::move(next);
    h = std::move(h_new);
    jac = std::move(jac_new);
  }

  report.iterations = iter;
  report.final_objective = cur.value;
  report.max_violation = max_abs(h);
  out.unknowns = z;
  out.objective = cur.value;
  out.stage_reports.push_back(report);
  return out;
}

}  // namespace pkc
