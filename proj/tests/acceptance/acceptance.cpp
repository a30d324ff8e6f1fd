// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria. Usage: acceptance [path-to-pkcurve-cli]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pkcurve/builder.hpp"
#include "pkcurve/errors.hpp"
#include "pkcurve/io.hpp"
#include "pkcurve/metrics.hpp"

using namespace pkc;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %-26s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ContinuityMode kModes[] = {ContinuityMode::C1(), ContinuityMode::C2(), ContinuityMode::G1(),
                                 ContinuityMode::G2()};

// ---- kernel ----

void kernel_exactness() {
  auto t0 = Clock::now();
  oracle::Gen gen(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto seg = gen.segment(2 + trial % 4, -10.0, 10.0);
    auto cps = oracle::control_points(seg);
    double diag = oracle::diagonal(cps);
    auto up = elevate_degree(seg);
    double z = gen.uniform(0.01, 0.99);
    auto [left, right] = subdivide(seg, z);
    for (int i = 0; i <= 100; ++i) {
      double s = i / 100.0;
      Point2 ref = oracle::bernstein_point(cps, s);
      worst = std::max(worst, distance(evaluate(up, s), ref) / diag);
      worst = std::max(worst, distance(evaluate(left, s), oracle::bernstein_point(cps, z * s)) / diag);
      worst = std::max(worst, distance(evaluate(right, s), oracle::bernstein_point(cps, z + (1 - z) * s)) / diag);
    }
  }
  double secs = seconds_since(t0);
  verdict("kernel_exactness", worst <= 1e-12 && secs < 5.0,
          fmt("max error %.2e diag (tol 1e-12), %.2f s (cap 5 s)", worst, secs));
}

// ---- gradient ----

void gradient_correctness() {
  auto t0 = Clock::now();
  oracle::Gen gen(1002);
  double worst = 0.0;
  EnergyWeights w{0.1, 0.1};
  for (int trial = 0; trial < 100; ++trial) {
    auto seg = gen.smooth_segment(5);
    ParabolaModel q{gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1)};
    auto g = segment_energy_gradient(seg, q, w);
    std::vector<double> x;
    for (const auto& p : seg.control_points()) x.insert(x.end(), {p.x, p.y});
    x.insert(x.end(), {q.a0, q.a1, q.a2});
    auto fd = oracle::central_gradient(
        [&](const std::vector<double>& v) {
          std::vector<Point2> cps;
          for (int j = 0; j <= 5; ++j) cps.push_back({v[2 * j], v[2 * j + 1]});
          return segment_energy(BezierSegment(cps), {v[12], v[13], v[14]}, w);
        },
        x, 1e-6);
    double scale = 0.0;
    for (double v : fd) scale = std::max(scale, std::abs(v));
    // Relative per component; components far below the gradient's magnitude are
    // measured against 1e-3 of its largest entry, where finite differences stop resolving.
    for (std::size_t i = 0; i < g.size(); ++i)
      worst = std::max(worst, std::abs(g[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-3 * scale));
  }
  double secs = seconds_since(t0);
  verdict("gradient_correctness", worst <= 1e-5 && secs < 30.0,
          fmt("max relative error %.2e (tol 1e-5), %.2f s (cap 30 s)", worst, secs));
}

// ---- quadrature ----

void quadrature_fidelity() {
  oracle::Gen gen(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto seg = gen.smooth_segment(gen.integer(4, 5));
    ParabolaModel q{gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1)};
    auto coeffs = oracle::power_coefficients(oracle::control_points(seg));
    double ref = oracle::adaptive_simpson(
        [&](double t) {
          Point2 d1 = oracle::power_derivative(coeffs, t, 1);
          double e = oracle::curvature(seg, t) - q(t);
          return e * e * std::hypot(d1.x, d1.y);
        },
        0.0, 1.0, 1e-10);
    worst = std::max(worst, std::abs(parabolic_energy(seg, q, {100}) - ref) / std::abs(ref));
  }
  verdict("quadrature_fidelity", worst <= 1e-6, fmt("max relative error %.2e (tol 1e-6)", worst));
}

// ---- documents ----

struct Checked {
  double interpolation = 0, joint = 0, coupling = 0;
  int box_violations = 0;
};

Checked check_constraints(const CurveDocument& doc) {
  Checked c;
  double diag = bounding_box(doc.points).diagonal();
  std::size_t n = doc.segments.size();
  for (const auto& s : doc.segments) {
    c.interpolation = std::max(c.interpolation, distance(evaluate(s.curve, s.t), doc.points[s.point_index]) / diag);
    c.coupling = std::max(c.coupling, std::abs(s.parabola.extremum_residual(s.t)) * diag);
    if (s.t < s.t_hat / 2 || s.t > (s.t_hat + 1) / 2) ++c.box_violations;
  }
  std::size_t joints = doc.closed() ? n : n - 1;
  for (std::size_t j = 0; j < joints; ++j) {
    std::optional<GeometricJointParams> params;
    if (doc.mode.geometric()) params = doc.joints[j];
    c.joint = std::max(c.joint, joint_residual(doc.segments[j].curve, doc.segments[(j + 1) % n].curve, doc.mode,
                                               params).max_abs() / diag);
  }
  return c;
}

void constraint_satisfaction() {
  oracle::Gen gen(1004);
  Checked worst;
  int errors = 0;
  for (int d = 0; d < 50; ++d) {
    auto mode = kModes[d % 4];
    auto topology = (d / 4) % 2 ? Topology::Closed : Topology::Open;
    auto pts = gen.contour(gen.integer(8, 15));
    try {
      auto c = check_constraints(build_curve(pts, mode, topology));
      worst.interpolation = std::max(worst.interpolation, c.interpolation);
      worst.joint = std::max(worst.joint, c.joint);
      worst.coupling = std::max(worst.coupling, c.coupling);
      worst.box_violations += c.box_violations;
    } catch (const std::exception& e) {
      ++errors;
      std::printf("  constraint corpus doc %d: %s\n", d, e.what());
    }
  }
  bool pass = errors == 0 && worst.interpolation <= 1e-8 && worst.joint <= 1e-8 && worst.coupling <= 1e-8 &&
              worst.box_violations == 0;
  verdict("constraint_satisfaction", pass,
          fmt("interp %.1e, joint %.1e, coupling %.1e (tol 1e-8), box violations %d, errors %d",
              worst.interpolation, worst.joint, worst.coupling, worst.box_violations, errors));
}

void locality() {
  oracle::Gen gen(1005);
  int bad_inserts = 0, bad_moves = 0, moves = 0;
  std::string error;
  for (auto topology : {Topology::Open, Topology::Closed}) {
    auto pts = gen.contour(20);
    try {
      CurveDocument doc = make_document(ContinuityMode::C2());
      for (const auto& p : pts) {
        auto next = insert_point(doc, p);
        for (std::size_t s = 0; s + 2 < doc.segments.size(); ++s) bad_inserts += !(next.segments[s] == doc.segments[s]);
        doc = next;
      }
      if (topology == Topology::Closed) doc = close_curve(doc);
      for (std::size_t i = 0; i < doc.points.size(); ++i) {
        auto window = edit_window(doc, i);
        auto next = move_point(doc, i, doc.points[i] + gen.point(-0.02, 0.02));
        ++moves;
        for (std::size_t s = 0; s < doc.segments.size(); ++s)
          if (std::find(window.begin(), window.end(), s) == window.end())
            bad_moves += !(next.segments[s] == doc.segments[s]);
        bad_moves += window.size() > 3;
        doc = next;
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
  }
  verdict("locality", bad_inserts == 0 && bad_moves == 0 && error.empty(),
          fmt("%d insert and %d move violations over %d moves%s", bad_inserts, bad_moves, moves,
              error.empty() ? "" : (", error: " + error).c_str()));
}

// The 20-document corpus for the energy, two-stage and fairness criteria:
// 8-12 points on a perturbed convex contour scaled to a unit bbox, default
// weights, cycling through the four modes, open and closed alternately.
struct CorpusDoc {
  CurveDocument doc;
  std::vector<EditReport> reports;
  std::string error;
};

std::vector<CorpusDoc> build_corpus() {
  oracle::Gen gen(1006);
  std::vector<CorpusDoc> corpus(20);
  for (int d = 0; d < 20; ++d) {
    auto mode = kModes[d % 4];
    auto topology = (d / 4) % 2 ? Topology::Closed : Topology::Open;
    auto pts = gen.contour(gen.integer(8, 12));
    try {
      corpus[d].doc = build_curve(pts, mode, topology, {}, &corpus[d].reports);
    } catch (const std::exception& e) {
      corpus[d].error = e.what();
    }
  }
  return corpus;
}

void energy_magnitude(const std::vector<CorpusDoc>& corpus) {
  double worst_bar = 0, worst_hat = 0, mean_bar = 0;
  int over = 0, errors = 0;
  for (const auto& c : corpus) {
    if (!c.error.empty()) {
      ++errors;
      continue;
    }
    auto rep = energy_report(c.doc);
    worst_bar = std::max(worst_bar, rep.average_ep);
    worst_hat = std::max(worst_hat, rep.max_ep);
    mean_bar += rep.average_ep / corpus.size();
    over += rep.average_ep > 2e-3 || rep.max_ep > 1e-2;
  }
  verdict("energy_magnitude", over == 0 && errors == 0,
          fmt("worst E_bar %.2e (tol 2e-3), worst E_hat %.2e (tol 1e-2), corpus mean E_bar %.2e, %d docs over, "
              "%d errors",
              worst_bar, worst_hat, mean_bar, over, errors));
}

void two_stage(const std::vector<CorpusDoc>& corpus) {
  int good = 0, bad_termination = 0, non_monotone = 0;
  for (const auto& c : corpus) {
    if (!c.error.empty()) continue;
    bool ok = true;
    for (const auto& r : c.reports) {
      if (r.stages.size() != 2 || r.degraded) {
        ok = false;
        continue;
      }
      for (const auto& s : r.stages) non_monotone += !s.monotone;
      const auto& s2 = r.stages[1];
      // Stage two starts where stage one ended, with zero weights: its initial
      // objective is stage one's final E_p.
      if (s2.final_objective > s2.initial_objective) {
        ok = false;
        bad_termination += s2.termination != Termination::IterationCap;
      }
    }
    good += ok;
  }
  double frac = good / static_cast<double>(corpus.size());
  verdict("two_stage", frac >= 0.95 && bad_termination == 0 && non_monotone == 0,
          fmt("%d/%zu docs with stage-2 E_p <= stage-1 E_p on every edit (need 95%%), %d non-monotone stages",
              good, corpus.size(), non_monotone));
}

void fairness(const std::vector<CorpusDoc>& corpus) {
  int segments = 0, fair = 0, unstable = 0;
  for (const auto& c : corpus) {
    for (const auto& s : c.doc.segments) {
      int runs = monotone_interval_count(s.curve);
      ++segments;
      fair += runs <= 2;
      unstable += monotone_interval_count(s.curve, 2 * kMonotoneSamples - 1) != runs;
    }
  }
  double frac = fair / static_cast<double>(std::max(segments, 1));
  verdict("fairness", frac >= 0.90, fmt("%d/%d segments (%.1f%%) with <= 2 monotone curvature runs (need 90%%); "
                                         "%d change count at doubled sampling",
                                         fair, segments, 100 * frac, unstable));
}

void timing() {
  oracle::Gen gen(1007);
  std::vector<double> times;
  for (int d = 0; d < 12; ++d) {
    std::vector<EditReport> reports;
    try {
      build_curve(gen.contour(10), kModes[d % 4], Topology::Open, {}, &reports);
    } catch (const std::exception&) {
      continue;
    }
    for (const auto& r : reports) times.push_back(r.seconds);
  }
  std::sort(times.begin(), times.end());
  double median = times.empty() ? 1e9 : times[times.size() / 2];
  verdict("timing", median <= 0.83,
          fmt("median insertion %.1f ms over %zu insertions (cap 830 ms, soft 50 ms: %s), max %.1f ms", median * 1e3,
              times.size(), median <= 0.05 ? "met" : "missed", times.empty() ? 0.0 : times.back() * 1e3));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const char* cli) {
  oracle::Gen gen(1008);
  bool roundtrip = true;
  for (auto mode : kModes) {
    auto doc = build_curve(gen.contour(9), mode, Topology::Closed);
    auto text = write_curve_file(doc);
    auto back = read_curve_file(text);
    roundtrip = roundtrip && back == doc && write_curve_file(back) == text;
  }
  std::string cli_note = "CLI not given";
  bool cli_ok = true;
  if (cli) {
    auto dir = std::filesystem::temp_directory_path() / "pkc_acceptance";
    std::filesystem::create_directories(dir);
    PointSetFile f;
    f.topology = Topology::Closed;
    f.mode = ContinuityMode::G2();
    f.points = gen.contour(10);
    std::ofstream(dir / "in.json") << to_json(f).dump(2);
    int rc = 0;
    for (const char* out : {"a.json", "b.json"}) {
      std::string cmd = std::string("\"") + cli + "\" build \"" + (dir / "in.json").string() + "\" --out \"" +
                        (dir / out).string() + "\"";
      rc |= std::system(cmd.c_str());
    }
    std::string a = slurp(dir / "a.json"), b = slurp(dir / "b.json");
    cli_ok = rc == 0 && !a.empty() && a == b;
    cli_note = cli_ok ? "CLI outputs byte-identical" : "CLI outputs differ or failed";
    std::filesystem::remove_all(dir);
  }
  verdict("determinism_roundtrip", roundtrip && cli_ok,
          fmt("read(write(doc)) %s; %s", roundtrip ? "identity" : "NOT identity", cli_note.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const char* cli = argc > 1 ? argv[1] : nullptr;
  kernel_exactness();
  gradient_correctness();
  quadrature_fidelity();
  constraint_satisfaction();
  locality();
  auto corpus = build_corpus();
  energy_magnitude(corpus);
  two_stage(corpus);
  fairness(corpus);
  timing();
  determinism(cli);
  return failures;
}
