#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pkcurve/builder.hpp"
#include "pkcurve/errors.hpp"
#include "pkcurve/io.hpp"
#include "pkcurve/metrics.hpp"
#include "pkcurve/service.hpp"

namespace {

enum Exit { kOk = 0, kMalformed = 1, kDegenerate = 2, kSolver = 3 };

struct BuildArgs {
  std::string input;
  std::string out;
  std::string svg;
  double comb = 0.0;
  bool report = false;
  std::string continuity;
  double lambda_e = -1.0;
  double lambda_c = -1.0;
};

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string snapshot_dir;
};

std::string window_text(const pkc::CurveDocument& doc, bool closing) {
  std::size_t n = doc.segments.size();
  if (n == 0) return "bootstrap";
  std::size_t first = closing ? n - 1 : (n >= 2 ? n - 2 : 0);
  return "segments " + std::to_string(first) + ".." + std::to_string(n);
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int run_build(const BuildArgs& a) {
  pkc::PointSetFile file;
  try {
    file = pkc::read_point_set(a.input);
    if (!a.continuity.empty()) file.mode = pkc::parse_continuity(a.continuity);
  } catch (const std::exception& e) {
    std::cerr << "pkcurve: " << a.input << ": " << e.what() << "\n";
    return kMalformed;
  }
  if (a.lambda_e >= 0.0) file.weights.lambda_e = a.lambda_e;
  if (a.lambda_c >= 0.0) file.weights.lambda_c = a.lambda_c;

  pkc::BuildOptions options;
  options.weights = file.weights;
  if (file.settings) options.settings = *file.settings;

  pkc::CurveDocument doc = pkc::make_document(file.mode);
  double seconds = 0.0;
  int timed = 0;
  std::string stage;
  try {
    for (std::size_t i = 0; i < file.points.size(); ++i) {
      stage = "inserting point " + std::to_string(i) + " (" + window_text(doc, false) + ")";
      pkc::EditReport r;
      doc = pkc::insert_point(doc, file.points[i], options, &r);
      if (!r.window.empty()) {
        seconds += r.seconds;
        ++timed;
      }
    }
    if (file.topology == pkc::Topology::Closed) {
      stage = "closing (" + window_text(doc, true) + ")";
      doc = pkc::close_curve(doc, options);
    }
  } catch (const pkc::InfeasibleError& e) {
    std::cerr << "pkcurve: solver failure while " << stage << ": " << e.what() << "\n";
    return kSolver;
  } catch (const pkc::NumericalError& e) {
    std::cerr << "pkcurve: solver failure while " << stage << ": " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "pkcurve: degenerate input while " << stage << ": " << e.what() << "\n";
    return kDegenerate;
  }

  std::string text = pkc::write_curve_file(doc, options.weights, options.rule);
  if (a.out.empty()) {
    std::cout << text;
  } else if (!write_text(a.out, text)) {
    std::cerr << "pkcurve: cannot write " << a.out << "\n";
    return kMalformed;
  }
  if (!a.svg.empty()) {
    pkc::SvgOptions so;
    if (a.comb > 0.0) so.comb_scale = a.comb;
    if (!write_text(a.svg, pkc::write_svg(doc, so))) {
      std::cerr << "pkcurve: cannot write " << a.svg << "\n";
      return kMalformed;
    }
  }
  if (a.report) {
    auto rep = pkc::energy_report(doc, options.weights, options.rule);
    std::fprintf(stderr, "%-8s %-7s %-9s %-10s %-10s %-10s\n", "points", "mode", "segments", "E_bar", "E_hat", "T(s)");
    std::fprintf(stderr, "%-8zu %-7s %-9zu %-10.2e %-10.2e %-10.3f\n", doc.points.size(),
                 pkc::to_string(doc.mode).c_str(), doc.segments.size(), rep.average_ep, rep.max_ep,
                 timed ? seconds / timed : 0.0);
  }
  return kOk;
}

int run_serve(const ServeArgs& a) {
  auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "pkcurve: --bind expects HOST:PORT\n";
    return kMalformed;
  }
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "pkcurve: bad port in " << a.bind << "\n";
    return kMalformed;
  }
  pkc::ServiceOptions options;
  if (!a.snapshot_dir.empty()) options.snapshot_dir = a.snapshot_dir;
  std::cerr << "pkcurve: serving on " << a.bind << "\n";
  if (!pkc::serve(a.bind.substr(0, colon), port, options)) {
    std::cerr << "pkcurve: cannot bind " << a.bind << "\n";
    return kMalformed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpolating curves with parabolic curvature profiles"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build a curve from a point set file");
  b->add_option("input", build.input, "Point set JSON")->required();
  b->add_option("--out", build.out, "CurveFile output (default stdout)")->envname("PKC_OUT");
  b->add_option("--svg", build.svg, "SVG output")->envname("PKC_SVG");
  b->add_option("--comb", build.comb, "Draw the curvature comb with this scale")->envname("PKC_COMB");
  b->add_flag("--report", build.report, "Print energies and insertion time")->envname("PKC_REPORT");
  b->add_option("--continuity", build.continuity, "Override the file's mode")
      ->check(CLI::IsMember({"C1", "C2", "G1", "G2"}, CLI::ignore_case))
      ->envname("PKC_CONTINUITY");
  b->add_option("--lambda-e", build.lambda_e, "Edge regularization weight")
      ->check(CLI::NonNegativeNumber)
      ->envname("PKC_LAMBDA_E");
  b->add_option("--lambda-c", build.lambda_c, "Curve length weight")
      ->check(CLI::NonNegativeNumber)
      ->envname("PKC_LAMBDA_C");

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the editing service");
  s->add_option("--bind", serve.bind, "HOST:PORT")->envname("PKC_BIND");
  s->add_option("--snapshot-dir", serve.snapshot_dir, "Write a CurveFile per revision here")
      ->envname("PKC_SNAPSHOT_DIR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kMalformed;
  }
  if (b->parsed()) return run_build(build);
  return run_serve(serve);
}
