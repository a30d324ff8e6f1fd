#include "pkcurve/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pkcurve/errors.hpp"

namespace pkc {

using nlohmann::json;

namespace {

Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError("point must be [x, y]");
  Point2 p{j[0].get<double>(), j[1].get<double>()};
  if (!is_finite(p)) throw FormatError("point coordinates must be finite");
  return p;
}

json point_to_json(const Point2& p) { return json::array({p.x, p.y}); }

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type");
  }
}

int check_version(const json& j) {
  int v = field<int>(j, "version");
  if (v != kFileVersion) throw FormatError("unsupported version " + std::to_string(v));
  return v;
}

ContinuityMode mode_field(const json& j) {
  try {
    return parse_continuity(field<std::string>(j, "continuity"));
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

std::string to_string(Topology topology) { return topology == Topology::Closed ? "closed" : "open"; }

Topology parse_topology(const std::string& text) {
  std::string t = text;
  std::ranges::transform(t, t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "open") return Topology::Open;
  if (t == "closed") return Topology::Closed;
  throw FormatError("unknown topology '" + text + "'");
}

PointSetFile parse_point_set(const json& j) {
  if (!j.is_object()) throw FormatError("point set must be a JSON object");
  PointSetFile f;
  f.version = check_version(j);
  f.topology = parse_topology(field<std::string>(j, "topology"));
  f.mode = mode_field(j);
  if (!j.contains("points") || !j["points"].is_array()) throw FormatError("missing field 'points'");
  for (const auto& p : j["points"]) f.points.push_back(point_from_json(p));
  if (f.points.size() < 3) throw FormatError("a point set needs at least 3 points");
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    if (!w.is_object()) throw FormatError("'weights' must be an object");
    f.weights.lambda_e = w.value("lambda_e", f.weights.lambda_e);
    f.weights.lambda_c = w.value("lambda_c", f.weights.lambda_c);
    if (!(f.weights.lambda_e >= 0.0) || !(f.weights.lambda_c >= 0.0))
      throw FormatError("weights must be non-negative");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (!s.is_object()) throw FormatError("'solver' must be an object");
    SolverSettings st;
    st.epsilon = s.value("epsilon", st.epsilon);
    st.max_iterations = s.value("max_iterations", st.max_iterations);
    st.kkt_tolerance = s.value("kkt_tolerance", st.kkt_tolerance);
    st.constraint_tolerance = s.value("constraint_tolerance", st.constraint_tolerance);
    if (st.max_iterations < 1) throw FormatError("max_iterations must be positive");
    f.settings = st;
  }
  return f;
}

PointSetFile read_point_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(e.what());
  }
  return parse_point_set(j);
}

json to_json(const PointSetFile& f) {
  json j{{"version", f.version},
         {"topology", to_string(f.topology)},
         {"continuity", to_string(f.mode)},
         {"points", json::array()},
         {"weights", {{"lambda_e", f.weights.lambda_e}, {"lambda_c", f.weights.lambda_c}}}};
  for (const auto& p : f.points) j["points"].push_back(point_to_json(p));
  if (f.settings) {
    j["solver"] = {{"epsilon", f.settings->epsilon},
                   {"max_iterations", f.settings->max_iterations},
                   {"kkt_tolerance", f.settings->kkt_tolerance},
                   {"constraint_tolerance", f.settings->constraint_tolerance}};
  }
  return j;
}

json to_json(const EnergyReport& report) {
  json segs = json::array();
  for (const auto& t : report.per_segment) segs.push_back({t.parabolic, t.edge, t.length, t.total});
  return {{"average_ep", report.average_ep}, {"max_ep", report.max_ep}, {"per_segment", segs}};
}

json to_json(const CombGeometry& comb) {
  json base = json::array(), tip = json::array();
  for (const auto& p : comb.base_points) base.push_back(point_to_json(p));
  for (const auto& p : comb.tip_points) tip.push_back(point_to_json(p));
  return {{"scale", comb.scale}, {"base_points", base}, {"tip_points", tip}};
}

json to_json(const SegmentRecord& s) {
  json cps = json::array();
  for (const auto& p : s.curve.control_points()) cps.push_back(point_to_json(p));
  return {{"degree", s.curve.degree()},
          {"control_points", cps},
          {"t_interp", s.t},
          {"t_hat", s.t_hat},
          {"point_index", s.point_index},
          {"parabola", {s.parabola.a0, s.parabola.a1, s.parabola.a2}}};
}

json curve_to_json(const CurveDocument& doc, EnergyWeights weights, QuadratureRule rule) {
  json j{{"version", kFileVersion},
         {"continuity", to_string(doc.mode)},
         {"topology", to_string(doc.topology)},
         {"points", json::array()},
         {"segments", json::array()}};
  for (const auto& p : doc.points) j["points"].push_back(point_to_json(p));
  for (const auto& s : doc.segments) j["segments"].push_back(to_json(s));
  if (doc.mode.geometric()) {
    json joints = json::array();
    for (const auto& g : doc.joints) joints.push_back({{"alpha", g.alpha}, {"eta", g.eta}});
    j["joints"] = joints;
  }
  j["energy_report"] = to_json(energy_report(doc, weights, rule));
  return j;
}

CurveDocument curve_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("curve file must be a JSON object");
  check_version(j);
  CurveDocument doc = make_document(mode_field(j));
  doc.topology = parse_topology(field<std::string>(j, "topology"));
  if (j.contains("points")) {
    for (const auto& p : j["points"]) doc.points.push_back(point_from_json(p));
  }
  if (!j.contains("segments") || !j["segments"].is_array()) throw FormatError("missing field 'segments'");
  for (const auto& s : j["segments"]) {
    SegmentRecord rec;
    std::vector<Point2> cps;
    if (!s.contains("control_points") || !s["control_points"].is_array())
      throw FormatError("segment without control_points");
    for (const auto& p : s["control_points"]) cps.push_back(point_from_json(p));
    if (field<int>(s, "degree") != static_cast<int>(cps.size()) - 1)
      throw FormatError("segment degree does not match its control points");
    rec.curve = BezierSegment(std::move(cps));
    rec.t = field<double>(s, "t_interp");
    rec.t_hat = s.value("t_hat", rec.t);
    rec.point_index = field<std::size_t>(s, "point_index");
    auto a = field<std::vector<double>>(s, "parabola");
    if (a.size() != 3) throw FormatError("parabola must have 3 coefficients");
    rec.parabola = {a[0], a[1], a[2]};
    doc.segments.push_back(std::move(rec));
  }
  if (j.contains("joints")) {
    for (const auto& g : j["joints"]) doc.joints.push_back({field<double>(g, "alpha"), field<double>(g, "eta")});
  }
  return doc;
}

std::string write_curve_file(const CurveDocument& doc, EnergyWeights weights, QuadratureRule rule) {
  return curve_to_json(doc, weights, rule).dump(2) + "\n";
}

CurveDocument read_curve_file(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(e.what());
  }
  return curve_from_json(j);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string write_svg(const CurveDocument& doc, const SvgOptions& options) {
  std::vector<Point2> extent = doc.points;
  for (const auto& s : doc.segments)
    for (const auto& p : s.curve.control_points()) extent.push_back(p);
  std::optional<CombGeometry> comb;
  if (options.comb_scale && !doc.segments.empty()) {
    comb = comb_geometry(doc, options.comb_samples, *options.comb_scale);
    extent.insert(extent.end(), comb->tip_points.begin(), comb->tip_points.end());
  }
  BoundingBox box = extent.empty() ? BoundingBox{} : bounding_box(extent);
  double side = std::max({box.width(), box.height(), 1e-12});
  double pad = options.margin * side;
  double x0 = box.min.x - pad, y0 = box.min.y - pad;
  double w = box.width() + 2 * pad, h = box.height() + 2 * pad;
  double dot_r = 0.008 * side, stroke = 0.003 * side;
  // SVG's y axis points down; flip so the picture matches the data.
  auto sx = [&](double x) { return num(x - x0); };
  auto sy = [&](double y) { return num(y0 + h - y); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n";
  if (comb) {
    out << "<g stroke=\"#f4a6c8\" stroke-width=\"" << num(stroke * 0.5) << "\" fill=\"none\">\n";
    for (std::size_t i = 0; i < comb->base_points.size(); ++i) {
      const auto& b = comb->base_points[i];
      const auto& t = comb->tip_points[i];
      out << "<line x1=\"" << sx(b.x) << "\" y1=\"" << sy(b.y) << "\" x2=\"" << sx(t.x) << "\" y2=\"" << sy(t.y)
          << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "<g stroke=\"black\" stroke-width=\"" << num(stroke) << "\" fill=\"none\">\n";
  for (const auto& s : doc.segments) {
    out << "<polyline points=\"";
    for (int i = 0; i < kSvgSamplesPerSegment; ++i) {
      Point2 p = evaluate(s.curve, static_cast<double>(i) / (kSvgSamplesPerSegment - 1));
      if (i) out << ' ';
      out << sx(p.x) << ',' << sy(p.y);
    }
    out << "\"/>\n";
  }
  out << "</g>\n<g fill=\"red\">\n";
  for (const auto& p : doc.points)
    out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"" << num(dot_r) << "\"/>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace pkc
