#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pkcurve/builder.hpp"
#include "pkcurve/metrics.hpp"

namespace pkc {

inline constexpr int kFileVersion = 1;

// Raised for files that parse as JSON but do not describe a valid input,
// and for JSON syntax errors.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointSetFile {
  int version = kFileVersion;
  Topology topology = Topology::Open;
  ContinuityMode mode = ContinuityMode::C2();
  std::vector<Point2> points;
  EnergyWeights weights;
  std::optional<SolverSettings> settings;
};

PointSetFile parse_point_set(const nlohmann::json& j);
PointSetFile read_point_set(const std::string& path);
nlohmann::json to_json(const PointSetFile& file);

std::string to_string(Topology topology);
Topology parse_topology(const std::string& text);

// CurveFile: the full document plus an embedded energy report that readers ignore.
nlohmann::json curve_to_json(const CurveDocument& doc, EnergyWeights weights = {}, QuadratureRule rule = {});
CurveDocument curve_from_json(const nlohmann::json& j);

std::string write_curve_file(const CurveDocument& doc, EnergyWeights weights = {}, QuadratureRule rule = {});
CurveDocument read_curve_file(const std::string& text);

nlohmann::json to_json(const EnergyReport& report);
nlohmann::json to_json(const CombGeometry& comb);
nlohmann::json to_json(const SegmentRecord& segment);

inline constexpr int kSvgSamplesPerSegment = 256;

struct SvgOptions {
  std::optional<double> comb_scale;
  int comb_samples = 64;
  double margin = 0.05;  // fraction of the larger bbox side
};

std::string write_svg(const CurveDocument& doc, const SvgOptions& options = {});

}  // namespace pkc
