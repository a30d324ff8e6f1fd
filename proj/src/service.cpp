#include "pkcurve/service.hpp"

#include <fstream>

#include <httplib.h>

#include "pkcurve/errors.hpp"
#include "pkcurve/io.hpp"
#include "pkcurve/metrics.hpp"

namespace pkc {

using nlohmann::json;

struct SessionService::Session {
  std::string id;
  BuildOptions options;
  std::mutex edit_mutex;  // single writer
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const CurveDocument> doc;
  std::uint64_t revision = 0;
  EditHistory history;

  std::pair<std::shared_ptr<const CurveDocument>, std::uint64_t> snapshot() const {
    std::lock_guard lock(snapshot_mutex);
    return {doc, revision};
  }
};

namespace {

// Request-level failure carrying its HTTP status.
struct RequestError {
  int status;
  std::string reason;
};

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw RequestError{400, "request body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw RequestError{400, e.what()};
  }
}

Point2 body_point(const json& j, const char* key) {
  if (!j.contains(key)) throw RequestError{400, std::string("missing '") + key + "'"};
  const json& p = j[key];
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
    throw RequestError{400, std::string("'") + key + "' must be [x, y]"};
  return {p[0].get<double>(), p[1].get<double>()};
}

ServiceResponse error(int status, const std::string& reason) { return {status, {{"error", reason}}}; }

json stage_json(const StageReport& s) {
  return {{"iterations", s.iterations},
          {"initial_objective", s.initial_objective},
          {"final_objective", s.final_objective},
          {"termination", to_string(s.termination)}};
}

json report_json(const EditReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) stages.push_back(stage_json(s));
  return {{"window", r.window},
          {"degraded", r.degraded},
          {"continuation_steps", r.continuation_steps},
          {"seconds", r.seconds},
          {"stages", stages}};
}

// Segments whose stored records differ between two revisions, plus any new ones.
json delta(const CurveDocument& before, const CurveDocument& after, std::uint64_t revision,
           const EditReport* report) {
  json changed = json::array(), segments = json::array();
  for (std::size_t i = 0; i < after.segments.size(); ++i) {
    if (i < before.segments.size() && before.segments[i] == after.segments[i]) continue;
    changed.push_back(i);
    json s = to_json(after.segments[i]);
    s["index"] = i;
    segments.push_back(std::move(s));
  }
  json points = json::array();
  for (const auto& p : after.points) points.push_back({p.x, p.y});
  json d{{"revision", revision},
         {"changed_segment_indices", changed},
         {"segments", segments},
         {"segment_count", after.segments.size()},
         {"topology", to_string(after.topology)},
         {"points", points}};
  if (after.mode.geometric()) {
    json joints = json::array();
    for (const auto& g : after.joints) joints.push_back({{"alpha", g.alpha}, {"eta", g.eta}});
    d["joints"] = joints;
  }
  d["report"] = report ? report_json(*report) : json(nullptr);
  return d;
}

}  // namespace

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.snapshot_dir) std::filesystem::create_directories(*options_.snapshot_dir);
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ServiceResponse SessionService::create(const std::string& body) {
  try {
    json j = parse_body(body);
    auto s = std::make_shared<Session>();
    ContinuityMode mode = parse_continuity(j.value("continuity", std::string("C2")));
    if (j.contains("weights")) {
      const json& w = j["weights"];
      s->options.weights.lambda_e = w.value("lambda_e", s->options.weights.lambda_e);
      s->options.weights.lambda_c = w.value("lambda_c", s->options.weights.lambda_c);
      if (!(s->options.weights.lambda_e >= 0.0) || !(s->options.weights.lambda_c >= 0.0))
        return error(422, "weights must be non-negative");
    }
    s->doc = std::make_shared<const CurveDocument>(make_document(mode));
    {
      std::lock_guard lock(sessions_mutex_);
      s->id = "d" + std::to_string(next_id_++);
      sessions_[s->id] = s;
    }
    return {201, {{"id", s->id}, {"revision", 0}, {"continuity", to_string(mode)}}};
  } catch (const RequestError& e) {
    return error(e.status, e.reason);
  } catch (const ArgumentError& e) {
    return error(422, e.what());
  } catch (const json::exception& e) {
    return error(400, e.what());
  }
}

template <class Edit>
ServiceResponse SessionService::edit(const std::string& id, const std::string& body, Edit&& apply) {
  auto session = find(id);
  if (!session) return error(404, "unknown document " + id);
  std::lock_guard writer(session->edit_mutex);
  try {
    json j = parse_body(body);
    auto [doc, revision] = session->snapshot();
    if (j.contains("revision") && j["revision"].get<std::uint64_t>() != revision) {
      json e{{"error", "stale revision"}, {"revision", revision}};
      return {409, e};
    }
    EditReport report;
    std::optional<CurveDocument> next = apply(*doc, j, session->options, report, session->history);
    if (!next) return error(422, "nothing to undo");
    if (!apply.is_undo) session->history.record(*doc);
    auto published = std::make_shared<const CurveDocument>(std::move(*next));
    {
      std::lock_guard lock(session->snapshot_mutex);
      session->doc = published;
      revision = ++session->revision;
    }
    if (options_.snapshot_dir) {
      std::ofstream out(*options_.snapshot_dir / (id + "-" + std::to_string(revision) + ".json"));
      out << write_curve_file(*published, session->options.weights, session->options.rule);
    }
    return {200, delta(*doc, *published, revision, apply.is_undo ? nullptr : &report)};
  } catch (const RequestError& e) {
    return error(e.status, e.reason);
  } catch (const json::exception& e) {
    return error(400, e.what());
  } catch (const InfeasibleError& e) {
    return error(422, std::string("solver failure: ") + e.what());
  } catch (const NumericalError& e) {
    return error(422, std::string("solver failure: ") + e.what());
  } catch (const DegenerateSpeedError& e) {
    return error(422, e.what());
  } catch (const std::runtime_error& e) {
    return error(422, e.what());
  } catch (const std::logic_error& e) {
    return error(422, e.what());
  }
}

namespace {

struct InsertEdit {
  static constexpr bool is_undo = false;
  std::optional<CurveDocument> operator()(const CurveDocument& doc, const json& j, const BuildOptions& o,
                                          EditReport& r, EditHistory&) const {
    return insert_point(doc, body_point(j, "point"), o, &r);
  }
};

struct MoveEdit {
  static constexpr bool is_undo = false;
  std::optional<CurveDocument> operator()(const CurveDocument& doc, const json& j, const BuildOptions& o,
                                          EditReport& r, EditHistory&) const {
    if (!j.contains("index") || !j["index"].is_number_unsigned()) throw RequestError{400, "missing 'index'"};
    return move_point(doc, j["index"].get<std::size_t>(), body_point(j, "point"), o, &r);
  }
};

struct CloseEdit {
  static constexpr bool is_undo = false;
  std::optional<CurveDocument> operator()(const CurveDocument& doc, const json&, const BuildOptions& o,
                                          EditReport& r, EditHistory&) const {
    return close_curve(doc, o, &r);
  }
};

struct UndoEdit {
  static constexpr bool is_undo = true;
  std::optional<CurveDocument> operator()(const CurveDocument&, const json&, const BuildOptions&, EditReport&,
                                          EditHistory& history) const {
    if (!history.can_undo()) return std::nullopt;
    return history.undo();
  }
};

}  // namespace

ServiceResponse SessionService::insert(const std::string& id, const std::string& body) {
  return edit(id, body, InsertEdit{});
}
ServiceResponse SessionService::move(const std::string& id, const std::string& body) {
  return edit(id, body, MoveEdit{});
}
ServiceResponse SessionService::close(const std::string& id, const std::string& body) {
  return edit(id, body, CloseEdit{});
}
ServiceResponse SessionService::undo(const std::string& id, const std::string& body) {
  return edit(id, body, UndoEdit{});
}

ServiceResponse SessionService::get(const std::string& id) const {
  auto session = find(id);
  if (!session) return error(404, "unknown document " + id);
  auto [doc, revision] = session->snapshot();
  json j = curve_to_json(*doc, session->options.weights, session->options.rule);
  j["id"] = id;
  j["revision"] = revision;
  return {200, j};
}

ServiceResponse SessionService::comb(const std::string& id, double scale, int samples) const {
  auto session = find(id);
  if (!session) return error(404, "unknown document " + id);
  auto [doc, revision] = session->snapshot();
  try {
    json j = to_json(comb_geometry(*doc, samples, scale));
    j["revision"] = revision;
    return {200, j};
  } catch (const DomainError& e) {
    return error(422, e.what());
  } catch (const DegenerateSpeedError& e) {
    return error(422, e.what());
  }
}

void SessionService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Post("/doc", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, create(req.body));
  });
  server.Post(R"(/doc/([^/]+)/point)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, insert(req.matches[1], req.body));
  });
  server.Post(R"(/doc/([^/]+)/move)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, move(req.matches[1], req.body));
  });
  server.Post(R"(/doc/([^/]+)/close)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, close(req.matches[1], req.body));
  });
  server.Post(R"(/doc/([^/]+)/undo)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, undo(req.matches[1], req.body));
  });
  server.Get(R"(/doc/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get(req.matches[1]));
  });
  server.Get(R"(/doc/([^/]+)/comb)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    double scale = 1.0;
    int samples = 64;
    try {
      if (req.has_param("scale")) scale = std::stod(req.get_param_value("scale"));
      if (req.has_param("samples")) samples = std::stoi(req.get_param_value("samples"));
    } catch (const std::exception&) {
      reply(res, error(400, "bad query parameter"));
      return;
    }
    reply(res, comb(req.matches[1], scale, samples));
  });
}

bool serve(const std::string& host, int port, ServiceOptions options) {
  SessionService service(std::move(options));
  httplib::Server server;
  service.mount(server);
  return server.listen(host, port);
}

}  // namespace pkc
