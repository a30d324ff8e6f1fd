#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "pkcurve/builder.hpp"

namespace httplib {
class Server;
}

namespace pkc {

struct ServiceOptions {
  // When set, every revision of every document is written there as a CurveFile.
  std::optional<std::filesystem::path> snapshot_dir;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// In-memory editing sessions. Edits to one document run one at a time;
// reads see the latest published snapshot.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  ServiceResponse create(const std::string& body);
  ServiceResponse insert(const std::string& id, const std::string& body);
  ServiceResponse move(const std::string& id, const std::string& body);
  ServiceResponse close(const std::string& id, const std::string& body);
  ServiceResponse undo(const std::string& id, const std::string& body);
  ServiceResponse get(const std::string& id) const;
  ServiceResponse comb(const std::string& id, double scale, int samples) const;

  void mount(httplib::Server& server);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  template <class Edit>
  ServiceResponse edit(const std::string& id, const std::string& body, Edit&& apply);

  ServiceOptions options_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// Blocks until the server stops. Returns false when the address cannot be bound.
bool serve(const std::string& host, int port, ServiceOptions options = {});

}  // namespace pkc
