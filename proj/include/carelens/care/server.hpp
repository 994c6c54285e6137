#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "carelens/care/service.hpp"
#include "json.hpp"

namespace carelens::care {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::chrono::milliseconds sync_interval{60000};
  /// Re-read on every sync tick; no background sync when empty.
  std::optional<std::string> upstream;
  /// Local store file that a successful sync replaces atomically.
  std::optional<std::string> persist_to;
};

/// Parses a POST /identify body and runs it. Throws RequestError for anything the
/// caller got wrong. Body: {"embedding": [128 numbers]} or
/// {"image": "probe.pgm", "landmarks": [[x, y] x5]}; optional "now" in unix seconds.
nlohmann::ordered_json handle_identify(const CareService& service, const std::string& body);

nlohmann::ordered_json health_json(const CareService& service);

/// Loopback HTTP front end with a background sync thread.
class CareServer {
 public:
  CareServer(std::shared_ptr<CareService> service, ServerConfig config);
  ~CareServer();
  CareServer(const CareServer&) = delete;
  CareServer& operator=(const CareServer&) = delete;

  /// Binds and starts serving on background threads. Returns the bound port.
  int start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  /// One sync pass now; returns false (and keeps the old snapshot) on failure.
  bool sync_once();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace carelens::care
