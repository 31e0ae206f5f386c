#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "scribblefill/config.hpp"

namespace scribblefill {

struct ServiceOptions {
  // Defaults applied to every session before per-session overrides.
  EnrichConfig config;
  // Uploads with more pixels are refused with 413.
  std::size_t max_pixels = std::size_t{4096} * 4096;
};

/// Session-based HTTP API: upload an image once (graph cached), then PUT
/// scribbles and GET label maps / confidence planes.
///
///   POST /v1/sessions                      multipart: image, classes, [config]
///   PUT  /v1/sessions/{id}/scribbles       JSON strokes or indexed mask bytes
///   GET  /v1/sessions/{id}/labels?threshold=t
///   GET  /v1/sessions/{id}/confidence/{class}
///   GET  /v1/healthz
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket. port 0 picks a free port. Returns the bound
  /// port, or nullopt on failure.
  std::optional<int> bind(const std::string& host, int port);
  /// Serves until stop(). Requires a successful bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct HostPort {
  std::string host;
  int port = 0;
};

/// Parses "host:port" (or ":port", or "port"). Returns nullopt if malformed or
/// the port is outside [0, 65535].
std::optional<HostPort> parse_host_port(const std::string& text);

}  // namespace scribblefill
