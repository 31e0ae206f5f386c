#include "scribblefill/service.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>

#include "httplib.h"
#include "json.hpp"
#include "scribblefill/annio.hpp"
#include "scribblefill/error.hpp"
#include "scribblefill/labeling.hpp"
#include "scribblefill/strokes.hpp"

namespace scribblefill {

namespace {

using nlohmann::json;

// State produced by one scribble revision; immutable once published.
struct Snapshot {
  std::uint64_t revision = 0;
  ConfidenceField field;
  SolverReport report;
};

struct Session {
  std::string id;
  ClassTable table;
  EnrichConfig config;
  std::shared_ptr<const PreparedImage> prepared;

  std::mutex update_mutex;  // serializes scribble updates
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const Snapshot> snapshot;
  std::uint64_t revision = 0;  // guarded by update_mutex

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }
  void publish(std::shared_ptr<const Snapshot> s) {
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(s);
  }
};

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Applies a JSON object of overrides on top of `base`.
EnrichConfig merge_config(const EnrichConfig& base, const std::string& overrides) {
  if (overrides.empty()) return base;
  json merged = json::parse(config_to_json(base));
  json patch;
  try {
    patch = json::parse(overrides);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!patch.is_object()) throw ValidationError("config: overrides must be a JSON object");
  for (const auto& [key, value] : patch.items()) {
    if (!merged.contains(key)) throw ValidationError("config: unknown key \"" + key + "\"");
    merged[key] = value;
  }
  return parse_config(merged.dump());
}

std::vector<Stroke> parse_strokes(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("strokes: invalid JSON: ") + e.what());
  }
  const json& list = j.is_object() && j.contains("strokes") ? j["strokes"] : j;
  if (!list.is_array()) throw ValidationError("strokes: expected an array of strokes");
  std::vector<Stroke> strokes;
  for (const auto& s : list) {
    if (!s.is_object() || !s.contains("class") || !s.contains("points")) {
      throw ValidationError("strokes: each stroke needs \"class\" and \"points\"");
    }
    if (!s["class"].is_number_integer()) throw ValidationError("strokes: class must be an integer");
    const auto cls = s["class"].get<std::int64_t>();
    if (cls < 0 || cls >= 255) throw ValidationError("strokes: class id out of range");
    Stroke st;
    st.class_id = static_cast<ClassId>(cls);
    st.radius = s.value("radius", 0);
    if (!s["points"].is_array()) throw ValidationError("strokes: points must be an array");
    for (const auto& p : s["points"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ValidationError("strokes: each point must be [x, y]");
      }
      st.points.emplace_back(static_cast<int>(std::lround(p[0].get<double>())),
                             static_cast<int>(std::lround(p[1].get<double>())));
    }
    strokes.push_back(std::move(st));
  }
  return strokes;
}

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%08llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(++counter));
  return buf;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  bool bound = false;

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty() && req.files.empty()) return send_error(res, 400, "empty request body");
    if (!req.is_multipart_form_data()) {
      return send_error(res, 400, "expected multipart/form-data with image and classes parts");
    }
    if (!req.has_file("image") || req.get_file_value("image").content.empty()) {
      return send_error(res, 400, "missing image part");
    }
    if (!req.has_file("classes")) return send_error(res, 400, "missing classes part");
    try {
      auto session = std::make_shared<Session>();
      session->table = parse_class_table(req.get_file_value("classes").content);
      session->config = merge_config(
          options.config, req.has_file("config") ? req.get_file_value("config").content : "");
      RasterImage image = decode_image(as_bytes(req.get_file_value("image").content));
      if (image.pixel_count() > options.max_pixels) {
        return send_error(res, 413, "image has " + std::to_string(image.pixel_count()) +
                                        " pixels; the limit is " + std::to_string(options.max_pixels));
      }
      std::optional<FeaturePlanes> planes;
      if (req.has_file("features")) {
        planes = decode_feature_planes(as_bytes(req.get_file_value("features").content));
      }
      session->prepared = std::make_shared<const PreparedImage>(
          prepare_image(image, planes ? &*planes : nullptr, session->config));
      session->id = new_session_id();
      {
        std::lock_guard lock(sessions_mutex);
        sessions[session->id] = session;
      }
      send_json(res, 201,
                {{"session_id", session->id}, {"width", image.width}, {"height", image.height}});
    } catch (const Error& e) {
      send_error(res, 400, e.what());
    }
  }

  void put_scribbles(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return send_error(res, 404, "unknown session");
    const PreparedImage& prep = *session->prepared;
    std::vector<ClassId> mask;
    try {
      const std::string type = req.get_header_value("Content-Type");
      if (type.rfind("application/json", 0) == 0) {
        const auto strokes = parse_strokes(req.body);
        for (const auto& s : strokes) {
          if (!session->table.contains(s.class_id)) {
            return send_error(res, 422, "stroke class " + std::to_string(s.class_id) +
                                            " is not in the session class table");
          }
        }
        mask = rasterize_strokes(prep.native_width, prep.native_height, strokes);
      } else {
        if (req.body.empty()) return send_error(res, 422, "no markups");
        GrayImage g = decode_gray(as_bytes(req.body));
        if (g.width != prep.native_width || g.height != prep.native_height) {
          return send_error(res, 400, "mask dimensions do not match the session image");
        }
        mask = std::move(g.values);
      }
    } catch (const Error& e) {
      return send_error(res, 400, e.what());
    }

    std::lock_guard update(session->update_mutex);
    try {
      const CoarseAnnotation ann = CoarseAnnotation::from_index_mask(
          prep.native_width, prep.native_height, mask, session->table.ids());
      EnrichResult result = solve_annotation(prep, ann, session->config);
      auto snap = std::make_shared<Snapshot>();
      snap->revision = ++session->revision;
      snap->field = std::move(result.field);
      snap->report = std::move(result.report);
      session->publish(snap);
      send_json(res, 200, {{"revision", snap->revision}, {"report", json::parse(snap->report.to_json())}});
    } catch (const SolverError& e) {
      send_error(res, 500, e.what());
    } catch (const Error& e) {
      send_error(res, 422, e.what());
    }
  }

  void get_labels(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return send_error(res, 404, "unknown session");
    double threshold = session->config.threshold;
    if (req.has_param("threshold")) {
      const std::string t = req.get_param_value("threshold");
      char* end = nullptr;
      threshold = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size() || !(threshold >= 0.0 && threshold <= 1.0)) {
        return send_error(res, 400, "threshold must be a number in [0, 1]");
      }
    }
    const auto snap = session->current();
    if (!snap) return send_error(res, 409, "no scribbles submitted yet");
    const Bytes png = encode_labelmap_png(noise_control(snap->field, threshold));
    res.status = 200;
    res.set_header("X-Revision", std::to_string(snap->revision));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void get_confidence(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return send_error(res, 404, "unknown session");
    const std::string& cls = req.path_params.at("class");
    int id = -1;
    const auto [ptr, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), id);
    if (ec != std::errc{} || ptr != cls.data() + cls.size() || id < 0 || id >= 255 ||
        !session->table.contains(static_cast<ClassId>(id))) {
      return send_error(res, 404, "unknown class " + cls);
    }
    const auto snap = session->current();
    if (!snap) return send_error(res, 409, "no scribbles submitted yet");
    const int k = snap->field.class_index(static_cast<ClassId>(id));
    if (k < 0) return send_error(res, 404, "unknown class " + cls);
    const Bytes png = encode_confidence_png(snap->field, static_cast<std::size_t>(k));
    res.status = 200;
    res.set_header("X-Revision", std::to_string(snap->revision));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void routes() {
    server.set_payload_max_length(std::size_t{512} << 20);
    server.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    server.Post("/v1/sessions",
                [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });
    server.Put("/v1/sessions/:id/scribbles",
               [this](const httplib::Request& req, httplib::Response& res) { put_scribbles(req, res); });
    server.Get("/v1/sessions/:id/labels",
               [this](const httplib::Request& req, httplib::Response& res) { get_labels(req, res); });
    server.Get("/v1/sessions/:id/confidence/:class", [this](const httplib::Request& req,
                                                            httplib::Response& res) {
      get_confidence(req, res);
    });
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->options.config.validate();
  impl_->routes();
}

Service::~Service() { stop(); }

std::optional<int> Service::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) return std::nullopt;
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) return std::nullopt;
    impl_->bound = true;
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) return std::nullopt;
  impl_->bound = true;
  return port;
}

bool Service::listen() {
  if (!impl_->bound) return false;
  return impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

std::optional<HostPort> parse_host_port(const std::string& text) {
  HostPort hp{"0.0.0.0", 0};
  std::string port_text = text;
  const auto colon = text.rfind(':');
  if (colon != std::string::npos) {
    if (colon > 0) hp.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  if (port_text.empty()) return std::nullopt;
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    return std::nullopt;
  }
  hp.port = port;
  return hp;
}

}  // namespace scribblefill
