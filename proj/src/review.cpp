#include "moslabel/review.hpp"

#include <bit>
#include <chrono>
#include <cstring>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "moslabel/errors.hpp"

namespace moslabel {

using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  static_assert(std::endian::native == std::endian::little);
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void reply_error(httplib::Response& res, int status, const std::string& reason) {
  res.status = status;
  res.set_content(json{{"error", reason}}.dump(), "application/json");
}

json box_json(const Aabb& b) {
  return {{"min", {b.min_corner.x(), b.min_corner.y(), b.min_corner.z()}},
          {"max", {b.max_corner.x(), b.max_corner.y(), b.max_corner.z()}}};
}

}  // namespace

std::pair<std::string, int> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : address.substr(0, colon);
  const std::string port = colon == std::string::npos ? address : address.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
    return {host.empty() ? "127.0.0.1" : host, p};
  } catch (const std::exception&) {
    throw Error(Errc::configuration, "bad serve address '" + address + "'");
  }
}

ReviewService::ReviewService(ReviewState state)
    : state_(std::move(state)), loader_(disk_scan_loader(state_.manifest)), server_(std::make_unique<httplib::Server>()) {
  // only SO_REUSEADDR: the library default also sets SO_REUSEPORT, which lets a second server share a busy port
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  edits_ = read_edit_log(state_.edit_log);
  current_ = apply_edits(state_.annotations, edits_);
  routes();
}

ReviewService::~ReviewService() { stop(); }

ScanAnnotation ReviewService::annotation(std::size_t frame) const {
  std::lock_guard lock(mutex_);
  return current_.at(frame);
}

int ReviewService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  spdlog::info("review service on {}:{}", host, bound);
  return bound;
}

void ReviewService::listen() { server_->listen_after_bind(); }

void ReviewService::stop() {
  if (server_) server_->stop();
}

void ReviewService::routes() {
  auto frame_of = [this](const httplib::Request& req, httplib::Response& res) -> std::optional<std::size_t> {
    const std::string& text = req.matches[1].str();
    std::size_t t = 0;
    try {
      t = std::stoul(text);
    } catch (const std::exception&) {
      reply_error(res, 400, "bad frame index '" + text + "'");
      return std::nullopt;
    }
    if (t >= state_.quads.size()) {
      reply_error(res, 404, "frame " + text + " out of range");
      return std::nullopt;
    }
    return t;
  };

  server_->Get("/api/frames", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    std::lock_guard lock(mutex_);
    for (const auto& [t, a] : current_) {
      out.push_back({{"frame", t},
                     {"timestamp", state_.timestamps.at(t)},
                     {"points", a.size()},
                     {"dynamic", a.count(MosClass::dynamic)}});
    }
    res.set_content(out.dump(), "application/json");
  });

  server_->Get(R"(/api/frames/([^/]+)/points)", [this, frame_of](const httplib::Request& req, httplib::Response& res) {
    const auto t = frame_of(req, res);
    if (!t) return;
    const SyncedScan scan = merge_scans(state_.quads[*t], state_.manifest, loader_, state_.sync);
    const ScanAnnotation a = annotation(*t);
    if (a.size() != scan.cloud.size()) {
      reply_error(res, 500, "annotation does not match the scan");
      return;
    }
    const auto labels = a.to_labels();
    std::string body;
    body.reserve(4 + 16 * labels.size());
    put_u32(body, static_cast<std::uint32_t>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const Vec3& p = scan.cloud.points[i];
      put_f32(body, static_cast<float>(p.x()));
      put_f32(body, static_cast<float>(p.y()));
      put_f32(body, static_cast<float>(p.z()));
      put_u32(body, labels[i].raw);
    }
    res.set_content(body, "application/octet-stream");
  });

  server_->Get(R"(/api/frames/([^/]+)/tracks)", [this, frame_of](const httplib::Request& req, httplib::Response& res) {
    const auto t = frame_of(req, res);
    if (!t) return;
    json tracks = json::array();
    for (const Track& track : state_.tracks) {
      for (const auto& o : track.observations) {
        if (o.frame != *t) continue;
        json j = box_json(o.box);
        j["track"] = track.id;
        j["instance"] = o.instance;
        j["status"] = to_string(track.status);
        j["centroid"] = {o.centroid.x(), o.centroid.y(), o.centroid.z()};
        tracks.push_back(std::move(j));
      }
    }
    json boxes = json::array();
    for (const auto& b : state_.boxes) {
      if (b.frame != *t) continue;
      json j = box_json(b.box);
      j["track"] = b.track;
      j["lambda"] = b.lambda;
      boxes.push_back(std::move(j));
    }
    res.set_content(json{{"frame", *t}, {"tracks", tracks}, {"augmented", boxes}}.dump(), "application/json");
  });

  server_->Post(R"(/api/frames/([^/]+)/edits)", [this, frame_of](const httplib::Request& req, httplib::Response& res) {
    const auto t = frame_of(req, res);
    if (!t) return;
    EditRecord edit;
    try {
      json body = json::parse(req.body);
      if (!body.is_object()) throw Error(Errc::format, "edit must be a JSON object");
      if (body.contains("frame") && body["frame"] != *t) throw Error(Errc::format, "frame in body differs from the URL");
      body["frame"] = *t;
      if (!body.contains("timestamp")) {
        body["timestamp"] =
            std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
      }
      edit = edit_from_json(body.dump());
      resolve_edit(state_.annotations, edit);
    } catch (const std::exception& e) {
      reply_error(res, 400, e.what());
      return;
    }
    std::lock_guard lock(mutex_);
    try {
      append_edit(state_.edit_log, edit);
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
      return;
    }
    edits_.push_back(edit);
    current_ = apply_edits(state_.annotations, edits_);
    const ScanAnnotation& a = current_.at(*t);
    res.set_content(json{{"accepted", true},
                         {"edits", edits_.size()},
                         {"frame", *t},
                         {"dynamic", a.count(MosClass::dynamic)},
                         {"static", a.count(MosClass::static_)}}
                        .dump(),
                    "application/json");
  });

  server_->Get("/api/summary", [this](const httplib::Request&, httplib::Response& res) {
    std::size_t points = 0, dynamic = 0, moving = 0;
    std::lock_guard lock(mutex_);
    for (const auto& [t, a] : current_) {
      points += a.size();
      dynamic += a.count(MosClass::dynamic);
    }
    for (const Track& track : state_.tracks) moving += track.status == TrackStatus::confirmed_moving ? 1 : 0;
    res.set_content(json{{"sequence", state_.manifest.name},
                         {"frames", current_.size()},
                         {"points", points},
                         {"dynamic_points", dynamic},
                         {"tracks", state_.tracks.size()},
                         {"moving_tracks", moving},
                         {"augmented_boxes", state_.boxes.size()},
                         {"edits", edits_.size()}}
                        .dump(),
                    "application/json");
  });
}

}  // namespace moslabel
