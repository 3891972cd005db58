#include "prefrank/service.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/image.hpp"
#include "prefrank/pool.hpp"
#include "prefrank/session_log.hpp"

namespace prefrank::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StoredImage {
  std::string bytes;
  std::string etag;
};

struct LiveSession {
  std::mutex mutex;
  ranking::SessionFile file;
  explicit LiveSession(ranking::SessionFile f) : file(std::move(f)) {}
};

const std::regex kIdPattern("[A-Za-z0-9_][A-Za-z0-9_.-]*");

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

json progress_json(const ranking::SortSession& s) {
  const std::size_t n = s.header().items.size();
  const std::size_t at_most = ranking::max_queries(s.header().schedule, n);
  const std::size_t answered = s.answered();
  return json{{"answered", answered},
              {"at_most", at_most},
              {"total_items", n},
              {"completed", s.completed()},
              {"estimated_remaining", s.completed() ? 0 : (at_most > answered ? at_most - answered : 0)}};
}

std::string image_url(int id) { return "/api/images/" + std::to_string(id) + ".png"; }

}  // namespace

struct AnnotateService::Impl {
  ServiceConfig config;
  std::vector<int> items;
  std::string pool_name;
  std::map<int, StoredImage> images;
  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions;
  httplib::Server server;

  fs::path session_dir() const { return config.data_dir / "sessions"; }
  fs::path session_path(const std::string& id) const { return session_dir() / ("session-" + id + ".jsonl"); }

  // Existing sessions are opened from disk on first access.
  std::shared_ptr<LiveSession> find(const std::string& id) {
    if (!std::regex_match(id, kIdPattern)) return nullptr;
    std::lock_guard lock(sessions_mutex);
    if (auto it = sessions.find(id); it != sessions.end()) return it->second;
    const fs::path path = session_path(id);
    if (!fs::exists(path)) return nullptr;
    auto live = std::make_shared<LiveSession>(ranking::SessionFile::open(path));
    sessions.emplace(id, live);
    return live;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return fail(res, 400, "body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("annotator_id") || !body.contains("emotion"))
      return fail(res, 400, "annotator_id and emotion are required");
    std::string annotator;
    Emotion emotion;
    std::uint64_t seed = 0;
    try {
      annotator = body.at("annotator_id").get<std::string>();
      emotion = parse_emotion(body.at("emotion").get<std::string>());
      if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
    } catch (const std::exception& e) {
      return fail(res, 400, e.what());
    }
    if (!std::regex_match(annotator, kIdPattern)) return fail(res, 400, "annotator_id has invalid characters");
    if (body.contains("pool_ref") && !body["pool_ref"].is_null()) {
      const auto ref = body["pool_ref"].get<std::string>();
      if (ref != pool_name && ref != fs::path(pool_name).filename().string())
        return fail(res, 400, "this server serves pool '" + pool_name + "', not '" + ref + "'");
    }
    const std::string id = annotator + "-" + to_string(emotion);
    bool created = false;
    {
      std::lock_guard lock(sessions_mutex);
      const fs::path path = session_path(id);
      if (!sessions.count(id) && !fs::exists(path)) {
        fs::create_directories(session_dir());
        ranking::SessionHeader h{items, emotion, annotator, seed, ranking::Schedule::MergeSort};
        sessions.emplace(id, std::make_shared<LiveSession>(ranking::SessionFile::create(path, h)));
        created = true;
      }
    }
    auto live = find(id);
    if (!live) return fail(res, 500, "session could not be opened");
    std::lock_guard lock(live->mutex);
    reply(res, created ? 201 : 200,
          json{{"session_id", id}, {"resumed", !created}, {"progress", progress_json(live->file.session())}});
  }

  void next(const std::string& id, httplib::Response& res) {
    auto live = find(id);
    if (!live) return fail(res, 404, "unknown session '" + id + "'");
    std::lock_guard lock(live->mutex);
    const auto& s = live->file.session();
    if (auto q = s.pending()) {
      reply(res, 200,
            json{{"session_id", id},
                 {"query_id", q->query_id},
                 {"emotion", to_string(q->emotion)},
                 {"left", image_url(q->left_id)},
                 {"right", image_url(q->right_id)},
                 {"left_id", q->left_id},
                 {"right_id", q->right_id},
                 {"progress", progress_json(s)}});
    } else {
      reply(res, 200,
            json{{"session_id", id},
                 {"completed", true},
                 {"ranking_url", "/api/sessions/" + id + "/ranking"},
                 {"progress", progress_json(s)}});
    }
  }

  void answer(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto live = find(id);
    if (!live) return fail(res, 404, "unknown session '" + id + "'");
    std::int64_t query_id = 0;
    int winner = 0;
    try {
      const json body = json::parse(req.body);
      query_id = body.at("query_id").get<std::int64_t>();
      winner = body.at("winner").get<int>();
    } catch (const std::exception&) {
      return fail(res, 400, "body must be {\"query_id\": int, \"winner\": int}");
    }
    std::lock_guard lock(live->mutex);
    const auto& s = live->file.session();
    const auto& log = s.log();
    // A replay of an already applied answer is acknowledged again without a
    // second append.
    if (query_id >= 0 && static_cast<std::size_t>(query_id) < log.size()) {
      const auto& entry = log[static_cast<std::size_t>(query_id)];
      if (entry.winner == winner)
        return reply(res, 200, json{{"accepted", true}, {"duplicate", true}, {"progress", progress_json(s)}});
      return fail(res, 409, "query " + std::to_string(query_id) + " was already answered differently");
    }
    try {
      live->file.submit(ranking::ComparisonAnswer{query_id, winner}, now_ms());
    } catch (const StaleAnswer& e) {
      return fail(res, 409, e.what());
    } catch (const InvalidWinner& e) {
      return fail(res, 400, e.what());
    }
    reply(res, 200, json{{"accepted", true}, {"duplicate", false}, {"progress", progress_json(s)}});
  }

  void progress(const std::string& id, httplib::Response& res) {
    auto live = find(id);
    if (!live) return fail(res, 404, "unknown session '" + id + "'");
    std::lock_guard lock(live->mutex);
    json p = progress_json(live->file.session());
    p["session_id"] = id;
    reply(res, 200, p);
  }

  void ranking_of(const std::string& id, httplib::Response& res) {
    auto live = find(id);
    if (!live) return fail(res, 404, "unknown session '" + id + "'");
    std::lock_guard lock(live->mutex);
    const auto& s = live->file.session();
    if (!s.completed()) return fail(res, 409, "session '" + id + "' is not completed");
    const auto& r = *s.result();
    reply(res, 200,
          json{{"session_id", id},
               {"annotator_id", s.header().annotator_id},
               {"emotion", to_string(s.header().emotion)},
               {"ranking", r.order},
               {"comparisons", s.answered()},
               {"consistency", ranking::consistency_check(r, s.log())}});
  }

  void image(const httplib::Request& req, httplib::Response& res, int id) {
    const auto it = images.find(id);
    if (it == images.end()) return fail(res, 404, "unknown image " + std::to_string(id));
    res.set_header("ETag", it->second.etag);
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    if (req.get_header_value("If-None-Match") == it->second.etag) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(it->second.bytes, "image/png");
  }

  void routes() {
    server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
    server.Get(R"(/api/sessions/([^/]+)/next)",
               [this](const httplib::Request& req, httplib::Response& res) { next(req.matches[1], res); });
    server.Post(R"(/api/sessions/([^/]+)/answer)",
                [this](const httplib::Request& req, httplib::Response& res) { answer(req.matches[1], req, res); });
    server.Get(R"(/api/sessions/([^/]+)/progress)",
               [this](const httplib::Request& req, httplib::Response& res) { progress(req.matches[1], res); });
    server.Get(R"(/api/sessions/([^/]+)/ranking)",
               [this](const httplib::Request& req, httplib::Response& res) { ranking_of(req.matches[1], res); });
    server.Get(R"(/api/images/(\d{1,9})\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      image(req, res, std::stoi(req.matches[1]));
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        fail(res, 500, e.what());
      } catch (...) {
        fail(res, 500, "unknown error");
      }
    });
    if (!config.static_dir.empty()) server.set_mount_point("/", config.static_dir.string());
  }
};

AnnotateService::AnnotateService(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  const auto pool = dataset::read_pool(impl_->config.pool);
  if (pool.size() < 1) throw InvalidItems("pool " + impl_->config.pool.string() + " is empty");
  impl_->pool_name = impl_->config.pool.filename().string();
  const fs::path base = impl_->config.pool.parent_path();
  for (const auto& e : pool.entries) {
    impl_->items.push_back(e.id);
    const auto bytes = read_bytes(base / dataset::pool_image_name(e.id));
    impl_->images[e.id] = StoredImage{std::string(bytes.begin(), bytes.end()), "\"" + sha256_hex(bytes) + "\""};
  }
  const int threads = std::max(1, impl_->config.threads);
  impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  impl_->routes();
}

AnnotateService::~AnnotateService() { stop(); }

int AnnotateService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool AnnotateService::run() { return impl_->server.listen_after_bind(); }

void AnnotateService::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace prefrank::service
