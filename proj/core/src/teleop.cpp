#include "cotnav/teleop.hpp"

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>

#include <httplib.h>

#include "cotnav/demonstrator.hpp"
#include "cotnav/errors.hpp"

namespace cotnav {
namespace {

struct Session {
  std::mutex mutex;
  std::condition_variable changed;
  std::size_t version = 0;
  bool closed = false;
  bool committed = false;
  std::string trajectory_id;

  const Scene* scene = nullptr;
  Episode episode;
  EpisodeState state;
  Observation observation;
  MapMemory memory{GridSize{0, 0}};
  std::vector<Action> actions;
};

void send_json(httplib::Response& res, int status, const OrderedJson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, OrderedJson{{"error", message}});
}

}  // namespace

OrderedJson render_payload(const std::string& session_id, const Scene& scene, const EpisodeState& state,
                           const Observation& observation, const MapMemory& memory) {
  OrderedJson j;
  j["session_id"] = session_id;
  j["episode_id"] = state.episode_id;
  j["scene_id"] = scene.id;
  j["target_category"] = state.target_category;
  j["width"] = scene.width;
  j["height"] = scene.height;
  // '?' unexplored, '#' wall, '.' floor.
  auto& grid = j["grid"] = OrderedJson::array();
  for (int y = 0; y < scene.height; ++y) {
    std::string row(static_cast<std::size_t>(scene.width), '?');
    for (int x = 0; x < scene.width; ++x) {
      const auto k = memory.known({x, y});
      if (!memory.explored({x, y})) continue;
      row[static_cast<std::size_t>(x)] = k == KnownCell::floor ? '.' : '#';
    }
    grid.push_back(row);
  }
  j["agent"] = {{"x", state.pose.position.x},
                {"y", state.pose.position.y},
                {"heading", state.pose.heading},
                {"heading_deg", state.pose.heading_deg()},
                {"pitch", state.pose.pitch}};
  auto& visible = j["visible_objects"] = OrderedJson::array();
  for (const auto& o : observation.visible_objects) {
    visible.push_back({{"category", o.category},
                       {"bearing_deg", o.bearing_deg},
                       {"distance_cells", o.distance_cells},
                       {"x", o.cell.x},
                       {"y", o.cell.y}});
  }
  auto& remembered = j["remembered_objects"] = OrderedJson::array();
  for (const auto& s : memory.sightings()) remembered.push_back({{"category", s.category}, {"x", s.cell.x}, {"y", s.cell.y}});
  j["step_count"] = state.steps_taken;
  j["status"] = to_string(state.status);
  j["path_length_m"] = state.path_length_m;
  return j;
}

struct TeleopServer::Impl {
  std::vector<Scene> scenes;
  std::vector<Episode> episodes;
  TeleopConfig config;
  httplib::Server server;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::size_t next_session = 0;
  std::mutex file_mutex;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  // Caller holds the session mutex.
  OrderedJson payload(const std::string& id, const Session& s) {
    auto j = render_payload(id, *s.scene, s.state, s.observation, s.memory);
    j["committed"] = s.committed;
    if (s.committed) j["trajectory_id"] = s.trajectory_id;
    return j;
  }

  void routes() {
    server.Get("/api/session/new", [this](const httplib::Request&, httplib::Response& res) {
      if (episodes.empty()) return send_error(res, 409, "no episodes available");
      auto s = std::make_shared<Session>();
      std::string id;
      {
        std::lock_guard lock(sessions_mutex);
        const auto& episode = episodes[next_session % episodes.size()];
        id = "s" + std::to_string(++next_session);
        sessions[id] = s;
        s->episode = episode;
      }
      std::lock_guard lock(s->mutex);
      for (const auto& sc : scenes) {
        if (sc.id == s->episode.scene_id) s->scene = &sc;
      }
      if (!s->scene) return send_error(res, 409, "episode names an unknown scene");
      s->state = reset(*s->scene, s->episode, config.sim);
      s->observation = observe(*s->scene, s->state);
      s->memory = MapMemory(s->scene->size());
      s->memory.integrate(s->observation);
      send_json(res, 200, payload(id, *s));
    });

    server.Get(R"(/api/session/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mutex);
      send_json(res, 200, payload(req.matches[1], *s));
    });

    server.Post(R"(/api/session/([^/]+)/action)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      Json body = Json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("action") || !body["action"].is_string()) {
        return send_error(res, 400, "body must be {\"action\": \"<name>\"}");
      }
      const auto action = parse_action(body["action"].get<std::string>());
      if (!action) return send_error(res, 400, "unknown action '" + body["action"].get<std::string>() + "'");
      std::lock_guard lock(s->mutex);
      if (s->state.terminal()) return send_error(res, 409, "episode already ended");
      try {
        auto next = step(*s->scene, s->state, *action, config.sim);
        s->state = std::move(next.state);
        s->observation = std::move(next.observation);
      } catch (const IllegalTransitionError& e) {
        return send_error(res, 409, e.what());
      }
      s->memory.integrate(s->observation);
      s->actions.push_back(*action);
      ++s->version;
      s->changed.notify_all();
      send_json(res, 200, payload(req.matches[1], *s));
    });

    server.Post(R"(/api/session/([^/]+)/commit)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mutex);
      if (!s->state.terminal()) return send_error(res, 409, "episode is still running");
      if (s->committed) return send_error(res, 409, "session already committed");
      Trajectory t;
      try {
        t = replay(*s->scene, s->episode, s->actions, DemoSource::human, config.sim);
        t.validate();
      } catch (const Error& e) {
        return send_error(res, 409, std::string("replay validation failed: ") + e.what());
      }
      if (t.outcome != s->state.status || t.steps.size() != s->actions.size()) {
        return send_error(res, 409, "replay validation failed: outcome differs from the live session");
      }
      std::size_t index = 0;
      {
        std::lock_guard file_lock(file_mutex);
        std::vector<Trajectory> all;
        if (std::filesystem::exists(config.trajectories_path)) all = load_trajectories(config.trajectories_path);
        index = all.size();
        all.push_back(t);
        save_trajectories(all, config.trajectories_path, config.manifest_hash);
      }
      s->committed = true;
      s->trajectory_id = "human-" + std::to_string(index);
      ++s->version;
      s->changed.notify_all();
      send_json(res, 200, OrderedJson{{"trajectory_id", s->trajectory_id},
                                      {"episode_id", s->episode.episode_id},
                                      {"outcome", to_string(t.outcome)},
                                      {"steps", t.steps.size()}});
    });

    server.Post(R"(/api/session/([^/]+)/discard)", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<Session> s;
      {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(req.matches[1]);
        if (it == sessions.end()) return send_error(res, 404, "unknown session");
        s = it->second;
        sessions.erase(it);
      }
      std::lock_guard lock(s->mutex);
      s->closed = true;
      s->changed.notify_all();
      send_json(res, 200, OrderedJson{{"discarded", std::string(req.matches[1])}});
    });

    server.Get(R"(/api/session/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      const std::string id = req.matches[1];
      auto sent = std::make_shared<std::optional<std::size_t>>();
      res.set_chunked_content_provider(
          "text/event-stream", [this, s, id, sent](std::size_t, httplib::DataSink& sink) {
            std::unique_lock lock(s->mutex);
            if (*sent) {
              s->changed.wait_for(lock, std::chrono::seconds(15),
                                  [&] { return s->closed || s->version != **sent; });
            }
            if (s->closed) return false;
            if (*sent && s->version == **sent) {
              const std::string ping = ": keep-alive\n\n";
              return sink.write(ping.data(), ping.size());
            }
            const std::string frame = "event: state\ndata: " + payload(id, *s).dump() + "\n\n";
            *sent = s->version;
            return sink.write(frame.data(), frame.size());
          });
    });

    server.Get("/api/trajectories", [this](const httplib::Request&, httplib::Response& res) {
      OrderedJson list = OrderedJson::array();
      std::lock_guard lock(file_mutex);
      if (std::filesystem::exists(config.trajectories_path)) {
        const auto all = load_trajectories(config.trajectories_path);
        for (std::size_t i = 0; i < all.size(); ++i) {
          list.push_back({{"trajectory_id", "human-" + std::to_string(i)},
                          {"episode_id", all[i].episode.episode_id},
                          {"outcome", to_string(all[i].outcome)},
                          {"steps", all[i].steps.size()}});
        }
      }
      send_json(res, 200, OrderedJson{{"trajectories", list}});
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });
  }
};

TeleopServer::TeleopServer(std::vector<Scene> scenes, std::vector<Episode> episodes, TeleopConfig config)
    : impl_(std::make_unique<Impl>()) {
  impl_->scenes = std::move(scenes);
  impl_->episodes = std::move(episodes);
  impl_->config = std::move(config);
  impl_->routes();
}

TeleopServer::~TeleopServer() { stop(); }

bool TeleopServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int TeleopServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool TeleopServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void TeleopServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void TeleopServer::stop() {
  {
    std::lock_guard lock(impl_->sessions_mutex);
    for (auto& [id, s] : impl_->sessions) {
      std::lock_guard slock(s->mutex);
      s->closed = true;
      s->changed.notify_all();
    }
  }
  impl_->server.stop();
}

}  // namespace cotnav
