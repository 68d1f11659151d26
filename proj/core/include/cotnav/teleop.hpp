#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cotnav/io.hpp"
#include "cotnav/map_memory.hpp"
#include "cotnav/scene.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

struct TeleopConfig {
  std::filesystem::path trajectories_path;  // committed human demos are appended here
  std::string manifest_hash;
  SimConfig sim;
};

/// HTTP service for recording human demonstrations.
///
///   GET  /api/session/new            start a session on the next episode
///   GET  /api/session/{id}/state     render payload
///   POST /api/session/{id}/action    {"action": "<name>"}; returns the new state
///   POST /api/session/{id}/commit    replay-validate and persist; returns the trajectory id
///   POST /api/session/{id}/discard   drop the session without writing anything
///   GET  /api/session/{id}/events    server-sent state updates
///   GET  /api/trajectories           committed human trajectories
///
/// Errors are JSON {"error": "..."} with 404 (unknown session), 409 (episode
/// already terminal, or committing a running episode) or 400 (malformed body).
class TeleopServer {
 public:
  TeleopServer(std::vector<Scene> scenes, std::vector<Episode> episodes, TeleopConfig config);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and blocks until stop(). Returns false when the port cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (or -1); pair with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Fog-of-war payload: explored cells only, no room types.
OrderedJson render_payload(const std::string& session_id, const Scene& scene, const EpisodeState& state,
                           const Observation& observation, const MapMemory& memory);

}  // namespace cotnav
