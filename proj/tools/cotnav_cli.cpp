// Command-line driver for the navigation stack. Every subcommand reads the
// experiment manifest, applies flag overrides, and writes artifacts under the
// manifest's output directory.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cotnav/chat_client.hpp"
#include "cotnav/errors.hpp"
#include "cotnav/pipeline.hpp"
#include "cotnav/teleop.hpp"

namespace {

using namespace cotnav;

struct Common {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--manifest", common.manifest, "Experiment manifest (JSON)");
  cmd->add_option("--seed", common.seed, "Base seed; overrides the manifest");
  cmd->add_option("--out", common.out_dir, "Output directory; overrides the manifest");
}

ExperimentManifest load(const Common& common) {
  ExperimentManifest m = common.manifest.empty() ? ExperimentManifest{} : load_manifest(common.manifest);
  if (common.seed) m.seed = *common.seed;
  if (!common.out_dir.empty()) m.out_dir = common.out_dir;
  m.train.seed = m.seed;
  m.annotator.seed = m.seed;
  m.annotator.success_radius_cells = m.success_radius_cells;
  return m;
}

Pipeline open_pipeline(const ExperimentManifest& m) {
  m.validate();
  Pipeline p(m);
  save_manifest(p.manifest(), m.out_dir / "manifest.json");
  return p;
}

TeleopServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-goal navigation research pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  auto* gen_scenes = app.add_subcommand("gen-scenes", "Generate procedural scenes");
  std::optional<int> scene_count, width, height, rooms;
  add_common(gen_scenes, common);
  gen_scenes->add_option("--count", scene_count, "Number of scenes");
  gen_scenes->add_option("--width", width, "Grid width in cells");
  gen_scenes->add_option("--height", height, "Grid height in cells");
  gen_scenes->add_option("--rooms", rooms, "Rooms per scene");

  auto* gen_episodes = app.add_subcommand("gen-episodes", "Write the split and training episodes");
  std::optional<std::string> split_flag;
  std::optional<int> per_scene;
  add_common(gen_episodes, common);
  gen_episodes->add_option("--split", split_flag, "object_gen or scene_gen")->check(CLI::IsMember({"object_gen", "scene_gen"}));
  gen_episodes->add_option("--per-scene", per_scene, "Episodes per training scene");

  auto* demo = app.add_subcommand("demo", "Record scripted demonstrations");
  add_common(demo, common);

  auto* annotate = app.add_subcommand("annotate", "Annotate demonstrations with reasoning records");
  std::optional<std::string> backend;
  std::optional<double> noise;
  add_common(annotate, common);
  annotate->add_option("--backend", backend, "rule or chat")->check(CLI::IsMember({"rule", "chat"}));
  annotate->add_option("--noise", noise, "Per-object detection noise probability");

  auto* train_cmd = app.add_subcommand("train", "Train the softmax policy");
  std::optional<std::string> loss, features;
  std::optional<double> alpha, beta, lr;
  std::optional<int> epochs;
  add_common(train_cmd, common);
  train_cmd->add_option("--loss", loss, "ce or adaptive")->check(CLI::IsMember({"ce", "adaptive"}));
  train_cmd->add_option("--alpha", alpha, "Confidence-weight sharpness");
  train_cmd->add_option("--beta", beta, "Confidence-weight threshold");
  train_cmd->add_option("--features", features, "pure_text, cot or hcot")
      ->check(CLI::IsMember({"pure_text", "cot", "hcot"}));
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--lr", lr, "Learning rate");

  auto* eval = app.add_subcommand("eval", "Evaluate the trained policy");
  bool random_policy = false;
  add_common(eval, common);
  eval->add_option("--split", split_flag, "object_gen or scene_gen")->check(CLI::IsMember({"object_gen", "scene_gen"}));
  eval->add_flag("--random", random_policy, "Evaluate the uniform random baseline instead");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the four-variant ablation ladder");
  add_common(ablate, common);

  auto* serve = app.add_subcommand("serve", "Run the teleoperation service");
  int port = 8080;
  std::string host = "127.0.0.1";
  add_common(serve, common);
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "Bind address");

  auto* validate = app.add_subcommand("validate", "Replay and schema checks over produced artifacts");
  add_common(validate, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto m = load(common);
    if (*gen_scenes) {
      if (scene_count) m.scene_count = *scene_count;
      if (width) m.scene_width = *width;
      if (height) m.scene_height = *height;
      if (rooms) m.room_count = *rooms;
      const auto scenes = open_pipeline(m).gen_scenes();
      std::cout << "wrote " << scenes.size() << " scenes to " << m.resolve(m.paths.scenes_dir).string() << "\n";
    } else if (*gen_episodes) {
      if (split_flag) m.split_mode = parse_split_mode(*split_flag);
      if (per_scene) m.episodes_per_scene = *per_scene;
      const auto eps = open_pipeline(m).gen_episodes();
      std::cout << "wrote " << eps.size() << " training episodes (" << to_string(m.split_mode) << ")\n";
    } else if (*demo) {
      FilterReport report;
      const auto kept = open_pipeline(m).demo(&report);
      std::cout << "kept " << kept.size() << " demos; removed " << report.removed_failure_stop << " failed stops, "
                << report.removed_timeout << " timeouts, " << report.removed_too_long << " over-length\n";
    } else if (*annotate) {
      if (backend) m.annotator_backend = *backend;
      if (noise) m.annotator.noise = *noise;
      auto p = open_pipeline(m);
      AnnotatorBackend b = RuleBackend{};
      if (m.annotator_backend == "chat") {
        b = ChatBackend{std::make_shared<ChatClient>(ChatClientConfig::from_env()), 0.0};
      }
      const auto records = p.annotate(b);
      std::cout << "wrote " << records.size() << " reasoning records\n";
    } else if (*train_cmd) {
      if (loss) m.train.loss = *parse_loss_mode(*loss);
      if (features) m.features = *parse_feature_set(*features);
      if (alpha) m.train.alpha = *alpha;
      if (beta) m.train.beta = *beta;
      if (epochs) m.train.epochs = *epochs;
      if (lr) m.train.learning_rate = *lr;
      const auto result = open_pipeline(m).train();
      if (!result.log.empty()) {
        std::printf("trained %d epochs: loss %.4f, accuracy %.3f\n", result.log.back().epoch,
                    result.log.back().mean_loss, result.log.back().accuracy);
      }
    } else if (*eval) {
      std::optional<SplitMode> mode;
      if (split_flag) mode = parse_split_mode(*split_flag);
      const auto report = open_pipeline(m).eval(mode, random_policy);
      std::printf("episodes %zu  SR %.3f  SPL %.3f  SoftSPL %.3f\n", report.metrics.n, report.metrics.sr,
                  report.metrics.spl, report.metrics.soft_spl);
    } else if (*ablate) {
      const auto rows = open_pipeline(m).ablate();
      std::cout << format_ablation_text(rows);
    } else if (*serve) {
      auto p = open_pipeline(m);
      TeleopConfig config{m.resolve(m.paths.human_demos), p.hash(), p.sim_config()};
      TeleopServer server(p.load_scenes(), load_episodes(m.resolve(m.paths.episodes)), config);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on http://" << host << ":" << port << std::endl;
      if (!server.listen(host, port)) throw ValidationError("cannot bind " + host + ":" + std::to_string(port));
      g_server = nullptr;
    } else if (*validate) {
      const auto checks = open_pipeline(m).validate();
      int failures = 0;
      for (const auto& c : checks) {
        std::cout << (c.ok ? "ok    " : "FAIL  ") << c.artifact << (c.ok ? "" : ": " + c.message) << "\n";
        failures += c.ok ? 0 : 1;
      }
      if (checks.empty()) std::cout << "no artifacts found under " << m.out_dir.string() << "\n";
      return failures == 0 ? 0 : 1;
    }
  } catch (const cotnav::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
