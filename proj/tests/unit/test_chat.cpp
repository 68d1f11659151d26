#include <doctest.h>

#include <atomic>
#include <chrono>

#include "cotnav/annotator.hpp"
#include "cotnav/chat_client.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/errors.hpp"
#include "stub_server.hpp"

using namespace cotnav;
using cotnav::testing::chat_body;
using cotnav::testing::StubServer;

namespace {

ChatClientConfig fast_config(const std::string& url) {
  ChatClientConfig c;
  c.base_url = url;
  c.model = "stub";
  c.api_key = "secret-token";
  c.timeout = std::chrono::milliseconds(2000);
  c.initial_backoff = std::chrono::milliseconds(1);
  return c;
}

}  // namespace

TEST_SUITE("chat") {
  TEST_CASE("a fixed answer comes back with auth and model set") {
    std::string auth;
    std::string model;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
      auth = req.get_header_value("Authorization");
      model = nlohmann::json::parse(req.body).at("model").get<std::string>();
      res.set_content(chat_body("hello"), "application/json");
    });
    ChatClient client(fast_config(stub.base_url()));
    CHECK(client.complete({{{"user", "hi"}}, "", 0.0}) == "hello");
    CHECK(auth == "Bearer secret-token");
    CHECK(model == "stub");
  }

  TEST_CASE("transient failures are retried") {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
      if (++calls < 3) {
        res.status = 503;
        return;
      }
      res.set_content(chat_body("ok"), "application/json");
    });
    ChatClient client(fast_config(stub.base_url()));
    CHECK(client.complete({{{"user", "hi"}}, "", 0.0}) == "ok");
    CHECK(calls == 3);
  }

  TEST_CASE("three server errors give a service error") {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 500;
    });
    ChatClient client(fast_config(stub.base_url()));
    try {
      client.complete({{{"user", "hi"}}, "", 0.0});
      FAIL("expected a service error");
    } catch (const ServiceError& e) {
      CHECK(e.status() == 500);
    }
    CHECK(calls == 3);
  }

  TEST_CASE("client errors are not retried") {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 401;
    });
    ChatClient client(fast_config(stub.base_url()));
    CHECK_THROWS_AS(client.complete({{{"user", "hi"}}, "", 0.0}), ServiceError);
    CHECK(calls == 1);
  }

  TEST_CASE("a malformed body is a parse error") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"choices\": []}", "application/json");
    });
    ChatClient client(fast_config(stub.base_url()));
    CHECK_THROWS_AS(client.complete({{{"user", "hi"}}, "", 0.0}), ParseError);
  }

  TEST_CASE("a slow server is a transport error") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(chat_body("late"), "application/json");
    });
    auto config = fast_config(stub.base_url());
    config.timeout = std::chrono::milliseconds(150);
    config.max_attempts = 1;
    ChatClient client(config);
    CHECK_THROWS_AS(client.complete({{{"user", "hi"}}, "", 0.0}), TransportError);
  }

  TEST_CASE("nothing listening is a transport error") {
    int port = 0;
    {
      StubServer probe([](const httplib::Request&, httplib::Response&) {});
      port = probe.port();
    }
    auto config = fast_config("http://127.0.0.1:" + std::to_string(port) + "/v1");
    ChatClient client(config);
    CHECK_THROWS_AS(client.complete({{{"user", "hi"}}, "", 0.0}), TransportError);
  }

  TEST_CASE("bad base URLs are rejected up front") {
    CHECK_THROWS_AS(ChatClient(fast_config("localhost:80")), ValidationError);
  }

  TEST_CASE("chat backend annotates a trajectory in step order") {
    StubServer stub([](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const auto prompt = body.at("messages").back().at("content").get<std::string>();
      // Planning prompts ask for a final ACTION line; detection prompts for OBJECTS.
      if (prompt.find("ACTION:") != std::string::npos) {
        res.set_content(chat_body("SUGGESTION: explore another room\nACTION: turn_left"), "application/json");
      } else {
        res.set_content(chat_body("OBJECTS: none"), "application/json");
      }
    });
    const Scene scene = generate_scene(3, 16, 16, 3);
    const auto ep = sample_episodes(scene, scene.categories_present(), 1, 3).front();
    const auto t = scripted_demo(scene, ep, 3);
    ChatBackend backend{std::make_shared<ChatClient>(fast_config(stub.base_url())), 0.0};
    const auto records = annotate_trajectory(t, backend, CooccurrencePriors::defaults(), {});
    REQUIRE(records.size() == t.steps.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(records[i].step_index == static_cast<int>(i));
      CHECK(records[i].suggestion.action == Action::turn_left);
      CHECK(records[i].suggestion.kind == SuggestionKind::explore);
      CHECK(records[i].label_action == t.steps[i].action);
      CHECK_NOTHROW(records[i].validate());
    }
  }

  TEST_CASE("unparseable chat replies surface as annotation errors with the raw text") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
      res.set_content(chat_body("I am not sure."), "application/json");
    });
    const Scene scene = generate_scene(3, 16, 16, 3);
    const auto ep = sample_episodes(scene, scene.categories_present(), 1, 3).front();
    const auto t = scripted_demo(scene, ep, 3);
    ChatBackend backend{std::make_shared<ChatClient>(fast_config(stub.base_url())), 0.0};
    try {
      annotate_trajectory(t, backend, CooccurrencePriors::defaults(), {});
      FAIL("expected an annotation error");
    } catch (const AnnotationError& e) {
      CHECK(e.raw_response() == "I am not sure.");
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }
}
