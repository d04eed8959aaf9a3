#include <doctest.h>

#include <httplib.h>

#include <random>
#include <thread>

#include "corpusforge/eval_service.hpp"
#include "eval_fixtures.hpp"
#include "test_support.hpp"

using namespace corpusforge::eval;
using json = nlohmann::json;

namespace {

// Store plus a service on a free loopback port for the lifetime of a test.
struct RunningService {
  explicit RunningService(std::vector<EvalItem> items, std::filesystem::path dir = {})
      : store(std::move(items), 42, std::move(dir)), service(store) {
    port = service.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { service.serve(); });
    service.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~RunningService() {
    service.stop();
    thread.join();
  }

  httplib::Result post_score(const json& body) {
    return client->Post("/api/score", body.dump(), "application/json");
  }

  EvalStore store;
  EvalService service;
  int port = -1;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

}  // namespace

TEST_CASE("an evaluator completes a session over HTTP") {
  std::mt19937_64 rng(1);
  RunningService svc(random_items(rng, 20));
  std::size_t submitted = 0;
  for (int guard = 0; guard < 100; ++guard) {
    auto res = svc.client->Get("/api/session/alice/next");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    for (const auto& id : fixture_systems()) CHECK(res->body.find(id) == std::string::npos);
    const auto next = json::parse(res->body);
    if (next["done"].get<bool>()) {
      CHECK(next["progress"]["scored"] == 20);
      break;
    }
    for (const auto& pos : next["unscored_positions"]) {
      auto ack = svc.post_score({{"session_id", next["session_id"]},
                                 {"item_id", next["item_id"]},
                                 {"position", pos},
                                 {"value", int(pos.get<std::size_t>() % 5)}});
      REQUIRE(ack);
      CHECK(ack->status == 200);
      ++submitted;
    }
  }
  CHECK(svc.store.snapshot().scores.size() == submitted);

  auto report = svc.client->Get("/api/report?granularity=sentence");
  REQUIRE(report);
  CHECK(report->status == 200);
  const auto body = json::parse(report->body);
  std::size_t n = 0;
  for (const auto& c : body["cells"]) {
    CHECK(c["granularity"] == "sentence");
    n += c["n"].get<std::size_t>();
  }
  auto story = json::parse(svc.client->Get("/api/report?granularity=story")->body);
  for (const auto& c : story["cells"]) n += c["n"].get<std::size_t>();
  CHECK(n == submitted);
}

TEST_CASE("score endpoint status codes") {
  std::mt19937_64 rng(2);
  RunningService svc(random_items(rng, 3));
  const auto next = json::parse(svc.client->Get("/api/session/bob/next")->body);
  const json base = {{"session_id", next["session_id"]}, {"item_id", next["item_id"]}, {"position", 0}, {"value", 2}};

  auto bad = base;
  bad["value"] = 5;
  auto res = svc.post_score(bad);
  CHECK(res->status == 422);
  CHECK(json::parse(res->body)["error"] == "invalid Likert value");
  bad["value"] = 2.5;
  CHECK(svc.post_score(bad)->status == 422);
  bad["value"] = "3";
  CHECK(svc.post_score(bad)->status == 422);

  auto wrong = base;
  wrong["position"] = 9;
  CHECK(svc.post_score(wrong)->status == 422);
  wrong = base;
  wrong["session_id"] = "s-none";
  CHECK(svc.post_score(wrong)->status == 404);
  CHECK(svc.client->Post("/api/score", "{not json", "application/json")->status == 400);
  CHECK(svc.post_score({{"session_id", base["session_id"]}})->status == 400);
  CHECK(svc.post_score(base)->status == 200);
  CHECK(svc.client->Get("/api/report?granularity=weekly")->status == 400);
}

TEST_CASE("export and import over HTTP") {
  std::mt19937_64 rng(3);
  const auto items = random_items(rng, 4);
  std::string archive;
  {
    RunningService svc(items);
    const auto next = json::parse(svc.client->Get("/api/session/carol/next")->body);
    svc.post_score({{"session_id", next["session_id"]}, {"item_id", next["item_id"]}, {"position", 1}, {"value", 4}});
    archive = svc.client->Get("/api/export")->body;
  }
  std::mt19937_64 other(99);
  RunningService fresh(random_items(other, 2));
  auto res = fresh.client->Post("/api/import", archive, "application/x-ndjson");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(fresh.client->Get("/api/export")->body == archive);
  CHECK(fresh.client->Post("/api/import", "garbage", "text/plain")->status == 400);
  CHECK(fresh.client->Get("/api/export")->body == archive);
}

TEST_CASE("state persists in the data directory") {
  TempDir dir;
  std::mt19937_64 rng(4);
  const auto items = random_items(rng, 3);
  std::string archive;
  {
    EvalStore store(items, 5, dir.path());
    const auto next = store.next("dave");
    store.submit(next["session_id"], next["item_id"], 0, 3);
    store.submit(next["session_id"], next["item_id"], 0, 1);
    archive = store.export_archive();
  }
  const auto reopened = EvalStore::open(dir.path(), 5);
  CHECK(reopened->export_archive() == archive);
  CHECK(read_file(dir / "audit.jsonl").find("\"value\":3") != std::string::npos);
}

TEST_CASE("concurrent submissions are all recorded") {
  std::mt19937_64 rng(5);
  const auto items = random_items(rng, 10);
  EvalStore store(items, 1);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      const std::string who = "rater" + std::to_string(t);
      const auto first = store.next(who);
      for (const auto& it : items) {
        for (std::size_t p = 0; p < it.outputs.size(); ++p) store.submit(first["session_id"], it.item_id, p, t);
      }
    });
  }
  for (auto& th : threads) th.join();
  std::size_t outputs = 0;
  for (const auto& it : items) outputs += it.outputs.size();
  CHECK(store.snapshot().scores.size() == 4 * outputs);
}

TEST_CASE("bind address parsing") {
  CHECK(parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS(parse_bind_address("localhost"));
  CHECK_THROWS(parse_bind_address(":80"));
  CHECK_THROWS(parse_bind_address("host:99999"));
}
