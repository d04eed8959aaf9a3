#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "corpusforge/evalkit.hpp"
#include "eval_fixtures.hpp"

using namespace corpusforge::eval;

namespace {

EvalItem item(const std::string& id, Granularity g = Granularity::sentence) {
  return {id, {"am", "en"}, g, "news", "ሰላም", {{"alpha-mt", "hello"}, {"beta-mt", "peace"}}};
}

ScoreRecord score(const BlindSession& s, const std::string& item_id, std::size_t position, int value) {
  return {s.session_id(), s.evaluator_id(), item_id, position, value, "2024-01-01T00:00:00Z"};
}

}  // namespace

TEST_CASE("five Likert levels from 0 to 4") {
  const auto levels = likert_levels();
  REQUIRE(levels.size() == 5);
  for (int v = 0; v < 5; ++v) CHECK(levels[v].value == v);
  CHECK(kMinLikert == 0);
  CHECK(kMaxLikert == 4);
}

TEST_CASE("shuffle permutations are valid and keyed by seed and item") {
  for (std::size_t k = 1; k <= 6; ++k) {
    auto p = shuffle_permutation(9, "x", k);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> id(k);
    std::iota(id.begin(), id.end(), 0);
    CHECK(p == id);
  }
  CHECK(shuffle_permutation(9, "x", 4) == shuffle_permutation(9, "x", 4));
  std::set<std::vector<std::size_t>> seen;
  for (int s = 0; s < 200; ++s) seen.insert(shuffle_permutation(s, "x", 4));
  CHECK(seen.size() == 24);
}

TEST_CASE("session creation validates items") {
  CHECK_THROWS_AS(create_session({}, "e", 1), ValidationError);
  auto bad = item("a");
  bad.outputs.pop_back();
  CHECK_THROWS_WITH_AS(create_session({&bad, 1}, "e", 1), "item 'a' has fewer than 2 outputs", ValidationError);
  auto dup = item("a");
  dup.outputs[1].system_id = dup.outputs[0].system_id;
  CHECK_THROWS_AS(create_session({&dup, 1}, "e", 1), ValidationError);
  const std::vector<EvalItem> twice = {item("a"), item("a")};
  CHECK_THROWS_AS(create_session(twice, "e", 1), ValidationError);
}

TEST_CASE("client payloads contain no system identifiers") {
  std::mt19937_64 rng(1);
  const auto items = random_items(rng, 50);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto session = create_session(items, "rater", seed);
    const std::string payload = blind_payload(session).dump();
    for (const auto& id : fixture_systems()) CHECK(payload.find(id) == std::string::npos);
    CHECK(payload.find("system") == std::string::npos);
    CHECK(payload.find("permutation") == std::string::npos);
  }
}

TEST_CASE("blind outputs are the item outputs under the permutation") {
  std::mt19937_64 rng(2);
  const auto items = random_items(rng, 20);
  const auto session = create_session(items, "r", 77);
  for (const auto& it : items) {
    const auto* b = session.find_item(it.item_id);
    REQUIRE(b);
    const auto& perm = session.permutation(it.item_id);
    for (std::size_t p = 0; p < perm.size(); ++p) {
      CHECK(b->outputs[p].position == p);
      CHECK(b->outputs[p].text == it.outputs[perm[p]].text);
    }
  }
}

TEST_CASE("score validation") {
  const std::vector<EvalItem> items = {item("a")};
  const auto s = create_session(items, "rater", 1);
  CHECK_NOTHROW(validate_score(s, score(s, "a", 1, 4)));
  CHECK_THROWS_WITH(validate_score(s, score(s, "a", 0, 5)), "invalid Likert value");
  CHECK_THROWS_WITH(validate_score(s, score(s, "a", 0, -1)), "invalid Likert value");
  CHECK_THROWS_AS(validate_score(s, score(s, "a", 2, 3)), ValidationError);
  CHECK_THROWS_AS(validate_score(s, score(s, "zz", 0, 3)), ValidationError);
  auto other = score(s, "a", 0, 3);
  other.evaluator_id = "someone-else";
  CHECK_THROWS_AS(validate_score(s, other), ValidationError);
}

TEST_CASE("score store keeps the last write and audits every write") {
  const std::vector<EvalItem> items = {item("a")};
  const auto s = create_session(items, "rater", 1);
  ScoreStore store;
  store.record(s, score(s, "a", 0, 1));
  store.record(s, score(s, "a", 0, 3));
  CHECK(store.value("rater", "a", 0) == 3);
  CHECK(store.size() == 1);
  CHECK(store.audit_log().size() == 2);
  CHECK_THROWS(store.record(s, score(s, "a", 0, 9)));
  CHECK(store.audit_log().size() == 2);
}

TEST_CASE("unblinding recovers the system for random records") {
  std::mt19937_64 rng(3);
  const auto items = random_items(rng, 40);
  const auto session = create_session(items, "r", 5);
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  for (int n = 0; n < 1000; ++n) {
    const auto& it = items[pick(rng)];
    std::uniform_int_distribution<std::size_t> sys(0, it.outputs.size() - 1);
    const std::size_t original = sys(rng);
    const auto& perm = session.permutation(it.item_id);
    const std::size_t position = std::find(perm.begin(), perm.end(), original) - perm.begin();
    const auto rec = score(session, it.item_id, position, 2);
    CHECK(unblind(rec, session, items) == it.outputs[original].system_id);
  }
}

TEST_CASE("aggregation matches direct computation") {
  const std::vector<EvalItem> items = {item("a"), item("b")};
  const auto s1 = create_session(items, "r1", 1);
  const auto s2 = create_session(items, "r2", 2);
  // alpha-mt receives 3, 4, 2, 4.
  std::vector<ScoreRecord> scores;
  const auto add = [&](const BlindSession& s, const std::string& id, const std::string& system, int v) {
    const auto& perm = s.permutation(id);
    const std::size_t original = system == "alpha-mt" ? 0 : 1;
    scores.push_back(score(s, id, std::find(perm.begin(), perm.end(), original) - perm.begin(), v));
  };
  add(s1, "a", "alpha-mt", 3);
  add(s1, "b", "alpha-mt", 4);
  add(s2, "a", "alpha-mt", 2);
  add(s2, "b", "alpha-mt", 4);
  add(s1, "a", "beta-mt", 1);
  const std::vector<BlindSession> sessions = {s1, s2};
  const auto report = unblind_and_aggregate(scores, sessions, items);
  REQUIRE(report.cells.size() == 2);
  const auto& top = report.cells[0];
  CHECK(top.system_id == "alpha-mt");
  CHECK(top.n == 4);
  CHECK(std::abs(top.mean - 3.25) < 1e-9);
  CHECK(std::abs(top.std - std::sqrt(2.75 / 4.0)) < 1e-9);
  CHECK(format_cell(top.mean, top.std) == "3.25 ± 0.83");
  CHECK(report.cells[1].std == 0.0);
}

TEST_CASE("aggregation ignores the shuffle seed") {
  std::mt19937_64 rng(4);
  const auto items = random_items(rng, 30);
  std::uniform_int_distribution<int> value(0, 4);
  std::map<std::pair<std::string, std::string>, int> truth;
  for (const auto& it : items) {
    for (const auto& o : it.outputs) truth[{it.item_id, o.system_id}] = value(rng);
  }
  std::vector<std::vector<ReportCell>> reports;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = create_session(items, "r", seed);
    std::vector<ScoreRecord> scores;
    for (const auto& it : items) {
      const auto& perm = s.permutation(it.item_id);
      for (std::size_t p = 0; p < perm.size(); ++p) {
        scores.push_back(score(s, it.item_id, p, truth[{it.item_id, it.outputs[perm[p]].system_id}]));
      }
    }
    const std::vector<BlindSession> sessions = {s};
    reports.push_back(unblind_and_aggregate(scores, sessions, items).cells);
  }
  for (std::size_t r = 1; r < reports.size(); ++r) {
    REQUIRE(reports[r].size() == reports[0].size());
    for (std::size_t c = 0; c < reports[0].size(); ++c) {
      CHECK(reports[r][c].system_id == reports[0][c].system_id);
      CHECK(reports[r][c].mean == reports[0][c].mean);
      CHECK(reports[r][c].std == reports[0][c].std);
      CHECK(reports[r][c].mean >= 0.0);
      CHECK(reports[r][c].mean <= 4.0);
      CHECK(reports[r][c].std <= 2.0);
    }
  }
}

TEST_CASE("scores without a session are counted, not aggregated") {
  const std::vector<EvalItem> items = {item("a")};
  const auto s = create_session(items, "r", 1);
  auto orphan = score(s, "a", 0, 3);
  orphan.session_id = "s-missing";
  const std::vector<ScoreRecord> scores = {orphan};
  const std::vector<BlindSession> sessions = {s};
  const auto report = unblind_and_aggregate(scores, sessions, items);
  CHECK(report.cells.empty());
  CHECK(report.missing_session == 1);
}

TEST_CASE("report rendering") {
  Report r;
  r.cells.push_back({{"am", "en"}, "alpha-mt", Granularity::sentence, 2.68, 0.41, 10});
  r.cells.push_back({{"am", "en"}, "beta-mt", Granularity::sentence, 2.1, 0.5, 10});
  r.cells.push_back({{"am", "en"}, "alpha-mt", Granularity::story, 3.25, 0.8292, 4});
  const auto both = render_report(r, std::nullopt, false);
  CHECK(both.find("2.68 ± 0.41") != std::string::npos);
  CHECK(both.find("3.25 ± 0.83") != std::string::npos);
  CHECK(both.find("population") != std::string::npos);
  CHECK(both.find("alpha-mt") < both.find("beta-mt"));
  const auto story = render_report(r, Granularity::story, false);
  CHECK(story.find("beta-mt") == std::string::npos);
  const auto normalized = render_report(r, Granularity::story, true);
  CHECK(normalized.find("0.81 ± 0.21") != std::string::npos);
}

TEST_CASE("export and import round trip") {
  std::mt19937_64 rng(6);
  Dataset d;
  d.items = random_items(rng, 20);
  for (const char* e : {"r1", "r2"}) {
    const auto s = create_session(d.items, e, 11);
    for (const auto& b : s.items()) {
      for (const auto& o : b.outputs) d.scores.push_back(score(s, b.item_id, o.position, int(o.position % 5)));
    }
    d.sessions.push_back(s);
  }
  const auto archive = export_dataset(d);
  const auto back = import_dataset(archive);
  CHECK(back == d);
  CHECK(export_dataset(back) == archive);

  const auto empty = export_dataset({});
  CHECK(import_dataset(empty) == Dataset{});
}

TEST_CASE("import rejects other versions and truncated archives") {
  std::mt19937_64 rng(7);
  Dataset d;
  d.items = random_items(rng, 3);
  d.sessions.push_back(create_session(d.items, "r", 1));
  auto archive = export_dataset(d);

  auto v99 = archive;
  v99.replace(v99.find("\"version\":1"), 11, "\"version\":99");
  CHECK_THROWS_WITH(import_dataset(v99), doctest::Contains("unsupported version"));

  const auto cut = archive.substr(0, archive.rfind("{\"record\""));
  CHECK_THROWS_WITH(import_dataset(cut), doctest::Contains("missing section 'sessions'"));
  CHECK_THROWS(import_dataset(""));
}
