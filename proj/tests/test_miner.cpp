#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "corpusforge/miner.hpp"

using namespace corpusforge;

namespace {

std::vector<Sentence> doc(std::initializer_list<const char*> texts, const char* lang) {
  std::vector<Sentence> out;
  std::size_t i = 0;
  for (const char* t : texts) out.push_back(make_sentence(t, lang, "d", i++));
  return out;
}

ScoredPair scored(std::size_t i, std::size_t j, double score, double threshold = 0.5) {
  ScoredPair s;
  s.pair.src = make_sentence("s" + std::to_string(i), "am");
  s.pair.tgt = make_sentence("t" + std::to_string(j), "en");
  s.pair.pos_src = i;
  s.pair.pos_tgt = j;
  s.score = score;
  s.accepted = score >= threshold;
  return s;
}

}  // namespace

TEST_CASE("dual score closed forms") {
  CHECK(dual_score(0.0, 0.0, 0.5) == 1.0);
  CHECK(std::abs(dual_score(1.0, 1.0, 0.5) - 0.367879) < 1e-6);
  CHECK(std::abs(dual_score(2.0, 0.0, 0.5) - 0.049787) < 1e-6);
  CHECK(std::abs(dual_score(1.0, 1.0, 0.5) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(dual_score(2.0, 0.0, 0.5) - std::exp(-3.0)) < 1e-15);
}

TEST_CASE("dual score range and symmetry") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> h(0.0, 21.0), w(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = h(rng), b = h(rng), weight = w(rng);
    const double s = dual_score(a, b, weight);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    CHECK(dual_score(a, b, 0.5) == doctest::Approx(dual_score(b, a, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("dual score decreases where the disagreement term does not oppose it") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> h(0.0, 10.0), w(0.01, 0.99), step(1e-3, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double weight = w(rng), d = step(rng);
    const double a = h(rng), b = h(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    // Raising the larger entropy, or both together, always lowers the score.
    CHECK(dual_score(hi + d, lo, weight) < dual_score(hi, lo, weight));
    CHECK(dual_score(lo, hi + d, weight) < dual_score(lo, hi, weight));
    CHECK(dual_score(a + d, b + d, weight) < dual_score(a, b, weight));
  }
  // Raising the smaller entropy towards the other one can raise the score:
  // with w = 0.5, (0, 2) scores e^-3 while (1, 2) scores e^-2.5.
  CHECK(dual_score(1.0, 2.0, 0.5) > dual_score(0.0, 2.0, 0.5));
}

TEST_CASE("candidate generation respects window and length ratio") {
  FilterConfig cfg;
  cfg.window = 1;
  const auto src = doc({"aaaa", "bbbb", "cccc", "dddddddddddddddddddddddddddddd"}, "am");
  const auto tgt = doc({"AAAA", "BBBB", "CCCC", "dddddddddd"}, "en");
  const auto c = generate_candidates(src, tgt, cfg);
  std::set<std::pair<std::size_t, std::size_t>> got;
  for (const auto& p : c) got.insert({p.pos_src, p.pos_tgt});
  CHECK(got.contains({0, 0}));
  CHECK(got.contains({0, 1}));
  CHECK_FALSE(got.contains({0, 2}));
  // 30 chars against 10 is a ratio of 3.0.
  CHECK_FALSE(got.contains({3, 3}));
  for (const auto& p : c) CHECK(p.len_ratio > 0.0);
}

TEST_CASE("greedy selection is one-to-one and ordered by score") {
  std::vector<ScoredPair> s = {scored(0, 0, 0.9), scored(0, 1, 0.8), scored(1, 1, 0.7), scored(1, 0, 0.95),
                               scored(2, 2, 0.3)};
  const auto out = select_pairs(s);
  REQUIRE(out.size() == 2);
  CHECK(out[0].pair.src.text == "s1");
  CHECK(out[0].pair.tgt.text == "t0");
  CHECK(out[1].pair.src.text == "s0");
  CHECK(out[1].pair.tgt.text == "t1");
  for (const auto& m : out) {
    CHECK(m.pair.origin == PairOrigin::mined);
    CHECK(m.score >= 0.5);
  }
}

TEST_CASE("the better of two partners wins") {
  const auto out = select_pairs({scored(0, 0, 0.8), scored(0, 1, 0.9)});
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == 0.9);
}

TEST_CASE("selection does not depend on candidate order") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::vector<ScoredPair> s;
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) s.push_back(scored(i, j, std::round(score(rng) * 8) / 8));
  }
  const auto reference = select_pairs(s);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(s.begin(), s.end(), rng);
    const auto again = select_pairs(s);
    REQUIRE(again.size() == reference.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
      CHECK(again[i].pair.src.text == reference[i].pair.src.text);
      CHECK(again[i].pair.tgt.text == reference[i].pair.tgt.text);
    }
  }
}

TEST_CASE("diagonal pairs separated from off-diagonal ones") {
  LexTable fwd("am", "en"), rev("en", "am");
  const std::vector<std::pair<const char*, const char*>> lex = {{"a1", "e1"}, {"a2", "e2"}, {"a3", "e3"}};
  for (const auto& [a, e] : lex) {
    fwd.set(a, e, 1.0);
    rev.set(e, a, 1.0);
  }
  const std::vector<DocPair> docs = {{doc({"a1", "a2", "a3"}, "am"), doc({"e1", "e2", "e3"}, "en")}};
  FilterConfig cfg;
  cfg.ratio_lo = 0.1;
  cfg.ratio_hi = 10.0;
  const auto mined = mine_corpus(docs, fwd, rev, cfg, 2);
  REQUIRE(mined.size() == 3);
  for (const auto& m : mined) {
    CHECK(m.score == 1.0);
    CHECK(m.pair.src.text.substr(1) == m.pair.tgt.text.substr(1));
  }
}

TEST_CASE("filter config validation") {
  FilterConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.weight = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.ratio_lo = 3.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("mined corpus round trips") {
  std::vector<MinedPair> pairs = {{make_pair("ሰላም", "am", "hello", "en", PairOrigin::mined), 0.123456}};
  std::stringstream buf;
  write_mined(buf, pairs);
  CHECK(buf.str() == "0.123456\tam\ten\tሰላም\thello\n");
  const auto back = read_mined(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].pair == pairs[0].pair);
  CHECK(back[0].score == 0.123456);
}
