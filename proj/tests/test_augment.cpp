#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "corpusforge/augment.hpp"

using namespace corpusforge;

namespace {

std::vector<Sentence> mono(std::initializer_list<const char*> texts, const char* lang = "en") {
  std::vector<Sentence> out;
  std::size_t i = 0;
  for (const char* t : texts) out.push_back(make_sentence(t, lang, "m", i++));
  return out;
}

std::vector<SentencePair> numbered(std::size_t n, PairOrigin origin, const std::string& tag) {
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_pair(tag + "s" + std::to_string(i), "am", tag + "t" + std::to_string(i), "en", origin));
  }
  return out;
}

LexTable bijection(std::size_t n) {
  LexTable t("en", "am");
  for (std::size_t i = 0; i < n; ++i) t.set("e" + std::to_string(i), "a" + std::to_string(i), 1.0);
  return t;
}

}  // namespace

TEST_CASE("back-translation keeps the target verbatim and marks pairs synthetic") {
  const auto table = bijection(3);
  const NaiveTranslator tr(table);
  const auto ys = mono({"e0 e1", "e2"});
  const auto bt = back_translate(ys, tr, "am", 2);
  REQUIRE(bt.pairs.size() == 2);
  CHECK(bt.failures == 0);
  CHECK(bt.pairs[0].src.text == "a0 a1");
  CHECK(bt.pairs[0].src.lang == "am");
  CHECK(bt.pairs[0].tgt == ys[0]);
  CHECK(bt.pairs[1].origin == PairOrigin::synthetic);
}

TEST_CASE("naive translator refuses the wrong direction") {
  const auto table = bijection(1);
  const NaiveTranslator tr(table);
  CHECK_THROWS_AS(tr.translate("e0", "am", "en"), TranslationError);
  const auto bt = back_translate(mono({"e0"}, "ti"), tr, "am");
  CHECK(bt.pairs.empty());
  CHECK(bt.failures == 1);
}

TEST_CASE("external translator command") {
  const CommandTranslator echo("cat");
  const auto ys = mono({"one", "two"});
  const auto bt = back_translate(ys, echo, "am");
  REQUIRE(bt.pairs.size() == 2);
  CHECK(bt.pairs[1].src.text == "two");

  const CommandTranslator blank("sed 's/^two$//'");
  const auto partial = back_translate(ys, blank, "am");
  CHECK(partial.pairs.size() == 1);
  CHECK(partial.failures == 1);

  const CommandTranslator broken("false");
  CHECK(back_translate(ys, broken, "am").failures == 2);

  const CommandTranslator langs("sed \"s/^/$CORPUSFORGE_SRC_LANG-$CORPUSFORGE_TGT_LANG /\"");
  CHECK(langs.translate("x", "en", "am") == "en-am x");
}

TEST_CASE("merge caps synthetic data exactly") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> size(0, 60);
  std::uniform_real_distribution<double> ratio(0.05, 3.0);
  for (int k = 0; k < 200; ++k) {
    const auto real = numbered(size(rng), PairOrigin::mined, "r");
    const auto synth = numbered(size(rng), PairOrigin::synthetic, "y");
    const double cap = ratio(rng);
    const auto merged = merge_corpora(real, synth, cap);
    const auto bound = static_cast<std::size_t>(std::floor(cap * static_cast<double>(real.size())));
    CHECK(merged.counts.at(PairOrigin::synthetic) == std::min(bound, synth.size()));
    CHECK(merged.counts.at(PairOrigin::mined) == real.size());
  }
}

TEST_CASE("merge drops duplicates without spending the cap") {
  const auto real = numbered(4, PairOrigin::mined, "r");
  auto synth = numbered(3, PairOrigin::synthetic, "y");
  synth.insert(synth.begin(), real[0]);
  const auto merged = merge_corpora(real, synth, 0.5);
  CHECK(merged.pairs.size() == 6);
  CHECK(merged.counts.at(PairOrigin::synthetic) == 2);
  CHECK(merged.pairs[4].src.text == "ys0");
  CHECK_THROWS_AS(merge_corpora(real, synth, 0.0), std::invalid_argument);
}

TEST_CASE("augmented corpus round trips") {
  auto pairs = numbered(2, PairOrigin::mined, "r");
  pairs.push_back(make_pair("x", "am", "y", "en", PairOrigin::synthetic));
  const std::vector<std::optional<double>> scores = {0.5, 0.25, std::nullopt};
  std::stringstream buf;
  write_augmented(buf, pairs, scores);
  const auto rows = read_augmented(buf);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].score == 0.5);
  CHECK_FALSE(rows[2].score.has_value());
  CHECK(rows[2].pair == pairs[2]);
}
