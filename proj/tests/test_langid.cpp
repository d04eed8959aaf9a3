#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "corpusforge/langid.hpp"
#include "test_support.hpp"

using namespace corpusforge;

namespace {

const std::filesystem::path kData = CORPUSFORGE_DATA_DIR;

std::vector<LangProfile> bundled_profiles() {
  return {load_profile(kData / "profiles/am.jsonl"), load_profile(kData / "profiles/ti.jsonl"),
          load_profile(kData / "profiles/en.jsonl")};
}

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_CASE("script census") {
  CHECK(classify_script("ሰላም ዓለም") == Script::ethiopic);
  CHECK(classify_script("hello world") == Script::latin);
  CHECK(classify_script("ሰላም hello world") == Script::latin);
  CHECK(classify_script("ሰላም hello мир мир") == Script::mixed);
  CHECK(classify_script("12345 !!") == Script::other);
}

TEST_CASE("detect_language preconditions") {
  const auto profiles = bundled_profiles();
  CHECK_THROWS_WITH(detect_language("", profiles), "empty input");
  CHECK_THROWS_WITH(detect_language("   \n", profiles), "empty input");
  CHECK_THROWS(detect_language("hello", std::span<const LangProfile>{}));
}

TEST_CASE("bundled profiles classify held-out text") {
  const auto profiles = bundled_profiles();
  const auto en = detect_language("the quick brown fox jumps", profiles);
  CHECK(en.lang == "en");
  CHECK(en.script == Script::latin);
  for (const char* lang : {"am", "ti", "en"}) {
    for (const auto& line : lines(kData / "heldout" / (std::string(lang) + ".txt"))) {
      const auto p = detect_language(line, profiles);
      CHECK_MESSAGE(p.lang == lang, line);
      CHECK(p.confidence > 0.5);
      CHECK(p.confidence <= 1.0);
    }
  }
}

TEST_CASE("Ethiopic input is never classified as English") {
  const auto profiles = bundled_profiles();
  for (const char* text : {"ሀ", "ሰላም", "the ሰላም ዓለም ነው", "ABC ሀለሐመ ሠረሰ"}) {
    CHECK(detect_language(text, profiles).lang != "en");
  }
}

TEST_CASE("confidence is a softmax over the candidates") {
  const auto am = train_profile("am", "ሰላም ነው ሰላም ናት");
  const auto ti = train_profile("ti", "ሰላም እዩ ሰላም እያ");
  const std::vector<LangProfile> profiles = {am, ti};
  const std::string text = "ሰላም ነው";
  const double la = profile_loglik(am, text), lt = profile_loglik(ti, text);
  const double expected = 1.0 / (1.0 + std::exp(lt - la));
  const auto p = detect_language(text, profiles);
  CHECK(p.lang == "am");
  CHECK(p.confidence == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("no candidate for the script yields unknown") {
  const std::vector<LangProfile> profiles = {train_profile("en", "hello there")};
  const auto p = detect_language("ሰላም", profiles);
  CHECK(p.lang == "unknown");
}

TEST_CASE("add-one smoothing leaves mass for unseen grams") {
  const auto p = train_profile("en", "abc abd");
  for (const auto& order : p.orders) {
    double mass = 0.0;
    for (const auto& [gram, lp] : order.logprobs) mass += std::exp(lp);
    CHECK(mass < 1.0);
    CHECK(mass + std::exp(order.unseen_logprob()) <= 1.0 + 1e-12);
  }
}

TEST_CASE("profiles round trip") {
  const auto p = train_profile("ti", "ሰላም እዩ ኣብ ኣስመራ");
  std::stringstream buf;
  write_profile(buf, p);
  const auto back = read_profile(buf);
  CHECK(back.lang == "ti");
  for (std::size_t n = 0; n < LangProfile::kMaxOrder; ++n) {
    CHECK(back.orders[n].total == p.orders[n].total);
    CHECK(back.orders[n].vocab_size == p.orders[n].vocab_size);
    CHECK(back.orders[n].logprobs == p.orders[n].logprobs);
  }
}
