#include "corpusforge/langid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "corpusforge/text_util.hpp"
#include "corpusforge/textprep.hpp"

namespace corpusforge {

std::string_view to_string(Script script) {
  switch (script) {
    case Script::ethiopic: return "ethiopic";
    case Script::latin: return "latin";
    case Script::mixed: return "mixed";
    case Script::other: return "other";
  }
  return "other";
}

double LangProfile::Order::unseen_logprob() const {
  return -std::log(static_cast<double>(total + vocab_size));
}

double LangProfile::Order::logprob(const std::string& gram) const {
  const auto it = logprobs.find(gram);
  return it == logprobs.end() ? unseen_logprob() : it->second;
}

namespace {

bool is_latin_letter(char32_t cp) {
  return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
         (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) ||
         (cp >= 0x1E00 && cp <= 0x1EFF);
}

// Lowercased letters with every non-letter run mapped to one space, padded
// with a space on both ends so word boundaries show up in the grams.
std::u32string features(std::string_view text) {
  std::u32string out = U" ";
  for (char32_t cp : decode_utf8(normalize(text))) {
    if (is_letter(cp)) {
      out.push_back(to_lower(cp));
    } else if (out.back() != U' ') {
      out.push_back(U' ');
    }
  }
  if (out.back() != U' ') out.push_back(U' ');
  return out;
}

template <typename Fn>
void for_each_gram(const std::u32string& feats, Fn&& fn) {
  for (std::size_t n = 1; n <= LangProfile::kMaxOrder; ++n) {
    for (std::size_t i = 0; i + n <= feats.size(); ++i) {
      const std::u32string_view gram(feats.data() + i, n);
      if (n == 1 && gram[0] == U' ') continue;
      fn(n, gram);
    }
  }
}

}  // namespace

Script classify_script(std::string_view text) {
  std::size_t letters = 0, ethiopic = 0, latin = 0;
  for (char32_t cp : decode_utf8(text)) {
    if (!is_letter(cp)) continue;
    ++letters;
    if (is_ethiopic(cp)) ++ethiopic;
    else if (is_latin_letter(cp)) ++latin;
  }
  if (letters == 0) return Script::other;
  if (2 * ethiopic >= letters) return Script::ethiopic;
  if (2 * latin >= letters) return Script::latin;
  if (ethiopic > 0 || latin > 0) return Script::mixed;
  return Script::other;
}

LangProfile train_profile(std::string lang, std::string_view training_text) {
  std::array<std::map<std::string, std::uint64_t>, LangProfile::kMaxOrder> counts;
  for_each_gram(features(training_text), [&](std::size_t n, std::u32string_view gram) {
    ++counts[n - 1][encode_utf8(gram)];
  });
  LangProfile profile;
  profile.lang = std::move(lang);
  for (std::size_t k = 0; k < LangProfile::kMaxOrder; ++k) {
    auto& order = profile.orders[k];
    for (const auto& [gram, c] : counts[k]) order.total += c;
    order.vocab_size = counts[k].size() + 1;
    const double denom = static_cast<double>(order.total + order.vocab_size);
    for (const auto& [gram, c] : counts[k]) {
      order.logprobs.emplace(gram, std::log(static_cast<double>(c + 1) / denom));
    }
  }
  return profile;
}

double profile_loglik(const LangProfile& profile, std::string_view text) {
  double ll = 0.0;
  std::string key;
  for_each_gram(features(text), [&](std::size_t n, std::u32string_view gram) {
    key = encode_utf8(gram);
    ll += profile.orders[n - 1].logprob(key);
  });
  return ll;
}

LangPrediction detect_language(std::string_view text, std::span<const LangProfile> profiles) {
  if (trim(text).empty()) throw std::invalid_argument("empty input");
  if (profiles.empty()) throw std::invalid_argument("no language profiles");

  LangPrediction pred;
  pred.script = classify_script(text);
  std::vector<const LangProfile*> candidates;
  for (const auto& p : profiles) {
    const bool allowed = pred.script == Script::ethiopic ? (p.lang == "am" || p.lang == "ti")
                         : pred.script == Script::latin  ? p.lang == "en"
                                                         : true;
    if (allowed) candidates.push_back(&p);
  }
  if (candidates.empty()) {
    pred.lang = "unknown";
    pred.confidence = 1.0;
    return pred;
  }

  std::vector<double> ll;
  ll.reserve(candidates.size());
  for (const auto* p : candidates) ll.push_back(profile_loglik(*p, text));
  const auto best = std::max_element(ll.begin(), ll.end());
  double z = 0.0;
  for (double v : ll) z += std::exp(v - *best);
  pred.lang = candidates[static_cast<std::size_t>(best - ll.begin())]->lang;
  pred.confidence = 1.0 / z;
  return pred;
}

void write_profile(std::ostream& out, const LangProfile& profile) {
  nlohmann::json header;
  header["lang"] = profile.lang;
  header["orders"] = nlohmann::json::array();
  for (std::size_t k = 0; k < LangProfile::kMaxOrder; ++k) {
    header["orders"].push_back({{"n", k + 1},
                                {"total", profile.orders[k].total},
                                {"vocab_size", profile.orders[k].vocab_size}});
  }
  out << header.dump() << '\n';
  for (std::size_t k = 0; k < LangProfile::kMaxOrder; ++k) {
    std::map<std::string, double> sorted(profile.orders[k].logprobs.begin(),
                                         profile.orders[k].logprobs.end());
    for (const auto& [gram, lp] : sorted) {
      out << nlohmann::json{{"n", k + 1}, {"gram", gram}, {"logprob", lp}}.dump() << '\n';
    }
  }
}

LangProfile read_profile(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("language profile: missing header");
  const auto header = nlohmann::json::parse(line);
  LangProfile profile;
  profile.lang = header.at("lang").get<std::string>();
  for (const auto& o : header.at("orders")) {
    const auto n = o.at("n").get<std::size_t>();
    if (n < 1 || n > LangProfile::kMaxOrder) throw std::runtime_error("language profile: bad order");
    profile.orders[n - 1].total = o.at("total").get<std::uint64_t>();
    profile.orders[n - 1].vocab_size = o.at("vocab_size").get<std::uint64_t>();
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const auto n = rec.at("n").get<std::size_t>();
    if (n < 1 || n > LangProfile::kMaxOrder) throw std::runtime_error("language profile: bad order");
    profile.orders[n - 1].logprobs.emplace(rec.at("gram").get<std::string>(),
                                           rec.at("logprob").get<double>());
  }
  return profile;
}

LangProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open language profile " + path.string());
  return read_profile(in);
}

}  // namespace corpusforge
