#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

namespace corpusforge {

enum class Script { ethiopic, latin, mixed, other };

std::string_view to_string(Script script);

struct LangPrediction {
  std::string lang;
  double confidence = 0.0;
  Script script = Script::other;
};

/// Add-one smoothed character n-gram model (n = 1..3) for one language.
/// Each order reserves one vocabulary slot for unseen grams, so the seen
/// probabilities of an order sum to strictly less than one.
struct LangProfile {
  static constexpr std::size_t kMaxOrder = 3;

  struct Order {
    std::unordered_map<std::string, double> logprobs;
    std::uint64_t total = 0;       // n-gram tokens seen in training
    std::uint64_t vocab_size = 0;  // distinct grams + 1 unseen slot

    double unseen_logprob() const;
    double logprob(const std::string& gram) const;
  };

  std::string lang;
  std::array<Order, kMaxOrder> orders;
};

/// Script census over letters: at least half Ethiopic (U+1200-U+137F) is
/// ethiopic, at least half Latin is latin. Text where neither reaches half
/// but one is present is mixed.
Script classify_script(std::string_view text);

LangProfile train_profile(std::string lang, std::string_view training_text);

/// Sum of character n-gram log-likelihoods of `text` under `profile`.
double profile_loglik(const LangProfile& profile, std::string_view text);

/// Ethiopic text is only scored against am/ti profiles and Latin text only
/// against en; other scripts use every profile. Confidence is the softmax of
/// the candidate log-likelihoods. Throws std::invalid_argument on empty or
/// whitespace-only text or when `profiles` is empty.
LangPrediction detect_language(std::string_view text, std::span<const LangProfile> profiles);

// One JSON record per line: a header {lang, orders:[{n,total,vocab_size}]}
// followed by {n, gram, logprob} entries sorted by (n, gram).
void write_profile(std::ostream& out, const LangProfile& profile);
LangProfile read_profile(std::istream& in);
LangProfile load_profile(const std::filesystem::path& path);

}  // namespace corpusforge
