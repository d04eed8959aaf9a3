#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/ingest.hpp"

namespace corpusforge {

/// NFC composition, control characters removed (newline kept), horizontal
/// whitespace runs collapsed to one space, lines trimmed, blank lines
/// dropped. Tabs never survive, which keeps sentences safe for TSV output.
/// The Ethiopic word separator U+1361 is ordinary text and is preserved.
std::string normalize(std::string_view text);

/// A normalized, language-tagged sentence. `content_hash` is a pure function
/// of the normalized text.
struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  std::string lang = "unknown";
  std::uint64_t content_hash = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

std::uint64_t content_hash(std::string_view normalized_text);

/// Builds a sentence from raw text (normalized here).
Sentence make_sentence(std::string_view text, std::string lang, std::string doc_id = {},
                       std::size_t index = 0);

bool is_sentence_terminator(char32_t cp);

/// Splits `doc.text` after sentence terminators (። ፧ ፨ . ! ?) that are
/// followed by whitespace or end of text; newlines always end a sentence.
/// For English, periods closing a known abbreviation or a single-letter
/// initial do not split.
std::vector<Sentence> split_sentences(const Document& doc, std::string_view lang);

/// Stable exact dedup: keeps the first occurrence of each normalized text.
std::vector<Sentence> dedup_exact(std::span<const Sentence> sentences);

/// MinHash over character shingles with independent seeded hash functions.
class MinHasher {
 public:
  static constexpr std::size_t kNumPerm = 64;
  static constexpr std::size_t kShingle = 5;
  using Signature = std::array<std::uint64_t, kNumPerm>;

  explicit MinHasher(std::uint64_t seed = 0x5eed);

  Signature signature(std::string_view text) const;
  static double estimate_jaccard(const Signature& a, const Signature& b);

 private:
  std::array<std::uint64_t, kNumPerm> salts_;
};

/// Character k-shingles (codepoint based) of `text`.
std::vector<std::u32string> shingles(std::string_view text, std::size_t k = MinHasher::kShingle);

/// Stable near-duplicate removal. A sentence is dropped when its estimated
/// Jaccard similarity against any already retained sentence reaches
/// `threshold`. Sentences shorter than the shingle size only drop as exact
/// duplicates. Throws std::invalid_argument unless 0 < threshold <= 1.
std::vector<Sentence> dedup_near(std::span<const Sentence> sentences, double threshold,
                                 std::uint64_t seed = 0x5eed);

// Tab-separated: doc_id, index, lang, text.
void write_sentences(std::ostream& out, std::span<const Sentence> sentences);
std::vector<Sentence> read_sentences(std::istream& in);

}  // namespace corpusforge
