#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpusforge/lexmodel.hpp"

namespace corpusforge {

struct TranslationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic sentence translator. Implementations throw
/// TranslationError for sentences they cannot translate.
class Translator {
 public:
  virtual ~Translator() = default;

  virtual std::string translate(const std::string& sentence, const std::string& src_lang,
                                const std::string& tgt_lang) const = 0;

  /// One result per input; std::nullopt marks a failed sentence. The default
  /// calls translate() per sentence.
  virtual std::vector<std::optional<std::string>> translate_batch(
      std::span<const std::string> sentences, const std::string& src_lang,
      const std::string& tgt_lang) const;
};

/// Word-by-word argmax over a lexical table (see translate_naive).
class NaiveTranslator final : public Translator {
 public:
  explicit NaiveTranslator(const LexTable& table) : table_(&table) {}
  std::string translate(const std::string& sentence, const std::string& src_lang,
                        const std::string& tgt_lang) const override;

 private:
  const LexTable* table_;
};

/// Runs an external command once per batch: source sentences go to its
/// standard input one per line, translations are read back from standard
/// output one per line. A line-count mismatch or a non-zero exit fails the
/// whole batch; an empty output line fails that sentence.
class CommandTranslator final : public Translator {
 public:
  explicit CommandTranslator(std::string command) : command_(std::move(command)) {}
  std::string translate(const std::string& sentence, const std::string& src_lang,
                        const std::string& tgt_lang) const override;
  std::vector<std::optional<std::string>> translate_batch(
      std::span<const std::string> sentences, const std::string& src_lang,
      const std::string& tgt_lang) const override;

 private:
  std::string command_;
};

struct BackTranslation {
  std::vector<SentencePair> pairs;  // origin synthetic, target text verbatim
  std::size_t failures = 0;
};

/// For each monolingual target sentence y, emits (reverse(y), y). Order is
/// preserved; sentences the translator fails on are skipped and counted.
BackTranslation back_translate(std::span<const Sentence> mono_tgt, const Translator& reverse,
                               const std::string& src_lang, unsigned jobs = 1);

struct AugmentedCorpus {
  std::vector<SentencePair> pairs;
  std::map<PairOrigin, std::size_t> counts;
};

/// Keeps every real pair (mined, plus any seed pairs the caller includes) and
/// appends synthetic pairs in order up to floor(cap_ratio * |real|).
/// Duplicate (src_text, tgt_text) pairs are dropped, first occurrence wins,
/// and a skipped synthetic duplicate does not use up the cap. Throws
/// std::invalid_argument unless cap_ratio > 0.
AugmentedCorpus merge_corpora(std::span<const SentencePair> real,
                              std::span<const SentencePair> synthetic, double cap_ratio);

struct AugmentedRow {
  SentencePair pair;
  std::optional<double> score;
};

// The mined corpus layout plus a trailing origin column: score, src_lang,
// tgt_lang, src_text, tgt_text, origin. The score is left empty for rows
// that were never scored (seed and synthetic pairs). `scores`, when given,
// runs parallel to `pairs`.
void write_augmented(std::ostream& out, std::span<const SentencePair> pairs,
                     std::span<const std::optional<double>> scores = {});
std::vector<AugmentedRow> read_augmented(std::istream& in);

}  // namespace corpusforge
