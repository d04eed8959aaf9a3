#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpusforge/textprep.hpp"

namespace corpusforge {

enum class PairOrigin { mined, seed, synthetic };

std::string_view to_string(PairOrigin origin);
PairOrigin parse_pair_origin(std::string_view name);

struct SentencePair {
  Sentence src;
  Sentence tgt;
  PairOrigin origin = PairOrigin::seed;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

SentencePair make_pair(std::string_view src_text, std::string src_lang, std::string_view tgt_text,
                       std::string tgt_lang, PairOrigin origin = PairOrigin::seed);

/// Swaps the sides of every pair (for training the inverse direction).
std::vector<SentencePair> reversed(std::span<const SentencePair> pairs);

/// Interned word list; ids are dense and assigned in first-seen order.
class Vocab {
 public:
  static constexpr std::uint32_t npos = ~0u;

  std::uint32_t intern(std::string_view word);
  std::uint32_t find(std::string_view word) const;
  const std::string& word(std::uint32_t id) const { return words_[id]; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> ids_;
  std::vector<std::string> words_;
};

/// Lexical translation table t(f|e) for one direction, e a source word and f
/// a target word. Rows are sparse (only co-occurring targets are stored) and
/// each row sums to one.
class LexTable {
 public:
  struct Entry {
    std::uint32_t tgt;
    double prob;
  };

  LexTable() = default;
  LexTable(std::string src_lang, std::string tgt_lang)
      : src_lang_(std::move(src_lang)), tgt_lang_(std::move(tgt_lang)) {}

  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }
  const Vocab& src_vocab() const { return src_vocab_; }
  const Vocab& tgt_vocab() const { return tgt_vocab_; }

  /// t(tgt_word | src_word); zero when the pair was never observed.
  double prob(std::string_view src_word, std::string_view tgt_word) const;
  double prob(std::uint32_t src_id, std::uint32_t tgt_id) const;

  /// Entries of one source word's row, sorted by target id.
  std::span<const Entry> row(std::uint32_t src_id) const { return rows_[src_id]; }
  double row_sum(std::uint32_t src_id) const;

  /// Sets t(tgt|src), interning both words. Rows are not renormalized.
  void set(std::string_view src_word, std::string_view tgt_word, double prob);

  std::size_t entry_count() const;

 private:
  friend class Model1Trainer;

  std::string src_lang_, tgt_lang_;
  Vocab src_vocab_, tgt_vocab_;
  std::vector<std::vector<Entry>> rows_;
};

struct Model1Result {
  LexTable table;
  std::size_t skipped_pairs = 0;  // pairs with an empty side
};

/// Called after every M-step with the 1-based iteration number.
using IterationObserver = std::function<void(int iteration, const LexTable& table)>;

/// IBM Model 1 EM without a NULL source word. t(f|e) starts uniform over
/// the target words co-occurring with e; each iteration is one full E-step
/// over all pairs followed by per-row renormalization. Deterministic.
/// Throws std::invalid_argument for an empty pair list, iterations < 1, or
/// when every pair has an empty side.
Model1Result train_model1(std::span<const SentencePair> pairs, int iterations,
                          const IterationObserver& observer = {});

constexpr double kDefaultProbFloor = 1e-9;

/// Sum over pairs of log p(tgt | src) under uniform alignment (no length
/// term), with inner sums floored at `floor`.
double corpus_log_likelihood(std::span<const SentencePair> pairs, const LexTable& table,
                             double floor = kDefaultProbFloor);

/// Length-normalized cross-entropy in nats per target word:
///   H = -(1/|tgt|) sum_j ln max(floor, (1/|src|) sum_i t(f_j|e_i)).
/// Throws std::invalid_argument on an empty side, floor outside (0, 1], or a
/// language mismatch with the table.
double cross_entropy(const Sentence& src, const Sentence& tgt, const LexTable& table,
                     double floor = kDefaultProbFloor);
double cross_entropy(std::span<const std::string> src_words,
                     std::span<const std::string> tgt_words, const LexTable& table,
                     double floor = kDefaultProbFloor);

/// Word-by-word argmax translation; out-of-vocabulary words are copied and
/// ties go to the lexicographically smallest target word.
std::string translate_naive(const Sentence& src, const LexTable& table);
std::string translate_naive(std::string_view text, const LexTable& table);

// Header line "#lextable\tsrc_lang\ttgt_lang\tsrc_vocab\ttgt_vocab", then
// "src\ttgt\tprob" rows sorted by (src, tgt), probabilities with 12
// significant digits.
void write_lextable(std::ostream& out, const LexTable& table);
LexTable read_lextable(std::istream& in);

}  // namespace corpusforge
