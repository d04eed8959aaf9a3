#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "corpusforge/lexmodel.hpp"
#include "corpusforge/textprep.hpp"

namespace corpusforge {

struct FilterConfig {
  double weight = 0.5;     // forward-model weight w
  double threshold = 0.5;  // accept when score >= threshold
  std::size_t window = 5;
  double ratio_lo = 0.5;
  double ratio_hi = 2.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct CandidatePair {
  Sentence src;
  Sentence tgt;
  std::size_t doc = 0;  // index of the document pair the candidate came from
  std::size_t pos_src = 0;
  std::size_t pos_tgt = 0;
  double len_ratio = 1.0;  // |src chars| / |tgt chars|
};

struct ScoredPair {
  CandidatePair pair;
  double h_fwd = 0.0;
  double h_rev = 0.0;
  double score = 0.0;
  bool accepted = false;
};

/// exp(-(M + D)) with M = w*h_fwd + (1-w)*h_rev and D = |h_fwd - h_rev|.
/// Agreement between the two directions matters as much as low entropy.
double dual_score(double h_fwd, double h_rev, double weight);

/// Positional window plus length-ratio filter; candidate (i, j) is kept when
/// |i - j * |src|/|tgt|| <= window and the ratio lies in [ratio_lo, ratio_hi].
/// Output is ordered by (i, j).
std::vector<CandidatePair> generate_candidates(std::span<const Sentence> src_doc,
                                               std::span<const Sentence> tgt_doc,
                                               const FilterConfig& cfg, std::size_t doc = 0);

/// Scores a candidate with the forward (src->tgt) and reverse (tgt->src)
/// tables.
ScoredPair dual_score(const CandidatePair& pair, const LexTable& fwd, const LexTable& rev,
                      const FilterConfig& cfg, double floor = kDefaultProbFloor);

struct DocPair {
  std::vector<Sentence> src;
  std::vector<Sentence> tgt;
};

struct MinedPair {
  SentencePair pair;
  double score = 0.0;
};

/// Greedy one-to-one selection over accepted candidates: descending score,
/// ties by (doc, pos_src, pos_tgt). No source or target sentence is used
/// twice. Rejected candidates are ignored.
std::vector<MinedPair> select_pairs(std::vector<ScoredPair> scored);

std::vector<MinedPair> mine_corpus(std::span<const DocPair> doc_pairs, const LexTable& fwd,
                                   const LexTable& rev, const FilterConfig& cfg, unsigned jobs = 1,
                                   double floor = kDefaultProbFloor);

// Tab-separated: score (6 decimals), src_lang, tgt_lang, src_text, tgt_text.
void write_mined(std::ostream& out, std::span<const MinedPair> pairs);
std::vector<MinedPair> read_mined(std::istream& in);

}  // namespace corpusforge
