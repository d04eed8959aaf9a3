#include "corpusforge/miner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "corpusforge/parallel.hpp"
#include "corpusforge/text_util.hpp"

namespace corpusforge {

void FilterConfig::validate() const {
  if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("filter.weight must be in [0, 1]");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("filter.threshold must be in (0, 1)");
  }
  if (!(ratio_lo > 0.0 && ratio_lo < ratio_hi)) {
    throw std::invalid_argument("filter.ratio_lo must be positive and below filter.ratio_hi");
  }
}

double dual_score(double h_fwd, double h_rev, double weight) {
  const double mean = weight * h_fwd + (1.0 - weight) * h_rev;
  const double disagreement = std::abs(h_fwd - h_rev);
  return std::exp(-(mean + disagreement));
}

std::vector<CandidatePair> generate_candidates(std::span<const Sentence> src_doc,
                                               std::span<const Sentence> tgt_doc,
                                               const FilterConfig& cfg, std::size_t doc) {
  std::vector<CandidatePair> out;
  if (src_doc.empty() || tgt_doc.empty()) return out;
  const double scale = static_cast<double>(src_doc.size()) / static_cast<double>(tgt_doc.size());
  std::vector<double> tgt_len(tgt_doc.size());
  for (std::size_t j = 0; j < tgt_doc.size(); ++j) {
    tgt_len[j] = static_cast<double>(codepoint_count(tgt_doc[j].text));
  }
  for (std::size_t i = 0; i < src_doc.size(); ++i) {
    const double src_len = static_cast<double>(codepoint_count(src_doc[i].text));
    for (std::size_t j = 0; j < tgt_doc.size(); ++j) {
      const double offset = std::abs(static_cast<double>(i) - static_cast<double>(j) * scale);
      if (offset > static_cast<double>(cfg.window) + 1e-9) continue;
      if (tgt_len[j] == 0.0 || src_len == 0.0) continue;
      const double ratio = src_len / tgt_len[j];
      if (ratio < cfg.ratio_lo || ratio > cfg.ratio_hi) continue;
      out.push_back({src_doc[i], tgt_doc[j], doc, i, j, ratio});
    }
  }
  return out;
}

ScoredPair dual_score(const CandidatePair& pair, const LexTable& fwd, const LexTable& rev,
                      const FilterConfig& cfg, double floor) {
  ScoredPair s;
  s.pair = pair;
  s.h_fwd = cross_entropy(pair.src, pair.tgt, fwd, floor);
  s.h_rev = cross_entropy(pair.tgt, pair.src, rev, floor);
  s.score = dual_score(s.h_fwd, s.h_rev, cfg.weight);
  s.accepted = s.score >= cfg.threshold;
  return s;
}

std::vector<MinedPair> select_pairs(std::vector<ScoredPair> scored) {
  std::erase_if(scored, [](const ScoredPair& s) { return !s.accepted; });
  std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pair.doc != b.pair.doc) return a.pair.doc < b.pair.doc;
    if (a.pair.pos_src != b.pair.pos_src) return a.pair.pos_src < b.pair.pos_src;
    return a.pair.pos_tgt < b.pair.pos_tgt;
  });
  std::set<std::pair<std::size_t, std::size_t>> used_src, used_tgt;
  std::vector<MinedPair> out;
  for (auto& s : scored) {
    if (used_src.contains({s.pair.doc, s.pair.pos_src}) ||
        used_tgt.contains({s.pair.doc, s.pair.pos_tgt})) {
      continue;
    }
    used_src.insert({s.pair.doc, s.pair.pos_src});
    used_tgt.insert({s.pair.doc, s.pair.pos_tgt});
    out.push_back({SentencePair{std::move(s.pair.src), std::move(s.pair.tgt), PairOrigin::mined},
                   s.score});
  }
  return out;
}

std::vector<MinedPair> mine_corpus(std::span<const DocPair> doc_pairs, const LexTable& fwd,
                                   const LexTable& rev, const FilterConfig& cfg, unsigned jobs,
                                   double floor) {
  cfg.validate();
  std::vector<CandidatePair> candidates;
  for (std::size_t d = 0; d < doc_pairs.size(); ++d) {
    auto c = generate_candidates(doc_pairs[d].src, doc_pairs[d].tgt, cfg, d);
    std::move(c.begin(), c.end(), std::back_inserter(candidates));
  }
  std::vector<ScoredPair> scored(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t k) {
    scored[k] = dual_score(candidates[k], fwd, rev, cfg, floor);
  });
  return select_pairs(std::move(scored));
}

void write_mined(std::ostream& out, std::span<const MinedPair> pairs) {
  char buf[32];
  for (const auto& m : pairs) {
    std::snprintf(buf, sizeof buf, "%.6f", m.score);
    out << buf << '\t' << m.pair.src.lang << '\t' << m.pair.tgt.lang << '\t' << m.pair.src.text
        << '\t' << m.pair.tgt.text << '\n';
  }
}

std::vector<MinedPair> read_mined(std::istream& in) {
  std::vector<MinedPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 5) {
      throw std::runtime_error("mined corpus: line " + std::to_string(line_no) +
                               " does not have 5 columns");
    }
    MinedPair m;
    m.score = std::stod(cols[0]);
    m.pair = make_pair(cols[3], cols[1], cols[4], cols[2], PairOrigin::mined);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace corpusforge
