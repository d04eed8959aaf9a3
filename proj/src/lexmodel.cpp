#include "corpusforge/lexmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "corpusforge/text_util.hpp"

namespace corpusforge {

std::string_view to_string(PairOrigin origin) {
  switch (origin) {
    case PairOrigin::mined: return "mined";
    case PairOrigin::seed: return "seed";
    case PairOrigin::synthetic: return "synthetic";
  }
  return "seed";
}

PairOrigin parse_pair_origin(std::string_view name) {
  if (name == "mined") return PairOrigin::mined;
  if (name == "seed") return PairOrigin::seed;
  if (name == "synthetic") return PairOrigin::synthetic;
  throw std::invalid_argument("unknown pair origin '" + std::string(name) + "'");
}

SentencePair make_pair(std::string_view src_text, std::string src_lang, std::string_view tgt_text,
                       std::string tgt_lang, PairOrigin origin) {
  return {make_sentence(src_text, std::move(src_lang)), make_sentence(tgt_text, std::move(tgt_lang)),
          origin};
}

std::vector<SentencePair> reversed(std::span<const SentencePair> pairs) {
  std::vector<SentencePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.tgt, p.src, p.origin});
  return out;
}

std::uint32_t Vocab::intern(std::string_view word) {
  auto [it, inserted] = ids_.try_emplace(std::string(word), static_cast<std::uint32_t>(words_.size()));
  if (inserted) words_.push_back(it->first);
  return it->second;
}

std::uint32_t Vocab::find(std::string_view word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? npos : it->second;
}

namespace {

using Row = std::vector<LexTable::Entry>;

std::size_t find_slot(const Row& row, std::uint32_t tgt) {
  const auto it = std::lower_bound(row.begin(), row.end(), tgt,
                                   [](const LexTable::Entry& e, std::uint32_t t) { return e.tgt < t; });
  return (it != row.end() && it->tgt == tgt) ? static_cast<std::size_t>(it - row.begin()) : row.size();
}

}  // namespace

double LexTable::prob(std::uint32_t src_id, std::uint32_t tgt_id) const {
  if (src_id >= rows_.size()) return 0.0;
  const Row& row = rows_[src_id];
  const std::size_t slot = find_slot(row, tgt_id);
  return slot == row.size() ? 0.0 : row[slot].prob;
}

double LexTable::prob(std::string_view src_word, std::string_view tgt_word) const {
  const auto e = src_vocab_.find(src_word);
  const auto f = tgt_vocab_.find(tgt_word);
  if (e == Vocab::npos || f == Vocab::npos) return 0.0;
  return prob(e, f);
}

double LexTable::row_sum(std::uint32_t src_id) const {
  double s = 0.0;
  for (const auto& e : rows_.at(src_id)) s += e.prob;
  return s;
}

void LexTable::set(std::string_view src_word, std::string_view tgt_word, double p) {
  const auto e = src_vocab_.intern(src_word);
  const auto f = tgt_vocab_.intern(tgt_word);
  if (rows_.size() <= e) rows_.resize(e + 1);
  Row& row = rows_[e];
  const auto it = std::lower_bound(row.begin(), row.end(), f,
                                   [](const Entry& x, std::uint32_t t) { return x.tgt < t; });
  if (it != row.end() && it->tgt == f) it->prob = p;
  else row.insert(it, Entry{f, p});
}

std::size_t LexTable::entry_count() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

class Model1Trainer {
 public:
  static Model1Result train(std::span<const SentencePair> pairs, int iterations,
                            const IterationObserver& observer);
};

Model1Result Model1Trainer::train(std::span<const SentencePair> pairs, int iterations,
                                  const IterationObserver& observer) {
  if (pairs.empty()) throw std::invalid_argument("train_model1: empty pair list");
  if (iterations < 1) throw std::invalid_argument("train_model1: iterations must be >= 1");

  Model1Result result;
  LexTable& table = result.table;
  struct Tokens {
    std::vector<std::uint32_t> src, tgt;
  };
  std::vector<Tokens> corpus;
  corpus.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto sw = split_words(p.src.text);
    const auto tw = split_words(p.tgt.text);
    if (sw.empty() || tw.empty()) {
      ++result.skipped_pairs;
      continue;
    }
    if (corpus.empty()) {
      table.src_lang_ = p.src.lang;
      table.tgt_lang_ = p.tgt.lang;
    }
    Tokens t;
    for (const auto& w : sw) t.src.push_back(table.src_vocab_.intern(w));
    for (const auto& w : tw) t.tgt.push_back(table.tgt_vocab_.intern(w));
    corpus.push_back(std::move(t));
  }
  if (corpus.empty()) throw std::invalid_argument("train_model1: every pair has an empty side");

  // Support of each row = target words co-occurring with the source word.
  std::vector<std::vector<std::uint32_t>> cooc(table.src_vocab_.size());
  for (const auto& t : corpus) {
    for (auto e : t.src) cooc[e].insert(cooc[e].end(), t.tgt.begin(), t.tgt.end());
  }
  table.rows_.assign(cooc.size(), {});
  for (std::size_t e = 0; e < cooc.size(); ++e) {
    auto& c = cooc[e];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    const double uniform = 1.0 / static_cast<double>(c.size());
    auto& row = table.rows_[e];
    row.reserve(c.size());
    for (auto f : c) row.push_back({f, uniform});
    c = {};
  }

  std::vector<std::vector<double>> counts(table.rows_.size());
  for (std::size_t e = 0; e < counts.size(); ++e) counts[e].resize(table.rows_[e].size());
  std::vector<std::size_t> slots;
  std::vector<double> probs;

  for (int iter = 1; iter <= iterations; ++iter) {
    for (auto& c : counts) std::fill(c.begin(), c.end(), 0.0);
    for (const auto& t : corpus) {
      slots.resize(t.src.size());
      probs.resize(t.src.size());
      for (auto f : t.tgt) {
        double denom = 0.0;
        for (std::size_t i = 0; i < t.src.size(); ++i) {
          const Row& row = table.rows_[t.src[i]];
          slots[i] = find_slot(row, f);
          probs[i] = row[slots[i]].prob;
          denom += probs[i];
        }
        if (denom <= 0.0) continue;
        for (std::size_t i = 0; i < t.src.size(); ++i) {
          counts[t.src[i]][slots[i]] += probs[i] / denom;
        }
      }
    }
    for (std::size_t e = 0; e < counts.size(); ++e) {
      double total = 0.0;
      for (double c : counts[e]) total += c;
      if (total <= 0.0) continue;
      auto& row = table.rows_[e];
      for (std::size_t k = 0; k < row.size(); ++k) row[k].prob = counts[e][k] / total;
    }
    if (observer) observer(iter, table);
  }
  return result;
}

Model1Result train_model1(std::span<const SentencePair> pairs, int iterations,
                          const IterationObserver& observer) {
  return Model1Trainer::train(pairs, iterations, observer);
}

namespace {

void check_floor(double floor) {
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw std::invalid_argument("probability floor must be in (0, 1]");
  }
}

// sum_j ln max(floor, (1/|src|) sum_i t(f_j|e_i))
double sentence_log_prob(std::span<const std::string> src_words,
                         std::span<const std::string> tgt_words, const LexTable& table,
                         double floor) {
  std::vector<std::uint32_t> src_ids;
  src_ids.reserve(src_words.size());
  for (const auto& w : src_words) src_ids.push_back(table.src_vocab().find(w));
  const double inv_len = 1.0 / static_cast<double>(src_words.size());
  double lp = 0.0;
  for (const auto& w : tgt_words) {
    const auto f = table.tgt_vocab().find(w);
    double sum = 0.0;
    if (f != Vocab::npos) {
      for (auto e : src_ids) {
        if (e != Vocab::npos) sum += table.prob(e, f);
      }
    }
    lp += std::log(std::max(floor, sum * inv_len));
  }
  return lp;
}

}  // namespace

double corpus_log_likelihood(std::span<const SentencePair> pairs, const LexTable& table,
                             double floor) {
  check_floor(floor);
  double ll = 0.0;
  for (const auto& p : pairs) {
    const auto sw = split_words(p.src.text);
    const auto tw = split_words(p.tgt.text);
    if (sw.empty() || tw.empty()) continue;
    ll += sentence_log_prob(sw, tw, table, floor);
  }
  return ll;
}

double cross_entropy(std::span<const std::string> src_words, std::span<const std::string> tgt_words,
                     const LexTable& table, double floor) {
  check_floor(floor);
  if (src_words.empty() || tgt_words.empty()) {
    throw std::invalid_argument("cross_entropy: zero-length sentence");
  }
  const double h = -sentence_log_prob(src_words, tgt_words, table, floor) /
                   static_cast<double>(tgt_words.size());
  return std::max(0.0, h);
}

namespace {

bool lang_matches(const std::string& sentence_lang, const std::string& table_lang) {
  return table_lang.empty() || sentence_lang.empty() || sentence_lang == "unknown" ||
         sentence_lang == table_lang;
}

}  // namespace

double cross_entropy(const Sentence& src, const Sentence& tgt, const LexTable& table, double floor) {
  if (!lang_matches(src.lang, table.src_lang()) || !lang_matches(tgt.lang, table.tgt_lang())) {
    throw std::invalid_argument("cross_entropy: table direction " + table.src_lang() + "->" +
                                table.tgt_lang() + " does not match " + src.lang + "->" + tgt.lang);
  }
  return cross_entropy(split_words(src.text), split_words(tgt.text), table, floor);
}

std::string translate_naive(std::string_view text, const LexTable& table) {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    const auto e = table.src_vocab().find(w);
    const auto row = e == Vocab::npos ? std::span<const LexTable::Entry>{} : table.row(e);
    if (row.empty()) {
      out += w;
      continue;
    }
    const LexTable::Entry* best = &row[0];
    for (const auto& entry : row.subspan(1)) {
      if (entry.prob > best->prob ||
          (entry.prob == best->prob &&
           table.tgt_vocab().word(entry.tgt) < table.tgt_vocab().word(best->tgt))) {
        best = &entry;
      }
    }
    out += table.tgt_vocab().word(best->tgt);
  }
  return out;
}

std::string translate_naive(const Sentence& src, const LexTable& table) {
  return translate_naive(src.text, table);
}

void write_lextable(std::ostream& out, const LexTable& table) {
  out << "#lextable\t" << table.src_lang() << '\t' << table.tgt_lang() << '\t'
      << table.src_vocab().size() << '\t' << table.tgt_vocab().size() << '\n';
  std::vector<std::uint32_t> order(table.src_vocab().size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto& sw = table.src_vocab();
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sw.word(a) < sw.word(b); });
  char buf[40];
  for (auto e : order) {
    std::vector<const LexTable::Entry*> row;
    for (const auto& entry : table.row(e)) row.push_back(&entry);
    std::sort(row.begin(), row.end(), [&](auto* a, auto* b) {
      return table.tgt_vocab().word(a->tgt) < table.tgt_vocab().word(b->tgt);
    });
    for (const auto* entry : row) {
      std::snprintf(buf, sizeof buf, "%.12g", entry->prob);
      out << sw.word(e) << '\t' << table.tgt_vocab().word(entry->tgt) << '\t' << buf << '\n';
    }
  }
}

LexTable read_lextable(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("#lextable\t")) {
    throw std::runtime_error("lexical table: missing header");
  }
  std::vector<std::string> header;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const auto tab = line.find('\t', pos);
    header.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  if (header.size() != 5) throw std::runtime_error("lexical table: malformed header");
  LexTable table(header[1], header[2]);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw std::runtime_error("lexical table: line " + std::to_string(line_no) + " malformed");
    }
    table.set(std::string_view(line).substr(0, t1),
              std::string_view(line).substr(t1 + 1, t2 - t1 - 1), std::stod(line.substr(t2 + 1)));
  }
  return table;
}

}  // namespace corpusforge
