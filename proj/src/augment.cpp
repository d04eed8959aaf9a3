#include "corpusforge/augment.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "corpusforge/parallel.hpp"
#include "corpusforge/text_util.hpp"

namespace corpusforge {

std::vector<std::optional<std::string>> Translator::translate_batch(
    std::span<const std::string> sentences, const std::string& src_lang,
    const std::string& tgt_lang) const {
  std::vector<std::optional<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    try {
      out.emplace_back(translate(s, src_lang, tgt_lang));
    } catch (const TranslationError&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

std::string NaiveTranslator::translate(const std::string& sentence, const std::string& src_lang,
                                       const std::string& tgt_lang) const {
  if ((!table_->src_lang().empty() && src_lang != table_->src_lang()) ||
      (!table_->tgt_lang().empty() && tgt_lang != table_->tgt_lang())) {
    throw TranslationError("naive translator table is " + table_->src_lang() + "->" +
                           table_->tgt_lang() + ", asked for " + src_lang + "->" + tgt_lang);
  }
  return translate_naive(sentence, *table_);
}

std::string CommandTranslator::translate(const std::string& sentence, const std::string& src_lang,
                                         const std::string& tgt_lang) const {
  auto out = translate_batch(std::span(&sentence, 1), src_lang, tgt_lang);
  if (!out[0]) throw TranslationError("external translator produced no output");
  return *out[0];
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q.push_back(c);
  }
  return q + "'";
}

}  // namespace

std::vector<std::optional<std::string>> CommandTranslator::translate_batch(
    std::span<const std::string> sentences, const std::string& src_lang,
    const std::string& tgt_lang) const {
  std::vector<std::optional<std::string>> out(sentences.size());
  if (sentences.empty()) return out;

  char path[] = "/tmp/corpusforge-bt-XXXXXX";
  const int fd = ::mkstemp(path);
  if (fd < 0) return out;
  ::close(fd);
  {
    std::ofstream input(path, std::ios::binary);
    for (const auto& s : sentences) input << s << '\n';
  }
  // Exported rather than prefixed so the command text itself can expand them.
  const std::string cmd = "export CORPUSFORGE_SRC_LANG=" + shell_quote(src_lang) +
                          " CORPUSFORGE_TGT_LANG=" + shell_quote(tgt_lang) + "; " + command_ +
                          " < " + shell_quote(path);
  std::vector<std::string> lines;
  int status = -1;
  if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
    std::string current;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) current.append(buf, n);
    status = ::pclose(pipe);
    std::size_t pos = 0;
    while (pos < current.size()) {
      const auto nl = current.find('\n', pos);
      const auto end = nl == std::string::npos ? current.size() : nl;
      lines.push_back(current.substr(pos, end - pos));
      pos = end + 1;
    }
  }
  std::remove(path);
  if (status != 0 || lines.size() != sentences.size()) return out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = sanitize_utf8(trim(lines[i]));
    if (!line.empty()) out[i] = std::move(line);
  }
  return out;
}

BackTranslation back_translate(std::span<const Sentence> mono_tgt, const Translator& reverse,
                               const std::string& src_lang, unsigned jobs) {
  std::vector<std::string> texts;
  texts.reserve(mono_tgt.size());
  for (const auto& s : mono_tgt) texts.push_back(s.text);
  const std::string tgt_lang = mono_tgt.empty() ? std::string() : mono_tgt.front().lang;

  std::vector<std::optional<std::string>> translations(texts.size());
  const std::size_t chunks = std::max(1u, jobs);
  const std::size_t chunk_size = (texts.size() + chunks - 1) / chunks;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    if (begin >= texts.size()) return;
    const std::size_t len = std::min(chunk_size, texts.size() - begin);
    auto part = reverse.translate_batch(std::span(texts).subspan(begin, len), tgt_lang, src_lang);
    for (std::size_t k = 0; k < len; ++k) translations[begin + k] = std::move(part[k]);
  });

  BackTranslation result;
  for (std::size_t i = 0; i < mono_tgt.size(); ++i) {
    const auto& y = mono_tgt[i];
    if (!translations[i]) {
      ++result.failures;
      continue;
    }
    Sentence x = make_sentence(*translations[i], src_lang, y.doc_id, y.index);
    if (x.text.empty()) {
      ++result.failures;
      continue;
    }
    result.pairs.push_back({std::move(x), y, PairOrigin::synthetic});
  }
  return result;
}

AugmentedCorpus merge_corpora(std::span<const SentencePair> real,
                              std::span<const SentencePair> synthetic, double cap_ratio) {
  if (!(cap_ratio > 0.0)) throw std::invalid_argument("cap_ratio must be positive");
  AugmentedCorpus corpus;
  corpus.counts = {{PairOrigin::mined, 0}, {PairOrigin::seed, 0}, {PairOrigin::synthetic, 0}};
  std::set<std::pair<std::string, std::string>> seen;
  const auto add = [&](const SentencePair& p) {
    if (!seen.emplace(p.src.text, p.tgt.text).second) return false;
    corpus.pairs.push_back(p);
    ++corpus.counts[p.origin];
    return true;
  };
  for (const auto& p : real) add(p);
  const auto cap = static_cast<std::size_t>(std::floor(cap_ratio * static_cast<double>(real.size())));
  std::size_t kept = 0;
  for (const auto& p : synthetic) {
    if (kept >= cap) break;
    SentencePair s = p;
    s.origin = PairOrigin::synthetic;
    if (add(s)) ++kept;
  }
  return corpus;
}

void write_augmented(std::ostream& out, std::span<const SentencePair> pairs,
                     std::span<const std::optional<double>> scores) {
  char buf[32];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (i < scores.size() && scores[i]) {
      std::snprintf(buf, sizeof buf, "%.6f", *scores[i]);
      out << buf;
    }
    out << '\t' << p.src.lang << '\t' << p.tgt.lang << '\t' << p.src.text << '\t' << p.tgt.text
        << '\t' << to_string(p.origin) << '\n';
  }
}

std::vector<AugmentedRow> read_augmented(std::istream& in) {
  std::vector<AugmentedRow> out;
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
    if (cols.size() != 6) {
      throw std::runtime_error("augmented corpus: line " + std::to_string(line_no) +
                               " does not have 6 columns");
    }
    AugmentedRow row;
    if (!cols[0].empty()) row.score = std::stod(cols[0]);
    row.pair = make_pair(cols[3], cols[1], cols[4], cols[2], parse_pair_origin(cols[5]));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace corpusforge
