#include "corpusforge/textprep.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "corpusforge/text_util.hpp"

namespace corpusforge {

namespace {

std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const auto src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize(std::string_view text) {
  const std::u32string cps = decode_utf8(nfc(text));
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  bool pending_break = false;
  bool line_empty = true;
  for (char32_t cp : cps) {
    if (cp == U'\n') {
      if (!out.empty()) pending_break = true;
      line_empty = true;
      pending_space = false;
      continue;
    }
    if (is_space(cp)) {
      pending_space = true;
      continue;
    }
    if (u_iscntrl(static_cast<UChar32>(cp))) continue;
    if (pending_break) out.push_back('\n');
    else if (pending_space && !line_empty) out.push_back(' ');
    pending_break = pending_space = false;
    line_empty = false;
    append_utf8(out, cp);
  }
  return out;
}

std::uint64_t content_hash(std::string_view normalized_text) {
  return fnv1a64(normalized_text);
}

Sentence make_sentence(std::string_view text, std::string lang, std::string doc_id,
                       std::size_t index) {
  Sentence s;
  s.doc_id = std::move(doc_id);
  s.index = index;
  s.text = normalize(text);
  s.lang = std::move(lang);
  s.content_hash = content_hash(s.text);
  return s;
}

bool is_sentence_terminator(char32_t cp) {
  switch (cp) {
    case U'.': case U'!': case U'?':
    case 0x1362:  // ።
    case 0x1367:  // ፧
    case 0x1368:  // ፨
      return true;
    default:
      return false;
  }
}

namespace {

bool is_closing_punct(char32_t cp) {
  switch (cp) {
    case U')': case U']': case U'"': case U'\'':
    case 0x201D: case 0x2019: case 0x00BB: case 0x203A:
      return true;
    default:
      return false;
  }
}

bool is_opening_punct(char32_t cp) {
  switch (cp) {
    case U'(': case U'[': case U'"': case U'\'':
    case 0x201C: case 0x2018: case 0x00AB: case 0x2039:
      return true;
    default:
      return false;
  }
}

const std::unordered_set<std::u32string>& english_abbreviations() {
  static const std::unordered_set<std::u32string> set = {
      U"mr.",   U"mrs.",  U"ms.",   U"dr.",   U"prof.", U"sr.",   U"jr.",   U"st.",
      U"mt.",   U"vs.",   U"etc.",  U"e.g.",  U"i.e.",  U"u.s.",  U"u.k.",  U"u.n.",
      U"inc.",  U"ltd.",  U"co.",   U"corp.", U"no.",   U"gen.",  U"gov.",  U"sen.",
      U"rep.",  U"lt.",   U"col.",  U"capt.", U"sgt.",  U"rev.",  U"hon.",  U"jan.",
      U"feb.",  U"mar.",  U"apr.",  U"jun.",  U"jul.",  U"aug.",  U"sep.",  U"sept.",
      U"oct.",  U"nov.",  U"dec.",  U"a.m.",  U"p.m.",  U"approx.", U"dept.", U"fig.",
      U"al.",   U"est.",  U"ave.",  U"blvd.", U"ft.",   U"vol.",  U"ed.",   U"pp."};
  return set;
}

bool is_ascii_letter(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

// `token` ends with '.'. True for listed abbreviations, single-letter
// initials ("J.") and dotted acronyms ("U.S.A.").
bool is_english_abbreviation(std::u32string token) {
  while (!token.empty() && is_opening_punct(token.front())) token.erase(token.begin());
  for (auto& c : token) c = to_lower(c);
  if (english_abbreviations().contains(token)) return true;
  if (token.size() == 2 && is_ascii_letter(token[0])) return true;
  if (token.size() >= 4 && token.size() % 2 == 0) {
    bool dotted = true;
    for (std::size_t k = 0; k < token.size(); k += 2) {
      dotted = dotted && is_ascii_letter(token[k]) && token[k + 1] == U'.';
    }
    if (dotted) return true;
  }
  return false;
}

void emit(std::vector<Sentence>& out, const Document& doc, std::string_view lang,
          std::u32string_view segment) {
  std::size_t b = 0, e = segment.size();
  while (b < e && is_space(segment[b])) ++b;
  while (e > b && is_space(segment[e - 1])) --e;
  if (b == e) return;
  Sentence s;
  s.doc_id = doc.id;
  s.index = out.size();
  s.text = encode_utf8(segment.substr(b, e - b));
  s.lang = std::string(lang);
  s.content_hash = content_hash(s.text);
  out.push_back(std::move(s));
}

}  // namespace

std::vector<Sentence> split_sentences(const Document& doc, std::string_view lang) {
  const std::u32string text = decode_utf8(normalize(doc.text));
  const bool english = lang == "en";
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == U'\n') {
      emit(out, doc, lang, std::u32string_view(text).substr(start, i - start));
      start = ++i;
      continue;
    }
    if (!is_sentence_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_sentence_terminator(text[j])) ++j;
    const char32_t last_terminator = text[j - 1];
    const std::size_t terminators = j - i;
    while (j < text.size() && is_closing_punct(text[j])) ++j;
    if (j < text.size() && !is_space(text[j])) {
      i = j;
      continue;
    }
    if (english && last_terminator == U'.' && terminators == 1) {
      std::size_t t = i;
      while (t > start && !is_space(text[t - 1])) --t;
      if (is_english_abbreviation(text.substr(t, i + 1 - t))) {
        i = j;
        continue;
      }
    }
    emit(out, doc, lang, std::u32string_view(text).substr(start, j - start));
    start = i = j;
  }
  emit(out, doc, lang, std::u32string_view(text).substr(start));
  return out;
}

std::vector<Sentence> dedup_exact(std::span<const Sentence> sentences) {
  std::unordered_map<std::uint64_t, std::vector<const std::string*>> seen;
  std::vector<Sentence> out;
  for (const auto& s : sentences) {
    auto& bucket = seen[s.content_hash];
    const bool duplicate = std::any_of(bucket.begin(), bucket.end(),
                                       [&](const std::string* t) { return *t == s.text; });
    if (duplicate) continue;
    out.push_back(s);
    bucket.push_back(&s.text);
  }
  return out;
}

std::vector<std::u32string> shingles(std::string_view text, std::size_t k) {
  const std::u32string cps = decode_utf8(text);
  std::vector<std::u32string> out;
  if (cps.size() < k) return out;
  out.reserve(cps.size() - k + 1);
  for (std::size_t i = 0; i + k <= cps.size(); ++i) out.push_back(cps.substr(i, k));
  return out;
}

MinHasher::MinHasher(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& s : salts_) s = rng();
}

MinHasher::Signature MinHasher::signature(std::string_view text) const {
  Signature sig;
  sig.fill(std::numeric_limits<std::uint64_t>::max());
  for (const auto& sh : shingles(text, kShingle)) {
    const std::uint64_t base = fnv1a64(encode_utf8(sh));
    for (std::size_t p = 0; p < kNumPerm; ++p) {
      sig[p] = std::min(sig[p], splitmix64(base ^ salts_[p]));
    }
  }
  return sig;
}

double MinHasher::estimate_jaccard(const Signature& a, const Signature& b) {
  std::size_t equal = 0;
  for (std::size_t p = 0; p < kNumPerm; ++p) equal += a[p] == b[p];
  return static_cast<double>(equal) / kNumPerm;
}

std::vector<Sentence> dedup_near(std::span<const Sentence> sentences, double threshold,
                                 std::uint64_t seed) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("dedup_near: threshold must be in (0, 1]");
  }
  const MinHasher hasher(seed);
  std::vector<MinHasher::Signature> retained;
  std::unordered_set<std::string_view> short_retained;
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (codepoint_count(s.text) < MinHasher::kShingle) {
      if (short_retained.insert(s.text).second) out.push_back(s);
      continue;
    }
    const auto sig = hasher.signature(s.text);
    const bool near = std::any_of(retained.begin(), retained.end(), [&](const auto& r) {
      return MinHasher::estimate_jaccard(sig, r) >= threshold;
    });
    if (near) continue;
    retained.push_back(sig);
    out.push_back(s);
  }
  return out;
}

void write_sentences(std::ostream& out, std::span<const Sentence> sentences) {
  for (const auto& s : sentences) {
    out << s.doc_id << '\t' << s.index << '\t' << s.lang << '\t' << s.text << '\n';
  }
}

std::vector<Sentence> read_sentences(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::string_view rest = line;
    for (std::size_t f = 0; f < 3; ++f) {
      const auto tab = rest.find('\t');
      if (tab == std::string_view::npos) {
        throw std::runtime_error("sentence file: line " + std::to_string(line_no) +
                                 " has fewer than 4 columns");
      }
      fields[f] = rest.substr(0, tab);
      rest.remove_prefix(tab + 1);
    }
    fields[3] = rest;
    Sentence s;
    s.doc_id = std::string(fields[0]);
    s.index = std::stoull(std::string(fields[1]));
    s.lang = std::string(fields[2]);
    s.text = std::string(fields[3]);
    s.content_hash = content_hash(s.text);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace corpusforge
