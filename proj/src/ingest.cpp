#include "corpusforge/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unicode/uchar.h>

#include "corpusforge/parallel.hpp"
#include "corpusforge/text_util.hpp"

namespace corpusforge {

namespace fs = std::filesystem;

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::web: return "web";
    case SourceKind::offline_ocr: return "offline_ocr";
    case SourceKind::plain: return "plain";
  }
  return "plain";
}

SourceKind parse_source_kind(std::string_view name) {
  if (name == "web") return SourceKind::web;
  if (name == "offline_ocr") return SourceKind::offline_ocr;
  if (name == "plain") return SourceKind::plain;
  throw std::invalid_argument("unknown source kind '" + std::string(name) + "'");
}

namespace {

constexpr std::array kBlockTags = {"p", "div", "br", "li", "h1", "h2", "h3",
                                   "h4", "h5", "h6", "tr"};
constexpr std::array kSkipContentTags = {"script", "style", "title", "noscript",
                                         "template"};
constexpr std::array kCellTags = {"td", "th"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& set, std::string_view name) {
  return std::any_of(set.begin(), set.end(),
                     [&](const char* s) { return name == s; });
}

bool is_ascii_alpha(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

char32_t ascii_lower(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c + 32 : c;
}

bool starts_with_ci(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (ascii_lower(s[pos + k]) != prefix[k]) return false;
  }
  return true;
}

std::size_t find_ci(const std::u32string& s, std::size_t from, std::u32string_view needle) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (starts_with_ci(s, i, needle)) return i;
  }
  return std::u32string::npos;
}

struct NamedEntity {
  std::u32string_view name;
  char32_t cp;
};

constexpr NamedEntity kEntities[] = {
    {U"amp", U'&'},       {U"lt", U'<'},        {U"gt", U'>'},
    {U"quot", U'"'},      {U"apos", U'\''},     {U"nbsp", 0x00A0},
    {U"ndash", 0x2013},   {U"mdash", 0x2014},   {U"hellip", 0x2026},
    {U"lsquo", 0x2018},   {U"rsquo", 0x2019},   {U"ldquo", 0x201C},
    {U"rdquo", 0x201D},   {U"laquo", 0x00AB},   {U"raquo", 0x00BB},
    {U"copy", 0x00A9},    {U"reg", 0x00AE},     {U"middot", 0x00B7},
    {U"bull", 0x2022},    {U"shy", 0x00AD},     {U"euro", 0x20AC},
};

// Decodes the entity starting at s[pos] == '&'. Returns the number of code
// points consumed, or 0 when the text is not a recognised entity.
std::size_t decode_entity(const std::u32string& s, std::size_t pos, char32_t& out) {
  const std::size_t semi = s.find(U';', pos + 1);
  if (semi == std::u32string::npos || semi - pos > 12) return 0;
  std::u32string_view body(s.data() + pos + 1, semi - pos - 1);
  if (body.empty()) return 0;
  if (body[0] == U'#') {
    std::u32string_view digits = body.substr(1);
    int base = 10;
    if (!digits.empty() && (digits[0] == U'x' || digits[0] == U'X')) {
      base = 16;
      digits.remove_prefix(1);
    }
    if (digits.empty()) return 0;
    std::uint64_t value = 0;
    for (char32_t d : digits) {
      int v;
      if (d >= U'0' && d <= U'9') v = static_cast<int>(d - U'0');
      else if (base == 16 && d >= U'a' && d <= U'f') v = static_cast<int>(d - U'a' + 10);
      else if (base == 16 && d >= U'A' && d <= U'F') v = static_cast<int>(d - U'A' + 10);
      else return 0;
      value = value * base + v;
      if (value > 0x10FFFF) value = 0x110000;
    }
    if (value == 0 || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) {
      out = 0xFFFD;
    } else {
      out = static_cast<char32_t>(value);
    }
    return semi - pos + 1;
  }
  for (const auto& e : kEntities) {
    if (body == e.name) {
      out = e.cp;
      return semi - pos + 1;
    }
  }
  return 0;
}

// Accumulates visible text: whitespace runs become one space, block breaks
// become one newline, nothing leads or trails a line.
class TextBuilder {
 public:
  explicit TextBuilder(bool newline_is_break) : newline_is_break_(newline_is_break) {}

  void put(char32_t cp) {
    if (cp == U'\n' && newline_is_break_) {
      block_break();
      return;
    }
    if (is_space(cp)) {
      pending_space_ = true;
      return;
    }
    if (u_iscntrl(static_cast<UChar32>(cp)) || cp == 0xFEFF) return;
    if (!out_.empty()) {
      if (pending_break_) out_.push_back('\n');
      else if (pending_space_ && !line_empty_) out_.push_back(' ');
    }
    pending_break_ = pending_space_ = false;
    line_empty_ = false;
    append_utf8(out_, cp);
  }

  void space() { pending_space_ = true; }

  void block_break() {
    if (!out_.empty()) pending_break_ = true;
    line_empty_ = true;
  }

  std::string take() { return std::move(out_); }

 private:
  bool newline_is_break_;
  bool pending_space_ = false;
  bool pending_break_ = false;
  bool line_empty_ = true;
  std::string out_;
};

std::map<std::string, std::string> parse_attributes(std::u32string_view attrs) {
  std::map<std::string, std::string> result;
  std::size_t i = 0;
  const auto skip_ws = [&] {
    while (i < attrs.size() && is_space(attrs[i])) ++i;
  };
  while (i < attrs.size()) {
    skip_ws();
    std::size_t k = i;
    while (k < attrs.size() && !is_space(attrs[k]) && attrs[k] != U'=' && attrs[k] != U'/' &&
           attrs[k] != U'>') {
      ++k;
    }
    if (k == i) {
      ++i;
      continue;
    }
    std::u32string key;
    for (std::size_t p = i; p < k; ++p) key.push_back(ascii_lower(attrs[p]));
    i = k;
    skip_ws();
    std::u32string value;
    if (i < attrs.size() && attrs[i] == U'=') {
      ++i;
      skip_ws();
      if (i < attrs.size() && (attrs[i] == U'"' || attrs[i] == U'\'')) {
        const char32_t quote = attrs[i++];
        while (i < attrs.size() && attrs[i] != quote) value.push_back(attrs[i++]);
        if (i < attrs.size()) ++i;
      } else {
        while (i < attrs.size() && !is_space(attrs[i]) && attrs[i] != U'>') {
          value.push_back(attrs[i++]);
        }
      }
    }
    result.emplace(encode_utf8(key), encode_utf8(value));
  }
  return result;
}

std::string render(const std::u32string& s, bool html, std::map<std::string, std::string>* meta);

std::string clean_fragment(std::u32string_view fragment) {
  return render(std::u32string(fragment), true, nullptr);
}

void capture_meta(const std::map<std::string, std::string>& attrs,
                  std::map<std::string, std::string>& meta) {
  const auto content = attrs.find("content");
  if (content == attrs.end()) return;
  std::string key;
  if (auto it = attrs.find("name"); it != attrs.end()) key = it->second;
  else if (auto it2 = attrs.find("property"); it2 != attrs.end()) key = it2->second;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::string field;
  if (key == "author") field = "author";
  else if (key == "date" || key == "article:published_time") field = "date";
  else return;
  std::string value = clean_fragment(decode_utf8(content->second));
  if (!value.empty() && !meta.contains(field)) meta.emplace(field, std::move(value));
}

std::string render(const std::u32string& s, bool html, std::map<std::string, std::string>* meta) {
  TextBuilder out(!html);
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const char32_t c = s[i];
    if (html && c == U'<' && i + 1 < n &&
        (is_ascii_alpha(s[i + 1]) || s[i + 1] == U'/' || s[i + 1] == U'!' || s[i + 1] == U'?')) {
      if (starts_with_ci(s, i, U"<!--")) {
        const std::size_t end = s.find(U"-->", i + 4);
        i = end == std::u32string::npos ? n : end + 3;
        continue;
      }
      std::size_t j = i + 1;
      const bool closing = s[j] == U'/';
      if (closing) ++j;
      std::u32string name;
      while (j < n && (is_ascii_alpha(s[j]) || (s[j] >= U'0' && s[j] <= U'9') || s[j] == U'-' ||
                       s[j] == U':')) {
        name.push_back(ascii_lower(s[j++]));
      }
      const std::size_t attr_begin = j;
      char32_t quote = 0;
      while (j < n) {
        if (quote) {
          if (s[j] == quote) quote = 0;
        } else if (s[j] == U'"' || s[j] == U'\'') {
          quote = s[j];
        } else if (s[j] == U'>') {
          break;
        }
        ++j;
      }
      const std::u32string_view attrs(s.data() + attr_begin, (j < n ? j : n) - attr_begin);
      i = j < n ? j + 1 : n;
      const std::string tag = encode_utf8(name);

      if (!closing && contains(kSkipContentTags, tag) && !attrs.ends_with(U"/")) {
        const std::u32string close = U"</" + name;
        const std::size_t end = find_ci(s, i, close);
        const std::size_t content_end = end == std::u32string::npos ? n : end;
        if (tag == "title" && meta && !meta->contains("title")) {
          std::string title =
              clean_fragment(std::u32string_view(s.data() + i, content_end - i));
          if (!title.empty()) meta->emplace("title", std::move(title));
        }
        if (end == std::u32string::npos) {
          i = n;
        } else {
          const std::size_t gt = s.find(U'>', end);
          i = gt == std::u32string::npos ? n : gt + 1;
        }
        continue;
      }
      if (tag == "meta" && meta) capture_meta(parse_attributes(attrs), *meta);
      if (contains(kBlockTags, tag)) out.block_break();
      else if (contains(kCellTags, tag)) out.space();
      continue;
    }
    if (c == U'&') {
      char32_t decoded;
      if (const std::size_t used = decode_entity(s, i, decoded)) {
        out.put(decoded == U'\n' && html ? U' ' : decoded);
        i += used;
        continue;
      }
    }
    out.put(c);
    ++i;
  }
  return out.take();
}

}  // namespace

bool has_markup(std::string_view text) {
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != '<') continue;
    const unsigned char next = static_cast<unsigned char>(text[i + 1]);
    if (std::isalpha(next) || next == '/' || next == '!') return true;
  }
  return false;
}

Extracted extract_text(std::string_view raw_html) {
  Extracted result;
  std::string text = render(decode_utf8(raw_html), has_markup(raw_html), &result.metadata);
  // Decoded entities can expose new markup or entities; iterate to the fixed
  // point. Every changing pass strictly shortens the text.
  for (int pass = 0; pass < 64; ++pass) {
    std::string next = render(decode_utf8(text), has_markup(text), nullptr);
    if (next == text) break;
    text = std::move(next);
  }
  result.text = std::move(text);
  return result;
}

namespace {

bool is_html_path(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".html" || ext == ".htm";
}

}  // namespace

LoadResult load_corpus(const fs::path& root, SourceKind kind,
                       std::optional<std::string> lang_hint, unsigned jobs) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw std::runtime_error("corpus root does not exist: " + root.string());
  }
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_directory()) files.push_back(it->path());
  }
  if (ec) throw std::runtime_error("cannot list " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  std::vector<std::optional<Document>> slots(files.size());
  std::vector<std::string> failures(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    std::ifstream in(files[i], std::ios::binary);
    std::ostringstream buf;
    if (in) buf << in.rdbuf();
    if (!in || in.bad()) {
      failures[i] = "unreadable file";
      return;
    }
    const std::string raw = buf.str();
    Document doc;
    doc.uri = files[i].generic_string();
    doc.id = hex64(fnv1a64(raw, fnv1a64(doc.uri + '\0')));
    doc.source_kind = kind;
    doc.lang_hint = lang_hint;
    Extracted ex = extract_text(raw);
    doc.text = std::move(ex.text);
    if (is_html_path(files[i])) doc.metadata = std::move(ex.metadata);
    slots[i] = std::move(doc);
  });

  LoadResult result;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (slots[i]) result.documents.push_back(std::move(*slots[i]));
    else result.errors.push_back({files[i], failures[i]});
  }
  return result;
}

nlohmann::json to_json(const Document& doc) {
  nlohmann::json j;
  j["id"] = doc.id;
  j["uri"] = doc.uri;
  j["source_kind"] = to_string(doc.source_kind);
  j["lang_hint"] = doc.lang_hint ? nlohmann::json(*doc.lang_hint) : nlohmann::json(nullptr);
  j["text"] = doc.text;
  j["metadata"] = doc.metadata;
  return j;
}

Document document_from_json(const nlohmann::json& j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.uri = j.at("uri").get<std::string>();
  doc.source_kind = parse_source_kind(j.at("source_kind").get<std::string>());
  if (j.contains("lang_hint") && !j["lang_hint"].is_null()) {
    doc.lang_hint = j["lang_hint"].get<std::string>();
  }
  doc.text = j.at("text").get<std::string>();
  if (j.contains("metadata")) {
    doc.metadata = j["metadata"].get<std::map<std::string, std::string>>();
  }
  return doc;
}

void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

std::vector<Document> read_documents(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    docs.push_back(document_from_json(nlohmann::json::parse(line)));
  }
  return docs;
}

}  // namespace corpusforge
