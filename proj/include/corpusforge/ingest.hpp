#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace corpusforge {

enum class SourceKind { web, offline_ocr, plain };

std::string_view to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view name);

/// A digitized source text. `text` is markup free; `metadata` may carry
/// `title`, `author` and `date` (ISO-8601 as found in the page).
///
/// Documents from `offline_ocr` roots are already-digitized OCR output. The
/// kind is provenance only.
struct Document {
  std::string id;
  std::string uri;
  SourceKind source_kind = SourceKind::plain;
  std::optional<std::string> lang_hint;
  std::string text;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Extracted {
  std::string text;
  std::map<std::string, std::string> metadata;
};

/// Rule-based markup stripper. Drops tags, comments and the contents of
/// script/style/title elements, decodes entities, collapses whitespace and
/// maps block boundaries (p, div, br, li, h1-h6, tr) to newlines.
///
/// The result is a fixed point: extract_text(extract_text(x).text).text ==
/// extract_text(x).text. Input with no markup is treated as plain text, so
/// line breaks survive a second pass.
Extracted extract_text(std::string_view raw_html);

/// True when `text` contains something that starts a tag (`<` followed by a
/// letter, `/` or `!`).
bool has_markup(std::string_view text);

struct LoadError {
  std::filesystem::path path;
  std::string message;
};

struct LoadResult {
  std::vector<Document> documents;
  std::vector<LoadError> errors;
};

/// Loads every regular file under `root` (recursively) in lexicographic path
/// order. Throws std::runtime_error when `root` does not exist; unreadable
/// files are reported in `errors` and skipped.
LoadResult load_corpus(const std::filesystem::path& root, SourceKind kind,
                       std::optional<std::string> lang_hint = std::nullopt,
                       unsigned jobs = 1);

nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

void write_documents(std::ostream& out, const std::vector<Document>& docs);
std::vector<Document> read_documents(std::istream& in);

}  // namespace corpusforge
