#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace corpusforge::eval {

/// Likert levels, 0 (wrong translation) to 4 (accurate and fluent).
inline constexpr int kMinLikert = 0;
inline constexpr int kMaxLikert = 4;

struct LikertLevel {
  int value;
  std::string_view label;
};

/// Labels of the five scoring levels, in value order.
std::span<const LikertLevel> likert_levels();

enum class Granularity { sentence, story };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view name);

struct Direction {
  std::string src_lang;
  std::string tgt_lang;

  std::string label() const { return src_lang + "->" + tgt_lang; }
  friend auto operator<=>(const Direction&, const Direction&) = default;
};

struct SystemOutput {
  std::string system_id;
  std::string text;

  friend bool operator==(const SystemOutput&, const SystemOutput&) = default;
};

struct EvalItem {
  std::string item_id;
  Direction direction;
  Granularity granularity = Granularity::sentence;
  std::string genre;
  std::string source_text;
  std::vector<SystemOutput> outputs;

  friend bool operator==(const EvalItem&, const EvalItem&) = default;
};

struct BlindOutput {
  std::size_t position;
  std::string text;

  friend bool operator==(const BlindOutput&, const BlindOutput&) = default;
};

/// What an evaluator sees: outputs in shuffled order, identified only by
/// position.
struct BlindItem {
  std::string item_id;
  Direction direction;
  Granularity granularity = Granularity::sentence;
  std::string genre;
  std::string source_text;
  std::vector<BlindOutput> outputs;

  friend bool operator==(const BlindItem&, const BlindItem&) = default;
};

/// Rejected score submissions and malformed sessions.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class BlindSession {
 public:
  BlindSession() = default;

  const std::string& session_id() const { return session_id_; }
  const std::string& evaluator_id() const { return evaluator_id_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<BlindItem>& items() const { return items_; }

  const BlindItem* find_item(std::string_view item_id) const;

  /// permutation(item)[position] is the index into EvalItem::outputs shown
  /// at that position.
  const std::vector<std::size_t>& permutation(std::string_view item_id) const;

  friend bool operator==(const BlindSession&, const BlindSession&) = default;

 private:
  friend BlindSession create_session(std::span<const EvalItem>, const std::string&, std::uint64_t);
  friend BlindSession session_from_json(const nlohmann::json&);

  std::string session_id_;
  std::string evaluator_id_;
  std::uint64_t seed_ = 0;
  std::vector<BlindItem> items_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> permutations_;
};

/// Deterministic permutation of k outputs keyed by (seed, item_id).
std::vector<std::size_t> shuffle_permutation(std::uint64_t seed, std::string_view item_id,
                                             std::size_t k);

/// Throws ValidationError for empty input, an item with fewer than two
/// outputs, duplicate system ids, or duplicate item ids.
BlindSession create_session(std::span<const EvalItem> items, const std::string& evaluator_id,
                            std::uint64_t seed);

/// Client-visible serialization: no permutation, no system ids.
nlohmann::json blind_payload(const BlindItem& item, const std::string& session_id);
nlohmann::json blind_payload(const BlindSession& session);

struct ScoreRecord {
  std::string session_id;
  std::string evaluator_id;
  std::string item_id;
  std::size_t position = 0;
  int value = 0;
  std::string timestamp;  // ISO-8601 UTC

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

std::string utc_timestamp();

/// Throws ValidationError("invalid Likert value") and friends.
void validate_score(const BlindSession& session, const ScoreRecord& rec);

/// Thread-safe score storage, last write wins per (evaluator, item,
/// position). Every accepted submission is appended to the audit log.
class ScoreStore {
 public:
  ScoreStore() = default;
  ScoreStore(const ScoreStore& other);
  ScoreStore& operator=(const ScoreStore& other);

  void record(const BlindSession& session, const ScoreRecord& rec);
  /// Inserts without validation (used when restoring an archive).
  void restore(const ScoreRecord& rec);

  std::vector<ScoreRecord> scores() const;
  std::vector<ScoreRecord> audit_log() const;
  std::optional<int> value(const std::string& evaluator, const std::string& item,
                           std::size_t position) const;
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::size_t>;
  mutable std::mutex mutex_;
  std::map<Key, ScoreRecord> scores_;
  std::vector<ScoreRecord> audit_;
};

struct ReportCell {
  Direction direction;
  std::string system_id;
  Granularity granularity = Granularity::sentence;
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
  std::size_t n = 0;
};

struct Report {
  std::vector<ReportCell> cells;
  std::size_t missing_session = 0;
  std::size_t unmapped = 0;  // unknown item or position after unblinding
};

/// Maps every score through its session's permutation to a system, then
/// reports per (direction, system, granularity) mean and population std on
/// the raw 0-4 scale. Cells are ordered by direction, granularity, then
/// descending mean (ties by system id).
Report unblind_and_aggregate(std::span<const ScoreRecord> scores,
                             std::span<const BlindSession> sessions,
                             std::span<const EvalItem> items);

/// System id scored by `rec`, or std::nullopt when it cannot be unblinded.
std::optional<std::string> unblind(const ScoreRecord& rec, const BlindSession& session,
                                   std::span<const EvalItem> items);

/// "2.68 ± 0.41"
std::string format_cell(double mean, double std);

/// Plain-text table in the "mean ± std" style. With no granularity, both
/// sentence and story columns are shown. `normalized` divides by 4.
std::string render_report(const Report& report, std::optional<Granularity> granularity,
                          bool normalized);

nlohmann::json to_json(const EvalItem& item);
EvalItem item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BlindSession& session);  // server side, includes permutations
BlindSession session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoreRecord& rec);
ScoreRecord score_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReportCell& cell);

struct Dataset {
  std::vector<EvalItem> items;
  std::vector<BlindSession> sessions;
  std::vector<ScoreRecord> scores;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr int kArchiveVersion = 1;

/// Line-delimited archive: a manifest record with the format version and
/// per-section counts, then the items, sessions and scores sections.
std::string export_dataset(const Dataset& data);
/// Throws std::runtime_error on a version mismatch ("unsupported version")
/// or a truncated archive (naming the missing section).
Dataset import_dataset(std::string_view archive);

std::vector<EvalItem> read_items(std::istream& in);

}  // namespace corpusforge::eval
