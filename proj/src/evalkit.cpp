#include "corpusforge/evalkit.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <istream>
#include <random>
#include <set>
#include <sstream>

#include "corpusforge/text_util.hpp"

namespace corpusforge::eval {

namespace {

constexpr std::array<LikertLevel, 5> kLevels = {{
    {0, "Wrong translation"},
    {1, "Major problem"},
    {2, "Minor problem"},
    {3, "Good translation"},
    {4, "Accurate and fluent"},
}};

}  // namespace

std::span<const LikertLevel> likert_levels() { return kLevels; }

std::string_view to_string(Granularity g) {
  return g == Granularity::story ? "story" : "sentence";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "sentence") return Granularity::sentence;
  if (name == "story") return Granularity::story;
  throw std::invalid_argument("granularity must be 'sentence' or 'story', got '" +
                              std::string(name) + "'");
}

const BlindItem* BlindSession::find_item(std::string_view item_id) const {
  const auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const BlindItem& b) { return b.item_id == item_id; });
  return it == items_.end() ? nullptr : &*it;
}

const std::vector<std::size_t>& BlindSession::permutation(std::string_view item_id) const {
  const auto it = permutations_.find(item_id);
  if (it == permutations_.end()) {
    throw std::out_of_range("session " + session_id_ + " has no item '" + std::string(item_id) + "'");
  }
  return it->second;
}

std::vector<std::size_t> shuffle_permutation(std::uint64_t seed, std::string_view item_id,
                                             std::size_t k) {
  std::mt19937_64 rng(splitmix64(seed ^ fnv1a64(item_id)));
  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  // Fisher-Yates with rejection sampling, so the result only depends on the
  // (fully specified) mt19937_64 output stream.
  for (std::size_t i = k; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(perm[i - 1], perm[r % bound]);
  }
  return perm;
}

BlindSession create_session(std::span<const EvalItem> items, const std::string& evaluator_id,
                            std::uint64_t seed) {
  if (items.empty()) throw ValidationError("cannot create a session without items");
  BlindSession session;
  session.evaluator_id_ = evaluator_id;
  session.seed_ = seed;
  session.session_id_ = "s-" + hex64(fnv1a64(evaluator_id, splitmix64(seed)));
  for (const auto& item : items) {
    if (item.outputs.size() < 2) {
      throw ValidationError("item '" + item.item_id + "' has fewer than 2 outputs");
    }
    std::set<std::string> systems;
    for (const auto& o : item.outputs) {
      if (!systems.insert(o.system_id).second) {
        throw ValidationError("item '" + item.item_id + "' repeats system '" + o.system_id + "'");
      }
    }
    auto perm = shuffle_permutation(seed, item.item_id, item.outputs.size());
    BlindItem blind{item.item_id, item.direction, item.granularity, item.genre, item.source_text, {}};
    for (std::size_t p = 0; p < perm.size(); ++p) {
      blind.outputs.push_back({p, item.outputs[perm[p]].text});
    }
    if (!session.permutations_.emplace(item.item_id, std::move(perm)).second) {
      throw ValidationError("duplicate item id '" + item.item_id + "'");
    }
    session.items_.push_back(std::move(blind));
  }
  return session;
}

nlohmann::json blind_payload(const BlindItem& item, const std::string& session_id) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& o : item.outputs) outputs.push_back({{"position", o.position}, {"text", o.text}});
  return {{"session_id", session_id},
          {"item_id", item.item_id},
          {"direction", {{"src", item.direction.src_lang}, {"tgt", item.direction.tgt_lang}}},
          {"granularity", to_string(item.granularity)},
          {"genre", item.genre},
          {"source_text", item.source_text},
          {"outputs", std::move(outputs)}};
}

nlohmann::json blind_payload(const BlindSession& session) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : session.items()) items.push_back(blind_payload(item, session.session_id()));
  return {{"session_id", session.session_id()},
          {"evaluator_id", session.evaluator_id()},
          {"items", std::move(items)}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void validate_score(const BlindSession& session, const ScoreRecord& rec) {
  if (rec.value < kMinLikert || rec.value > kMaxLikert) throw ValidationError("invalid Likert value");
  if (!rec.session_id.empty() && rec.session_id != session.session_id()) {
    throw ValidationError("score belongs to session '" + rec.session_id + "'");
  }
  if (rec.evaluator_id != session.evaluator_id()) {
    throw ValidationError("evaluator '" + rec.evaluator_id + "' does not own this session");
  }
  const BlindItem* item = session.find_item(rec.item_id);
  if (!item) throw ValidationError("unknown item '" + rec.item_id + "'");
  if (rec.position >= item->outputs.size()) {
    throw ValidationError("position " + std::to_string(rec.position) + " out of range for item '" +
                          rec.item_id + "'");
  }
}

ScoreStore::ScoreStore(const ScoreStore& other) {
  std::lock_guard lock(other.mutex_);
  scores_ = other.scores_;
  audit_ = other.audit_;
}

ScoreStore& ScoreStore::operator=(const ScoreStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  scores_ = other.scores_;
  audit_ = other.audit_;
  return *this;
}

void ScoreStore::record(const BlindSession& session, const ScoreRecord& rec) {
  validate_score(session, rec);
  ScoreRecord stored = rec;
  stored.session_id = session.session_id();
  std::lock_guard lock(mutex_);
  scores_[{stored.evaluator_id, stored.item_id, stored.position}] = stored;
  audit_.push_back(std::move(stored));
}

void ScoreStore::restore(const ScoreRecord& rec) {
  std::lock_guard lock(mutex_);
  scores_[{rec.evaluator_id, rec.item_id, rec.position}] = rec;
}

std::vector<ScoreRecord> ScoreStore::scores() const {
  std::lock_guard lock(mutex_);
  std::vector<ScoreRecord> out;
  out.reserve(scores_.size());
  for (const auto& [key, rec] : scores_) out.push_back(rec);
  return out;
}

std::vector<ScoreRecord> ScoreStore::audit_log() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

std::optional<int> ScoreStore::value(const std::string& evaluator, const std::string& item,
                                     std::size_t position) const {
  std::lock_guard lock(mutex_);
  const auto it = scores_.find({evaluator, item, position});
  if (it == scores_.end()) return std::nullopt;
  return it->second.value;
}

std::size_t ScoreStore::size() const {
  std::lock_guard lock(mutex_);
  return scores_.size();
}

std::optional<std::string> unblind(const ScoreRecord& rec, const BlindSession& session,
                                   std::span<const EvalItem> items) {
  const auto item = std::find_if(items.begin(), items.end(),
                                 [&](const EvalItem& i) { return i.item_id == rec.item_id; });
  if (item == items.end() || !session.find_item(rec.item_id)) return std::nullopt;
  const auto& perm = session.permutation(rec.item_id);
  if (rec.position >= perm.size() || perm[rec.position] >= item->outputs.size()) return std::nullopt;
  return item->outputs[perm[rec.position]].system_id;
}

Report unblind_and_aggregate(std::span<const ScoreRecord> scores,
                             std::span<const BlindSession> sessions,
                             std::span<const EvalItem> items) {
  std::map<std::string_view, const BlindSession*> by_id;
  for (const auto& s : sessions) by_id.emplace(s.session_id(), &s);
  std::map<std::string_view, const EvalItem*> item_by_id;
  for (const auto& i : items) item_by_id.emplace(i.item_id, &i);

  using CellKey = std::tuple<Direction, Granularity, std::string>;
  std::map<CellKey, std::vector<double>> values;
  Report report;
  for (const auto& rec : scores) {
    const auto s = by_id.find(rec.session_id);
    if (s == by_id.end()) {
      ++report.missing_session;
      continue;
    }
    const auto system = unblind(rec, *s->second, items);
    if (!system) {
      ++report.unmapped;
      continue;
    }
    const EvalItem& item = *item_by_id.at(rec.item_id);
    values[{item.direction, item.granularity, *system}].push_back(rec.value);
  }

  for (auto& [key, v] : values) {
    ReportCell cell;
    cell.direction = std::get<0>(key);
    cell.granularity = std::get<1>(key);
    cell.system_id = std::get<2>(key);
    cell.n = v.size();
    double sum = 0.0;
    for (double x : v) sum += x;
    cell.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
    cell.std = std::sqrt(ss / static_cast<double>(v.size()));
    report.cells.push_back(std::move(cell));
  }
  std::sort(report.cells.begin(), report.cells.end(), [](const ReportCell& a, const ReportCell& b) {
    if (a.direction != b.direction) return a.direction < b.direction;
    if (a.granularity != b.granularity) return a.granularity < b.granularity;
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.system_id < b.system_id;
  });
  return report;
}

std::string format_cell(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, std);
  return buf;
}

namespace {

void pad_to(std::string& s, std::size_t width) {
  const std::size_t n = codepoint_count(s);
  if (n < width) s.append(width - n, ' ');
}

}  // namespace

std::string render_report(const Report& report, std::optional<Granularity> granularity,
                          bool normalized) {
  const double scale = normalized ? 1.0 / kMaxLikert : 1.0;
  struct Row {
    Direction direction;
    std::string system;
    std::optional<ReportCell> sentence, story;
  };
  std::vector<Row> rows;
  for (const auto& cell : report.cells) {
    if (granularity && cell.granularity != *granularity) continue;
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Row& r) {
      return r.direction == cell.direction && r.system == cell.system_id;
    });
    if (it == rows.end()) {
      rows.push_back({cell.direction, cell.system_id, {}, {}});
      it = rows.end() - 1;
    }
    (cell.granularity == Granularity::sentence ? it->sentence : it->story) = cell;
  }
  const auto primary_mean = [](const Row& r) { return r.sentence ? r.sentence->mean : r.story->mean; };
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.direction != b.direction) return a.direction < b.direction;
    if (primary_mean(a) != primary_mean(b)) return primary_mean(a) > primary_mean(b);
    return a.system < b.system;
  });

  std::vector<std::string> columns;
  if (!granularity || *granularity == Granularity::sentence) columns.push_back("Sentence");
  if (!granularity || *granularity == Granularity::story) columns.push_back("Story");

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Direction", "System"};
  header.insert(header.end(), columns.begin(), columns.end());
  header.push_back("n");
  table.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.direction.label(), r.system};
    std::size_t n = 0;
    for (const auto& c : columns) {
      const auto& cell = c == "Sentence" ? r.sentence : r.story;
      line.push_back(cell ? format_cell(cell->mean * scale, cell->std * scale) : "-");
      if (cell) n += cell->n;
    }
    line.push_back(std::to_string(n));
    table.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t k = 0; k < line.size(); ++k) widths[k] = std::max(widths[k], codepoint_count(line[k]));
  }

  std::ostringstream out;
  out << "# mean ± population std (divide by n), "
      << (normalized ? "normalized scale 0-1 (raw / 4)" : "raw scale 0-4") << '\n';
  for (const auto& line : table) {
    std::string text;
    for (std::size_t k = 0; k < line.size(); ++k) {
      std::string cell = line[k];
      if (k + 1 < line.size()) pad_to(cell, widths[k] + 2);
      text += cell;
    }
    out << text << '\n';
  }
  if (report.missing_session || report.unmapped) {
    out << "# excluded: " << report.missing_session << " without session, " << report.unmapped
        << " not unblindable\n";
  }
  return out.str();
}

nlohmann::json to_json(const EvalItem& item) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& o : item.outputs) outputs.push_back({{"system_id", o.system_id}, {"text", o.text}});
  return {{"item_id", item.item_id},
          {"direction", {{"src", item.direction.src_lang}, {"tgt", item.direction.tgt_lang}}},
          {"granularity", to_string(item.granularity)},
          {"genre", item.genre},
          {"source_text", item.source_text},
          {"outputs", std::move(outputs)}};
}

EvalItem item_from_json(const nlohmann::json& j) {
  EvalItem item;
  item.item_id = j.at("item_id").get<std::string>();
  item.direction = {j.at("direction").at("src").get<std::string>(),
                    j.at("direction").at("tgt").get<std::string>()};
  item.granularity = parse_granularity(j.at("granularity").get<std::string>());
  item.genre = j.value("genre", "");
  item.source_text = j.at("source_text").get<std::string>();
  for (const auto& o : j.at("outputs")) {
    item.outputs.push_back({o.at("system_id").get<std::string>(), o.at("text").get<std::string>()});
  }
  return item;
}

nlohmann::json to_json(const BlindSession& session) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : session.items()) {
    auto j = blind_payload(item, session.session_id());
    j.erase("session_id");
    j["permutation"] = session.permutation(item.item_id);
    items.push_back(std::move(j));
  }
  return {{"session_id", session.session_id()},
          {"evaluator_id", session.evaluator_id()},
          {"seed", session.seed()},
          {"items", std::move(items)}};
}

BlindSession session_from_json(const nlohmann::json& j) {
  BlindSession s;
  s.session_id_ = j.at("session_id").get<std::string>();
  s.evaluator_id_ = j.at("evaluator_id").get<std::string>();
  s.seed_ = j.at("seed").get<std::uint64_t>();
  for (const auto& ij : j.at("items")) {
    BlindItem item;
    item.item_id = ij.at("item_id").get<std::string>();
    item.direction = {ij.at("direction").at("src").get<std::string>(),
                      ij.at("direction").at("tgt").get<std::string>()};
    item.granularity = parse_granularity(ij.at("granularity").get<std::string>());
    item.genre = ij.value("genre", "");
    item.source_text = ij.at("source_text").get<std::string>();
    for (const auto& o : ij.at("outputs")) {
      item.outputs.push_back({o.at("position").get<std::size_t>(), o.at("text").get<std::string>()});
    }
    s.permutations_[item.item_id] = ij.at("permutation").get<std::vector<std::size_t>>();
    s.items_.push_back(std::move(item));
  }
  return s;
}

nlohmann::json to_json(const ScoreRecord& rec) {
  return {{"session_id", rec.session_id}, {"evaluator_id", rec.evaluator_id},
          {"item_id", rec.item_id},       {"position", rec.position},
          {"value", rec.value},           {"timestamp", rec.timestamp}};
}

ScoreRecord score_from_json(const nlohmann::json& j) {
  ScoreRecord rec;
  rec.session_id = j.value("session_id", "");
  rec.evaluator_id = j.at("evaluator_id").get<std::string>();
  rec.item_id = j.at("item_id").get<std::string>();
  rec.position = j.at("position").get<std::size_t>();
  rec.value = j.at("value").get<int>();
  rec.timestamp = j.value("timestamp", "");
  return rec;
}

nlohmann::json to_json(const ReportCell& cell) {
  return {{"direction", {{"src", cell.direction.src_lang}, {"tgt", cell.direction.tgt_lang}}},
          {"system_id", cell.system_id},
          {"granularity", to_string(cell.granularity)},
          {"mean", cell.mean},
          {"std", cell.std},
          {"n", cell.n},
          {"cell", format_cell(cell.mean, cell.std)}};
}

namespace {

constexpr std::string_view kArchiveFormat = "corpusforge-eval-archive";
constexpr std::array<std::string_view, 3> kSections = {"items", "sessions", "scores"};

}  // namespace

std::string export_dataset(const Dataset& data) {
  std::ostringstream out;
  const nlohmann::json manifest = {{"format", kArchiveFormat},
                                   {"version", kArchiveVersion},
                                   {"counts",
                                    {{"items", data.items.size()},
                                     {"sessions", data.sessions.size()},
                                     {"scores", data.scores.size()}}}};
  out << manifest.dump() << '\n';
  for (const auto& i : data.items) out << nlohmann::json{{"section", "items"}, {"record", to_json(i)}}.dump() << '\n';
  for (const auto& s : data.sessions) out << nlohmann::json{{"section", "sessions"}, {"record", to_json(s)}}.dump() << '\n';
  for (const auto& r : data.scores) out << nlohmann::json{{"section", "scores"}, {"record", to_json(r)}}.dump() << '\n';
  return out.str();
}

Dataset import_dataset(std::string_view archive) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < archive.size()) {
    const auto nl = archive.find('\n', pos);
    const auto end = nl == std::string_view::npos ? archive.size() : nl;
    if (end > pos) lines.push_back(archive.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.empty()) throw std::runtime_error("truncated archive: missing section 'manifest'");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(lines[0]);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("malformed archive: manifest is not valid JSON");
  }
  if (manifest.value("format", "") != kArchiveFormat) {
    throw std::runtime_error("malformed archive: unknown format");
  }
  const int version = manifest.value("version", -1);
  if (version != kArchiveVersion) {
    throw std::runtime_error("unsupported version " + std::to_string(version) + " (expected " +
                             std::to_string(kArchiveVersion) + ")");
  }

  Dataset data;
  std::size_t line = 1;
  for (std::string_view section : kSections) {
    const auto expected = manifest.at("counts").at(std::string(section)).get<std::size_t>();
    for (std::size_t k = 0; k < expected; ++k, ++line) {
      if (line >= lines.size()) {
        throw std::runtime_error("truncated archive: missing section '" + std::string(section) +
                                 "' (expected " + std::to_string(expected) + " records, found " +
                                 std::to_string(k) + ")");
      }
      const auto rec = nlohmann::json::parse(lines[line]);
      if (rec.value("section", "") != section) {
        throw std::runtime_error("truncated archive: missing section '" + std::string(section) +
                                 "' at line " + std::to_string(line + 1));
      }
      const auto& body = rec.at("record");
      if (section == "items") data.items.push_back(item_from_json(body));
      else if (section == "sessions") data.sessions.push_back(session_from_json(body));
      else data.scores.push_back(score_from_json(body));
    }
  }
  if (line != lines.size()) throw std::runtime_error("malformed archive: trailing records");
  return data;
}

std::vector<EvalItem> read_items(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    items.push_back(item_from_json(nlohmann::json::parse(line)));
  }
  return items;
}

}  // namespace corpusforge::eval
