#include "corpusforge/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "corpusforge/augment.hpp"
#include "corpusforge/eval_service.hpp"
#include "corpusforge/langid.hpp"
#include "corpusforge/lexmodel.hpp"
#include "corpusforge/text_util.hpp"
#include "corpusforge/textprep.hpp"

namespace corpusforge {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

#ifdef CORPUSFORGE_DATA_DIR
const fs::path kBundledProfiles = fs::path(CORPUSFORGE_DATA_DIR) / "profiles";
#else
const fs::path kBundledProfiles = "profiles";
#endif

// Every recognised key with its default; the order fixes the canonical form.
const std::vector<std::pair<std::string, std::string>> kKeys = {
    {"paths.src_root", ""},
    {"paths.tgt_root", ""},
    {"paths.mono_root", ""},
    {"paths.seed", ""},
    {"paths.output", "out"},
    {"languages.src", "am"},
    {"languages.tgt", "en"},
    {"ingest.src_kind", "plain"},
    {"ingest.tgt_kind", "plain"},
    {"ingest.mono_kind", "plain"},
    {"textprep.dedup_threshold", "0.8"},
    {"textprep.profiles", ""},
    {"textprep.lang_filter", "true"},
    {"lexmodel.iterations", "10"},
    {"lexmodel.floor", "1e-9"},
    {"filter.weight", "0.5"},
    {"filter.threshold", "0.5"},
    {"filter.window", "5"},
    {"filter.ratio_lo", "0.5"},
    {"filter.ratio_hi", "2.0"},
    {"augment.cap_ratio", "1.0"},
    {"augment.rounds", "1"},
    {"augment.translator", "naive"},
    {"augment.command", ""},
    {"eval.bind", "127.0.0.1:8080"},
    {"eval.data_dir", ""},
    {"eval.items", ""},
    {"eval.seed", "1"},
};

const std::set<std::string, std::less<>> kLanguages = {"am", "ti", "en"};

class Settings {
 public:
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double number(const std::string& key) const {
    const auto& v = str(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }

  std::int64_t integer(const std::string& key) const {
    const auto& v = str(key);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(key, "expected an integer, got '" + v + "'");
    }
    return out;
  }

  bool boolean(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
  }

  SourceKind kind(const std::string& key) const {
    try {
      return parse_source_kind(str(key));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  }

  std::string language(const std::string& key) const {
    const auto& v = str(key);
    if (!kLanguages.contains(v)) throw ConfigError(key, "language must be one of am, ti, en; got '" + v + "'");
    return v;
  }

 private:
  std::map<std::string, std::string> values_;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

}  // namespace

PipelineConfig load_config(const fs::path& path, std::span<const std::string> overrides) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", e.what());
  }

  std::map<std::string, std::string> values(kKeys.begin(), kKeys.end());
  const auto assign = [&](const std::string& key, const std::string& value) {
    if (!values.contains(key)) throw ConfigError(key, "unknown setting");
    values[key] = std::string(trim(value));
  };
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section, "setting outside of a section");
    for (const auto& [key, leaf] : body) assign(section + "." + key, leaf.data());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || o.find('.') > eq) {
      throw ConfigError(o.substr(0, eq), "override must look like section.key=value");
    }
    assign(o.substr(0, eq), o.substr(eq + 1));
  }

  const fs::path base = fs::absolute(path).parent_path();
  const Settings s(values);
  PipelineConfig cfg;
  cfg.config_path = fs::absolute(path);

  const auto required_path = [&](const std::string& key, bool must_exist) {
    if (s.str(key).empty()) throw ConfigError(key, "required");
    fs::path p = resolve(base, s.str(key));
    if (must_exist && !fs::exists(p)) throw ConfigError(key, "path does not exist: " + p.string());
    return p;
  };
  cfg.paths.src_root = required_path("paths.src_root", true);
  cfg.paths.tgt_root = required_path("paths.tgt_root", true);
  cfg.paths.seed = required_path("paths.seed", true);
  cfg.paths.output = required_path("paths.output", false);
  cfg.paths.mono_root = resolve(base, s.str("paths.mono_root"));
  if (!cfg.paths.mono_root.empty() && !fs::exists(cfg.paths.mono_root)) {
    throw ConfigError("paths.mono_root", "path does not exist: " + cfg.paths.mono_root.string());
  }

  cfg.src_lang = s.language("languages.src");
  cfg.tgt_lang = s.language("languages.tgt");
  if (cfg.src_lang == cfg.tgt_lang) throw ConfigError("languages.tgt", "must differ from languages.src");
  cfg.src_kind = s.kind("ingest.src_kind");
  cfg.tgt_kind = s.kind("ingest.tgt_kind");
  cfg.mono_kind = s.kind("ingest.mono_kind");

  cfg.dedup_threshold = s.number("textprep.dedup_threshold");
  if (!(cfg.dedup_threshold > 0.0 && cfg.dedup_threshold <= 1.0)) {
    throw ConfigError("textprep.dedup_threshold", "must be in (0, 1]");
  }
  cfg.profiles = s.str("textprep.profiles").empty() ? kBundledProfiles
                                                    : resolve(base, s.str("textprep.profiles"));
  if (!fs::is_directory(cfg.profiles)) {
    throw ConfigError("textprep.profiles", "not a directory: " + cfg.profiles.string());
  }
  cfg.lang_filter = s.boolean("textprep.lang_filter");

  const auto iterations = s.integer("lexmodel.iterations");
  if (iterations < 1 || iterations > 1000) throw ConfigError("lexmodel.iterations", "must be in [1, 1000]");
  cfg.iterations = static_cast<int>(iterations);
  cfg.floor = s.number("lexmodel.floor");
  if (!(cfg.floor > 0.0 && cfg.floor <= 1.0)) throw ConfigError("lexmodel.floor", "must be in (0, 1]");

  cfg.filter.weight = s.number("filter.weight");
  cfg.filter.threshold = s.number("filter.threshold");
  const auto window = s.integer("filter.window");
  if (window < 0) throw ConfigError("filter.window", "must be non-negative");
  cfg.filter.window = static_cast<std::size_t>(window);
  cfg.filter.ratio_lo = s.number("filter.ratio_lo");
  cfg.filter.ratio_hi = s.number("filter.ratio_hi");
  try {
    cfg.filter.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg.substr(msg.find(' ') + 1));
  }

  cfg.cap_ratio = s.number("augment.cap_ratio");
  if (!(cfg.cap_ratio > 0.0)) throw ConfigError("augment.cap_ratio", "must be positive");
  const auto rounds = s.integer("augment.rounds");
  if (rounds < 1 || rounds > 100) throw ConfigError("augment.rounds", "must be in [1, 100]");
  cfg.rounds = static_cast<int>(rounds);
  cfg.translator = s.str("augment.translator");
  if (cfg.translator != "naive" && cfg.translator != "command") {
    throw ConfigError("augment.translator", "must be 'naive' or 'command'");
  }
  cfg.command = s.str("augment.command");
  if (cfg.translator == "command" && cfg.command.empty()) {
    throw ConfigError("augment.command", "required when augment.translator = command");
  }

  cfg.eval_bind = s.str("eval.bind");
  try {
    eval::parse_bind_address(cfg.eval_bind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("eval.bind", e.what());
  }
  cfg.eval_data = s.str("eval.data_dir").empty() ? cfg.paths.output / "eval"
                                                 : resolve(base, s.str("eval.data_dir"));
  cfg.eval_items = resolve(base, s.str("eval.items"));
  if (!cfg.eval_items.empty() && !fs::exists(cfg.eval_items)) {
    throw ConfigError("eval.items", "path does not exist: " + cfg.eval_items.string());
  }
  const auto seed = s.integer("eval.seed");
  if (seed < 0) throw ConfigError("eval.seed", "must be non-negative");
  cfg.eval_seed = static_cast<std::uint64_t>(seed);

  // Resolved values, so the hash changes whenever an effective input does.
  values["paths.src_root"] = cfg.paths.src_root.generic_string();
  values["paths.tgt_root"] = cfg.paths.tgt_root.generic_string();
  values["paths.mono_root"] = cfg.paths.mono_root.generic_string();
  values["paths.seed"] = cfg.paths.seed.generic_string();
  values["paths.output"] = cfg.paths.output.generic_string();
  values["textprep.profiles"] = cfg.profiles.generic_string();
  values["eval.data_dir"] = cfg.eval_data.generic_string();
  values["eval.items"] = cfg.eval_items.generic_string();
  for (const auto& [key, value] : values) cfg.canonical += key + "=" + value + "\n";
  return cfg;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::prep: return "prep";
    case Stage::train: return "train";
    case Stage::mine: return "mine";
    case Stage::augment: return "augment";
    case Stage::eval_serve: return "eval-serve";
    case Stage::eval_report: return "eval-report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::ingest, Stage::prep, Stage::train, Stage::mine, Stage::augment,
                  Stage::eval_serve, Stage::eval_report}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hash_text(std::string_view data) { return hex64(fnv1a64(data)); }

// Output files of one stage plus the manifest that marks it complete.
class StageWriter {
 public:
  StageWriter(const PipelineConfig& cfg, Stage stage)
      : dir_(cfg.paths.output / std::string(to_string(stage))) {
    manifest_["stage"] = to_string(stage);
    manifest_["config_hash"] = hash_text(cfg.canonical);
    manifest_["inputs"] = nlohmann::json::object();
    manifest_["outputs"] = nlohmann::json::object();
    manifest_["counts"] = nlohmann::json::object();
  }

  void input(const std::string& name, std::string_view content) {
    manifest_["inputs"][name] = hash_text(content);
  }

  void output(const std::string& name, const std::string& content, std::size_t rows) {
    write_atomic(dir_ / name, content);
    manifest_["outputs"][name] = {{"hash", hash_text(content)}, {"rows", rows}};
  }

  void count(const std::string& name, std::size_t value) { manifest_["counts"][name] = value; }

  void commit() { write_atomic(dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

 private:
  fs::path dir_;
  nlohmann::json manifest_;
};

fs::path stage_dir(const PipelineConfig& cfg, Stage stage) {
  return cfg.paths.output / std::string(to_string(stage));
}

void require(const PipelineConfig& cfg, Stage stage, Stage dependency) {
  if (!fs::exists(stage_dir(cfg, dependency) / "manifest.json")) {
    throw DependencyError("stage " + std::string(to_string(stage)) + " requires output of stage " +
                          std::string(to_string(dependency)));
  }
}

// Artifact of an earlier stage, recorded by hash as an input of this one.
std::string consume(StageWriter& w, const PipelineConfig& cfg, Stage from, const std::string& name) {
  std::string content = read_file(stage_dir(cfg, from) / name);
  w.input(std::string(to_string(from)) + "/" + name, content);
  return content;
}

template <class T>
std::string render(const T& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

std::vector<SentencePair> read_seed(const fs::path& path, const PipelineConfig& cfg, std::string& raw) {
  raw = read_file(path);
  std::istringstream in(raw);
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ConfigError("paths.seed", "line " + std::to_string(line_no) + " must have exactly 2 tab-separated columns");
    }
    auto p = make_pair(line.substr(0, tab), cfg.src_lang, line.substr(tab + 1), cfg.tgt_lang, PairOrigin::seed);
    if (!p.src.text.empty() && !p.tgt.text.empty()) pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw ConfigError("paths.seed", "no sentence pairs");
  return pairs;
}

std::vector<LangProfile> load_profiles(const PipelineConfig& cfg) {
  std::vector<LangProfile> profiles;
  for (const auto& lang : kLanguages) {
    const fs::path p = cfg.profiles / (lang + ".jsonl");
    if (fs::exists(p)) profiles.push_back(load_profile(p));
  }
  for (const auto& lang : {cfg.src_lang, cfg.tgt_lang}) {
    if (std::none_of(profiles.begin(), profiles.end(), [&](const LangProfile& p) { return p.lang == lang; })) {
      throw ConfigError("textprep.profiles", "no profile for language '" + lang + "'");
    }
  }
  return profiles;
}

void run_ingest(const PipelineConfig& cfg, unsigned jobs, std::ostream& log) {
  StageWriter w(cfg, Stage::ingest);
  const auto load = [&](const std::string& side, const fs::path& root, SourceKind kind,
                        const std::string& lang) {
    LoadResult r = load_corpus(root, kind, lang, jobs);
    for (const auto& e : r.errors) log << "ingest: skipped " << e.path.generic_string() << ": " << e.message << '\n';
    std::string ids;
    for (const auto& d : r.documents) ids += d.id + "\n";
    w.input(side, ids);
    w.output(side + ".jsonl", render([&](std::ostream& o) { write_documents(o, r.documents); }),
             r.documents.size());
    w.count(side + "_errors", r.errors.size());
    log << "ingest: " << side << " " << r.documents.size() << " documents\n";
  };
  load("src", cfg.paths.src_root, cfg.src_kind, cfg.src_lang);
  load("tgt", cfg.paths.tgt_root, cfg.tgt_kind, cfg.tgt_lang);
  if (cfg.paths.mono_root.empty()) {
    w.output("mono.jsonl", "", 0);
  } else {
    load("mono", cfg.paths.mono_root, cfg.mono_kind, cfg.tgt_lang);
  }
  w.commit();
}

bool script_matches(Script script, const std::string& lang) {
  if (script == Script::mixed) return true;
  return lang == "en" ? script == Script::latin : script == Script::ethiopic;
}

struct Prepared {
  std::vector<Sentence> sentences;
  std::vector<const Document*> kept_docs;
  std::size_t dropped_docs = 0;
  std::size_t dropped_sentences = 0;
  std::size_t duplicates = 0;
};

Prepared prepare(const std::vector<Document>& docs, const std::string& lang,
                 std::span<const LangProfile> profiles, const PipelineConfig& cfg) {
  Prepared out;
  std::vector<Sentence> all;
  for (const auto& doc : docs) {
    if (trim(doc.text).empty()) {
      ++out.dropped_docs;
      continue;
    }
    if (cfg.lang_filter && detect_language(doc.text, profiles).lang != lang) {
      ++out.dropped_docs;
      continue;
    }
    out.kept_docs.push_back(&doc);
    for (auto& s : split_sentences(doc, lang)) {
      if (cfg.lang_filter && !script_matches(classify_script(s.text), lang)) {
        ++out.dropped_sentences;
        continue;
      }
      all.push_back(std::move(s));
    }
  }
  const auto exact = dedup_exact(all);
  out.sentences = dedup_near(exact, cfg.dedup_threshold);
  out.duplicates = all.size() - out.sentences.size();
  return out;
}

std::string stem_of(const Document& d) { return fs::path(d.uri).stem().string(); }

void run_prep(const PipelineConfig& cfg, std::ostream& log) {
  require(cfg, Stage::prep, Stage::ingest);
  StageWriter w(cfg, Stage::prep);
  const auto profiles = load_profiles(cfg);
  const auto docs = [&](const std::string& side) {
    std::istringstream in(consume(w, cfg, Stage::ingest, side + ".jsonl"));
    return read_documents(in);
  };
  const auto src_docs = docs("src");
  const auto tgt_docs = docs("tgt");
  const auto mono_docs = docs("mono");

  const auto emit = [&](const std::string& side, const Prepared& p) {
    w.output(side + ".tsv", render([&](std::ostream& o) { write_sentences(o, p.sentences); }),
             p.sentences.size());
    w.count(side + "_dropped_docs", p.dropped_docs);
    w.count(side + "_dropped_sentences", p.dropped_sentences);
    w.count(side + "_duplicates", p.duplicates);
    log << "prep: " << side << " " << p.sentences.size() << " sentences (" << p.duplicates
        << " duplicates, " << p.dropped_docs << " documents off-language)\n";
  };
  const Prepared src = prepare(src_docs, cfg.src_lang, profiles, cfg);
  const Prepared tgt = prepare(tgt_docs, cfg.tgt_lang, profiles, cfg);
  const Prepared mono = prepare(mono_docs, cfg.tgt_lang, profiles, cfg);
  emit("src", src);
  emit("tgt", tgt);
  emit("mono", mono);

  // Comparable documents are paired by file name without extension.
  std::map<std::string, const Document*> tgt_by_stem;
  for (const Document* d : tgt.kept_docs) tgt_by_stem.emplace(stem_of(*d), d);
  std::string pairs;
  std::size_t n_pairs = 0;
  for (const Document* d : src.kept_docs) {
    const auto it = tgt_by_stem.find(stem_of(*d));
    if (it == tgt_by_stem.end()) continue;
    pairs += d->id + "\t" + it->second->id + "\t" + it->first + "\n";
    ++n_pairs;
  }
  w.output("doc_pairs.tsv", pairs, n_pairs);
  log << "prep: " << n_pairs << " document pairs\n";
  w.commit();
}

void run_train(const PipelineConfig& cfg, std::ostream& log) {
  StageWriter w(cfg, Stage::train);
  std::string raw;
  const auto seed = read_seed(cfg.paths.seed, cfg, raw);
  w.input("seed", raw);
  nlohmann::json history = nlohmann::json::array();
  const auto train = [&](std::span<const SentencePair> pairs, const std::string& name) {
    std::vector<double> ll;
    auto r = train_model1(pairs, cfg.iterations, [&](int, const LexTable& t) {
      ll.push_back(corpus_log_likelihood(pairs, t, cfg.floor));
    });
    w.output(name, render([&](std::ostream& o) { write_lextable(o, r.table); }), r.table.entry_count());
    w.count(name + "_skipped_pairs", r.skipped_pairs);
    log << "train: " << name << " " << r.table.entry_count() << " entries, log-likelihood "
        << ll.back() << "\n";
  };
  train(seed, "fwd.lex");
  train(reversed(seed), "rev.lex");
  w.count("seed_pairs", seed.size());
  w.commit();
}

LexTable load_table(StageWriter& w, const PipelineConfig& cfg, Stage from, const std::string& name) {
  std::istringstream in(consume(w, cfg, from, name));
  return read_lextable(in);
}

std::vector<Sentence> load_sentences(StageWriter& w, const PipelineConfig& cfg, const std::string& name) {
  std::istringstream in(consume(w, cfg, Stage::prep, name));
  return read_sentences(in);
}

void run_mine(const PipelineConfig& cfg, unsigned jobs, std::ostream& log) {
  require(cfg, Stage::mine, Stage::train);
  require(cfg, Stage::mine, Stage::prep);
  StageWriter w(cfg, Stage::mine);
  const LexTable fwd = load_table(w, cfg, Stage::train, "fwd.lex");
  const LexTable rev = load_table(w, cfg, Stage::train, "rev.lex");

  std::map<std::string, std::vector<Sentence>> by_doc;
  for (auto& s : load_sentences(w, cfg, "src.tsv")) by_doc[s.doc_id].push_back(std::move(s));
  for (auto& s : load_sentences(w, cfg, "tgt.tsv")) by_doc[s.doc_id].push_back(std::move(s));

  std::vector<DocPair> doc_pairs;
  std::istringstream pairs(consume(w, cfg, Stage::prep, "doc_pairs.tsv"));
  std::string line;
  while (std::getline(pairs, line)) {
    const auto a = line.find('\t');
    const auto b = line.find('\t', a + 1);
    if (a == std::string::npos || b == std::string::npos) throw std::runtime_error("malformed doc_pairs.tsv");
    doc_pairs.push_back({by_doc[line.substr(0, a)], by_doc[line.substr(a + 1, b - a - 1)]});
  }
  const auto mined = mine_corpus(doc_pairs, fwd, rev, cfg.filter, jobs, cfg.floor);
  w.output("mined.tsv", render([&](std::ostream& o) { write_mined(o, mined); }), mined.size());
  w.count("document_pairs", doc_pairs.size());
  log << "mine: " << mined.size() << " pairs from " << doc_pairs.size() << " document pairs\n";
  w.commit();
}

void run_augment(const PipelineConfig& cfg, unsigned jobs, std::ostream& log) {
  require(cfg, Stage::augment, Stage::mine);
  require(cfg, Stage::augment, Stage::prep);
  StageWriter w(cfg, Stage::augment);
  std::istringstream mined_in(consume(w, cfg, Stage::mine, "mined.tsv"));
  const auto mined = read_mined(mined_in);
  const auto mono = load_sentences(w, cfg, "mono.tsv");
  std::string raw;
  const auto seed = read_seed(cfg.paths.seed, cfg, raw);
  w.input("seed", raw);

  std::vector<SentencePair> real;
  std::map<std::pair<std::string, std::string>, double> scores;
  for (const auto& m : mined) {
    real.push_back(m.pair);
    scores.emplace(std::pair(m.pair.src.text, m.pair.tgt.text), m.score);
  }
  real.insert(real.end(), seed.begin(), seed.end());

  // Each round retrains the reverse model on the current corpus and
  // regenerates the synthetic side from scratch.
  AugmentedCorpus corpus = merge_corpora(real, {}, cfg.cap_ratio);
  std::size_t failures = 0;
  for (int round = 1; round <= cfg.rounds; ++round) {
    const auto rev = train_model1(reversed(corpus.pairs), cfg.iterations);
    BackTranslation bt;
    if (cfg.translator == "command") {
      bt = back_translate(mono, CommandTranslator(cfg.command), cfg.src_lang, jobs);
    } else {
      bt = back_translate(mono, NaiveTranslator(rev.table), cfg.src_lang, jobs);
    }
    failures = bt.failures;
    corpus = merge_corpora(real, bt.pairs, cfg.cap_ratio);
    log << "augment: round " << round << " " << bt.pairs.size() << " synthetic, " << bt.failures
        << " failed, corpus " << corpus.pairs.size() << "\n";
  }

  std::vector<std::optional<double>> row_scores;
  for (const auto& p : corpus.pairs) {
    const auto it = p.origin == PairOrigin::mined ? scores.find({p.src.text, p.tgt.text}) : scores.end();
    row_scores.push_back(it == scores.end() ? std::nullopt : std::optional(it->second));
  }
  w.output("augmented.tsv",
           render([&](std::ostream& o) { write_augmented(o, corpus.pairs, row_scores); }),
           corpus.pairs.size());
  const auto fwd = train_model1(corpus.pairs, cfg.iterations);
  w.output("fwd.lex", render([&](std::ostream& o) { write_lextable(o, fwd.table); }), fwd.table.entry_count());
  for (const auto& [origin, n] : corpus.counts) w.count(std::string(to_string(origin)), n);
  w.count("translation_failures", failures);
  w.commit();
}

}  // namespace

bool serve_evaluation(const fs::path& data_dir, const fs::path& items, const std::string& bind,
                      std::uint64_t seed, std::ostream& log) {
  const auto [host, port] = eval::parse_bind_address(bind);
  if (!fs::exists(data_dir / "state.jsonl") && !fs::exists(data_dir / "items.jsonl")) {
    if (items.empty()) throw std::runtime_error("no evaluation items in " + data_dir.string());
    write_atomic(data_dir / "items.jsonl", read_file(items));
  }
  auto store = eval::EvalStore::open(data_dir, seed);
  eval::EvalService service(*store);
  const int bound = service.bind(host, port);
  if (bound < 0) return false;
  log << "eval-serve: listening on " << host << ":" << bound << " (data " << data_dir.string() << ")"
      << std::endl;
  return service.serve();
}

std::string evaluation_report(const fs::path& data_dir, std::optional<eval::Granularity> granularity,
                              bool normalized) {
  const auto store = eval::EvalStore::open(data_dir, 0);
  return eval::render_report(store->report(), granularity, normalized);
}

int run_stage(Stage stage, const PipelineConfig& cfg, unsigned jobs, std::ostream& log, std::ostream& err) {
  jobs = std::max(1u, jobs);
  try {
    switch (stage) {
      case Stage::ingest: run_ingest(cfg, jobs, log); break;
      case Stage::prep: run_prep(cfg, log); break;
      case Stage::train: run_train(cfg, log); break;
      case Stage::mine: run_mine(cfg, jobs, log); break;
      case Stage::augment: run_augment(cfg, jobs, log); break;
      case Stage::eval_serve:
        if (!serve_evaluation(cfg.eval_data, cfg.eval_items, cfg.eval_bind, cfg.eval_seed, log)) {
          err << "eval-serve: cannot bind " << cfg.eval_bind << "\n";
          return 3;
        }
        break;
      case Stage::eval_report: log << evaluation_report(cfg.eval_data, std::nullopt, false); break;
    }
  } catch (const DependencyError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << to_string(stage) << ": " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace corpusforge
