#include "corpusforge/eval_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "corpusforge/text_util.hpp"

namespace corpusforge::eval {

namespace fs = std::filesystem;

EvalStore::EvalStore(std::vector<EvalItem> items, std::uint64_t seed, fs::path data_dir)
    : items_(std::move(items)), seed_(seed), data_dir_(std::move(data_dir)) {
  if (items_.empty()) throw ValidationError("evaluation store needs at least one item");
  // Surfaces malformed items now rather than on the first evaluator visit.
  create_session(items_, "", seed_);
}

std::unique_ptr<EvalStore> EvalStore::open(const fs::path& data_dir, std::uint64_t seed) {
  const fs::path state = data_dir / "state.jsonl";
  if (fs::exists(state)) {
    std::ifstream in(state, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    Dataset data = import_dataset(buf.str());
    auto store = std::make_unique<EvalStore>(std::move(data.items), seed, data_dir);
    store->sessions_ = std::move(data.sessions);
    for (const auto& rec : data.scores) store->scores_.restore(rec);
    return store;
  }
  const fs::path items_path = data_dir / "items.jsonl";
  std::ifstream in(items_path);
  if (!in) throw std::runtime_error("cannot read " + items_path.string());
  return std::make_unique<EvalStore>(read_items(in), seed, data_dir);
}

const BlindSession& EvalStore::session_for(const std::string& evaluator) {
  for (const auto& s : sessions_) {
    if (s.evaluator_id() == evaluator) return s;
  }
  sessions_.push_back(create_session(items_, evaluator, splitmix64(seed_ ^ fnv1a64(evaluator))));
  persist_locked(nullptr);
  return sessions_.back();
}

nlohmann::json EvalStore::next(const std::string& evaluator) {
  if (evaluator.empty()) throw ValidationError("evaluator id must not be empty");
  std::lock_guard lock(mutex_);
  const BlindSession& session = session_for(evaluator);
  const BlindItem* pending = nullptr;
  std::size_t complete = 0;
  std::vector<std::size_t> unscored;
  for (const auto& item : session.items()) {
    std::vector<std::size_t> missing;
    for (const auto& o : item.outputs) {
      if (!scores_.value(evaluator, item.item_id, o.position)) missing.push_back(o.position);
    }
    if (missing.empty()) {
      ++complete;
    } else if (!pending) {
      pending = &item;
      unscored = std::move(missing);
    }
  }
  const nlohmann::json progress = {{"scored", complete}, {"total", session.items().size()}};
  if (!pending) {
    return {{"done", true}, {"session_id", session.session_id()}, {"progress", progress}};
  }
  auto payload = blind_payload(*pending, session.session_id());
  payload["done"] = false;
  payload["unscored_positions"] = unscored;
  payload["progress"] = progress;
  return payload;
}

ScoreRecord EvalStore::submit(const std::string& session_id, const std::string& item_id,
                              std::size_t position, int value) {
  std::lock_guard lock(mutex_);
  const auto session = std::find_if(sessions_.begin(), sessions_.end(),
                                    [&](const BlindSession& s) { return s.session_id() == session_id; });
  if (session == sessions_.end()) throw UnknownSession("unknown session '" + session_id + "'");
  ScoreRecord rec{session_id, session->evaluator_id(), item_id, position, value, utc_timestamp()};
  scores_.record(*session, rec);
  persist_locked(&rec);
  return rec;
}

Report EvalStore::report() const {
  std::lock_guard lock(mutex_);
  const auto scores = scores_.scores();
  return unblind_and_aggregate(scores, sessions_, items_);
}

Dataset EvalStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return {items_, sessions_, scores_.scores()};
}

std::string EvalStore::export_archive() const { return export_dataset(snapshot()); }

void EvalStore::import_archive(std::string_view archive) {
  Dataset data = import_dataset(archive);
  if (data.items.empty()) throw std::runtime_error("archive contains no items");
  ScoreStore restored;
  for (const auto& rec : data.scores) restored.restore(rec);
  std::lock_guard lock(mutex_);
  items_ = std::move(data.items);
  sessions_ = std::move(data.sessions);
  scores_ = restored;
  persist_locked(nullptr);
}

void EvalStore::persist_locked(const ScoreRecord* appended) const {
  if (data_dir_.empty()) return;
  fs::create_directories(data_dir_);
  const fs::path state = data_dir_ / "state.jsonl";
  const fs::path tmp = data_dir_ / "state.jsonl.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << export_dataset({items_, sessions_, scores_.scores()});
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, state);
  if (appended) {
    std::ofstream audit(data_dir_ / "audit.jsonl", std::ios::binary | std::ios::app);
    audit << to_json(*appended).dump() << '\n';
  }
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

EvalService::EvalService(EvalStore& store) : store_(store), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Get(R"(/api/session/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, store_.next(req.matches[1]));
    } catch (const ValidationError& e) {
      send_error(res, 422, e.what());
    }
  });

  srv.Post("/api/score", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return send_error(res, 400, "request body is not valid JSON");
    }
    for (const char* field : {"session_id", "item_id", "position", "value"}) {
      if (!body.is_object() || !body.contains(field)) {
        return send_error(res, 400, std::string("missing field '") + field + "'");
      }
    }
    if (!body["session_id"].is_string() || !body["item_id"].is_string()) {
      return send_error(res, 400, "session_id and item_id must be strings");
    }
    if (!body["position"].is_number_unsigned()) {
      return send_error(res, 422, "position must be a non-negative integer");
    }
    if (!body["value"].is_number_integer()) return send_error(res, 422, "invalid Likert value");
    const auto raw = body["value"].get<std::int64_t>();
    if (raw < kMinLikert || raw > kMaxLikert) return send_error(res, 422, "invalid Likert value");
    try {
      const auto rec = store_.submit(body["session_id"], body["item_id"],
                                     body["position"].get<std::size_t>(), static_cast<int>(raw));
      send_json(res, 200, {{"ok", true}, {"score", to_json(rec)}});
    } catch (const UnknownSession& e) {
      send_error(res, 404, e.what());
    } catch (const ValidationError& e) {
      send_error(res, 422, e.what());
    }
  });

  srv.Get("/api/report", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<Granularity> granularity;
    try {
      if (req.has_param("granularity")) granularity = parse_granularity(req.get_param_value("granularity"));
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, e.what());
    }
    const std::string norm = req.get_param_value("normalized");
    const bool normalized = norm == "1" || norm == "true";
    const Report report = store_.report();
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
      if (!granularity || c.granularity == *granularity) cells.push_back(to_json(c));
    }
    send_json(res, 200,
              {{"granularity", granularity ? nlohmann::json(to_string(*granularity)) : nlohmann::json()},
               {"normalized", normalized},
               {"cells", std::move(cells)},
               {"excluded", report.missing_session + report.unmapped},
               {"table", render_report(report, granularity, normalized)}});
  });

  srv.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(store_.export_archive(), "application/x-ndjson");
  });

  srv.Post("/api/import", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      store_.import_archive(req.body);
    } catch (const std::exception& e) {
      return send_error(res, 400, e.what());
    }
    const Dataset d = store_.snapshot();
    send_json(res, 200,
              {{"ok", true},
               {"counts", {{"items", d.items.size()}, {"sessions", d.sessions.size()}, {"scores", d.scores.size()}}}});
  });
}

EvalService::~EvalService() { stop(); }

bool EvalService::listen(const std::string& host, int port) {
  if (bind(host, port) < 0) return false;
  return serve();
}

int EvalService::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  return port_;
}

bool EvalService::serve() { return server_->listen_after_bind(); }

void EvalService::stop() {
  if (server_) server_->stop();
}

void EvalService::wait_until_ready() const { server_->wait_until_ready(); }

std::pair<std::string, int> parse_bind_address(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw std::invalid_argument("bind address must be host:port, got '" + bind + "'");
  }
  const std::string port_text = bind.substr(colon + 1);
  if (!std::all_of(port_text.begin(), port_text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw std::invalid_argument("bind port must be numeric, got '" + port_text + "'");
  }
  const int port = std::stoi(port_text);
  if (port > 65535) throw std::invalid_argument("bind port out of range: " + port_text);
  return {bind.substr(0, colon), port};
}

}  // namespace corpusforge::eval
