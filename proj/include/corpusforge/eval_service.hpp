#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpusforge/evalkit.hpp"

namespace httplib {
class Server;
}

namespace corpusforge::eval {

struct UnknownSession : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Items, sessions and scores behind the scoring service. All members are
/// safe to call concurrently; writes are serialized and reads see a
/// consistent snapshot. With a data directory, every change is persisted:
/// the full state is rewritten atomically to state.jsonl and each accepted
/// score is appended to audit.jsonl.
class EvalStore {
 public:
  EvalStore(std::vector<EvalItem> items, std::uint64_t seed,
            std::filesystem::path data_dir = {});

  /// Loads state.jsonl from `data_dir` when present, otherwise items.jsonl.
  static std::unique_ptr<EvalStore> open(const std::filesystem::path& data_dir,
                                         std::uint64_t seed);

  /// Next item with an unscored position for this evaluator, or
  /// {"done": true, ...}. Creates the evaluator's session on first use.
  nlohmann::json next(const std::string& evaluator);

  /// Throws UnknownSession or ValidationError.
  ScoreRecord submit(const std::string& session_id, const std::string& item_id,
                     std::size_t position, int value);

  Report report() const;
  Dataset snapshot() const;
  std::string export_archive() const;
  /// Replaces the whole state. Throws std::runtime_error on a bad archive
  /// and leaves the current state untouched.
  void import_archive(std::string_view archive);

 private:
  const BlindSession& session_for(const std::string& evaluator);
  void persist_locked(const ScoreRecord* appended) const;

  mutable std::mutex mutex_;
  std::vector<EvalItem> items_;
  std::vector<BlindSession> sessions_;
  ScoreStore scores_;
  std::uint64_t seed_;
  std::filesystem::path data_dir_;
};

/// JSON-over-HTTP front end for an EvalStore.
class EvalService {
 public:
  explicit EvalService(EvalStore& store);
  ~EvalService();

  /// Binds and serves until stop(); returns false if the address cannot be
  /// bound. Port 0 picks a free port, readable from port() once bound.
  bool listen(const std::string& host, int port);
  /// Binds without serving; returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves on a socket opened by bind().
  bool serve();
  void stop();
  void wait_until_ready() const;
  int port() const { return port_; }

 private:
  EvalStore& store_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
};

/// Splits "host:port"; throws std::invalid_argument on a malformed address.
std::pair<std::string, int> parse_bind_address(const std::string& bind);

}  // namespace corpusforge::eval
