#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpusforge/evalkit.hpp"
#include "corpusforge/ingest.hpp"
#include "corpusforge/miner.hpp"

namespace corpusforge {

/// Invalid configuration; `field` is the dotted key ("filter.threshold").
struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field(std::move(field)) {}
  std::string field;
};

struct PipelineConfig {
  std::filesystem::path config_path;

  struct {
    std::filesystem::path src_root, tgt_root, mono_root, seed, output;
  } paths;
  std::string src_lang = "am";
  std::string tgt_lang = "en";
  SourceKind src_kind = SourceKind::plain;
  SourceKind tgt_kind = SourceKind::plain;
  SourceKind mono_kind = SourceKind::plain;

  double dedup_threshold = 0.8;
  std::filesystem::path profiles;
  bool lang_filter = true;

  int iterations = 10;
  double floor = 1e-9;
  FilterConfig filter;

  double cap_ratio = 1.0;
  int rounds = 1;
  std::string translator = "naive";  // or "command"
  std::string command;

  std::string eval_bind = "127.0.0.1:8080";
  std::filesystem::path eval_data;
  std::filesystem::path eval_items;
  std::uint64_t eval_seed = 1;

  /// Every effective setting as sorted "section.key=value" lines; hashed
  /// into each stage manifest.
  std::string canonical;
};

/// Reads an INI file, applies "section.key=value" overrides, resolves
/// relative paths against the config file's directory and validates.
/// Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path,
                           std::span<const std::string> overrides = {});

enum class Stage { ingest, prep, train, mine, augment, eval_serve, eval_report };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

/// Missing artifact from an earlier stage.
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exit codes: 0 success, 1 invalid configuration, 2 missing prior
/// artifact, 3 any other failure. Diagnostics go to `err`, progress to
/// `log`.
int run_stage(Stage stage, const PipelineConfig& cfg, unsigned jobs, std::ostream& log,
              std::ostream& err);

/// Seeds `data_dir` with `items` when it has no evaluation state yet, then
/// serves until the process is stopped. Returns false if binding fails.
bool serve_evaluation(const std::filesystem::path& data_dir, const std::filesystem::path& items,
                      const std::string& bind, std::uint64_t seed, std::ostream& log);

std::string evaluation_report(const std::filesystem::path& data_dir,
                              std::optional<eval::Granularity> granularity, bool normalized);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace corpusforge
