#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "corpusforge/langid.hpp"
#include "corpusforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace corpusforge;

namespace {

struct StageOptions {
  std::string config;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
};

void add_stage_options(CLI::App* cmd, StageOptions& opts, bool config_required) {
  auto* config = cmd->add_option("--config", opts.config, "pipeline config file (INI)");
  if (config_required) config->required();
  cmd->add_option("--set", opts.overrides, "override a setting, section.key=value")->allow_extra_args(false);
  cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::Range(1u, 256u));
}

std::optional<PipelineConfig> load(const StageOptions& opts) {
  if (opts.config.empty()) return std::nullopt;
  return load_config(opts.config, opts.overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpusforge: comparable-corpus mining and blind evaluation toolkit"};
  app.require_subcommand(1);

  StageOptions opts;
  const std::vector<Stage> pipeline = {Stage::ingest, Stage::prep, Stage::train, Stage::mine, Stage::augment};
  std::map<CLI::App*, Stage> stage_cmds;
  for (Stage s : pipeline) {
    auto* cmd = app.add_subcommand(std::string(to_string(s)), "run the " + std::string(to_string(s)) + " stage");
    add_stage_options(cmd, opts, true);
    stage_cmds.emplace(cmd, s);
  }
  auto* run_all = app.add_subcommand("run", "run ingest, prep, train, mine and augment in order");
  add_stage_options(run_all, opts, true);

  std::string bind, data_dir, items;
  std::uint64_t seed = 0;
  auto* serve = app.add_subcommand("eval-serve", "serve the blind scoring API");
  add_stage_options(serve, opts, false);
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--data", data_dir, "evaluation data directory");
  serve->add_option("--items", items, "items.jsonl used to seed an empty data directory");
  serve->add_option("--seed", seed, "shuffle seed");

  std::string granularity;
  bool normalized = false;
  auto* report = app.add_subcommand("eval-report", "print mean ± std per direction and system");
  add_stage_options(report, opts, false);
  report->add_option("--granularity", granularity, "sentence or story (default both)")
      ->check(CLI::IsMember({"sentence", "story"}));
  report->add_flag("--normalized", normalized, "divide means and stds by 4");
  report->add_option("--data", data_dir, "evaluation data directory");

  std::string profile_lang, profile_in, profile_out;
  auto* profile = app.add_subcommand("profile", "train a character n-gram language profile");
  profile->add_option("--lang", profile_lang, "language code")->required();
  profile->add_option("--input", profile_in, "training text (UTF-8)")->required()->check(CLI::ExistingFile);
  profile->add_option("--output", profile_out, "profile file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& [cmd, stage] : stage_cmds) {
      if (cmd->parsed()) return run_stage(stage, *load(opts), opts.jobs, std::cout, std::cerr);
    }
    if (run_all->parsed()) {
      const auto cfg = load(opts);
      for (Stage s : pipeline) {
        if (const int rc = run_stage(s, *cfg, opts.jobs, std::cout, std::cerr); rc != 0) return rc;
      }
      return 0;
    }
    if (serve->parsed()) {
      const auto cfg = load(opts);
      if (!cfg && data_dir.empty()) {
        std::cerr << "eval-serve: --data or --config is required\n";
        return 1;
      }
      const fs::path dir = !data_dir.empty() ? fs::path(data_dir) : cfg->eval_data;
      const fs::path item_file = !items.empty() ? fs::path(items) : cfg ? cfg->eval_items : fs::path();
      const std::string address = !bind.empty() ? bind : cfg ? cfg->eval_bind : "127.0.0.1:8080";
      const std::uint64_t s = serve->count("--seed") ? seed : cfg ? cfg->eval_seed : 1;
      if (!serve_evaluation(dir, item_file, address, s, std::cout)) {
        std::cerr << "eval-serve: cannot bind " << address << "\n";
        return 3;
      }
      return 0;
    }
    if (report->parsed()) {
      const auto cfg = load(opts);
      if (!cfg && data_dir.empty()) {
        std::cerr << "eval-report: --data or --config is required\n";
        return 1;
      }
      const fs::path dir = !data_dir.empty() ? fs::path(data_dir) : cfg->eval_data;
      std::optional<eval::Granularity> g;
      if (!granularity.empty()) g = eval::parse_granularity(granularity);
      std::cout << evaluation_report(dir, g, normalized);
      return 0;
    }
    if (profile->parsed()) {
      std::ifstream in(profile_in, std::ios::binary);
      std::ostringstream text;
      text << in.rdbuf();
      const LangProfile p = train_profile(profile_lang, text.str());
      std::ostringstream out;
      write_profile(out, p);
      write_atomic(profile_out, out.str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
