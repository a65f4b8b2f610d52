#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tearfilm/runner.hpp"

using namespace tearfilm;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::string out_dir;
  int threads = 1;
  long seed = 0;  // reserved: every solver path is deterministic
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, Common& c, bool with_outputs) {
  cmd->add_option("--config", c.config, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);
  if (!with_outputs) return;
  cmd->add_option("--out-dir", c.out_dir, "Output directory (default: outputs.directory of the config)");
  cmd->add_option("--threads", c.threads, "Worker threads for sweeps and grid studies")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Reserved; accepted for reproducibility records");
}

std::filesystem::path out_dir_for(const Common& c, const config::RunConfig& cfg) {
  return c.out_dir.empty() ? std::filesystem::path(cfg.outputs.directory) : std::filesystem::path(c.out_dir);
}

int report(const runner::RunSummary& s) {
  if (s.tbut) {
    std::cout << "TBUT " << *s.tbut << "\n";
  } else if (!s.halted_reason.empty()) {
    std::cout << "halted: " << s.halted_reason << "\n";
  }
  std::cout << "manifest " << s.manifest.string() << "\n";
  if (!s.ok) {
    std::cerr << "solver failure: " << s.message << "\n";
    return kExitFailure;
  }
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tear-film breakup simulator"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  auto* run = app.add_subcommand("run", "Run the mode named in a configuration file");
  add_common(run, common, true);
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep file");
  add_common(sweep, common, true);
  auto* compare = app.add_subcommand("pod-compare", "Compare reduced and full solves");
  add_common(compare, common, true);
  auto* validate = app.add_subcommand("validate-config", "Check a configuration or sweep file");
  add_common(validate, common, false);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("tearfilm"));
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    if (*validate) {
      const auto j = config::read_json(common.config);
      if (j.contains("axis")) {
        config::parse_sweep(j);
        std::cout << common.config << ": valid sweep\n";
      } else {
        const auto cfg = config::parse_config(j);
        std::cout << common.config << ": valid (" << config::to_string(cfg.mode) << ")\n";
      }
      return EXIT_SUCCESS;
    }
    if (*run) {
      const auto cfg = config::load_config(common.config);
      return report(runner::run(cfg, out_dir_for(common, cfg), common.threads));
    }
    if (*sweep) {
      const auto s = config::load_sweep(common.config);
      const auto cases = runner::run_sweep(s, out_dir_for(common, s.base), common.threads);
      int status = EXIT_SUCCESS;
      for (const auto& c : cases) {
        std::cout << s.axis.name << " = " << c.value << ": ";
        if (c.summary.tbut) {
          std::cout << "TBUT " << *c.summary.tbut;
        } else {
          std::cout << (c.error.empty() ? c.summary.halted_reason : c.error);
        }
        std::cout << "\n";
        if (!c.summary.ok) status = kExitFailure;
      }
      return status;
    }
    if (*compare) {
      auto cfg = config::load_config(common.config);
      cfg.mode = config::Mode::pod_error_study;
      return report(runner::run(cfg, out_dir_for(common, cfg), common.threads));
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return EXIT_SUCCESS;
}
