#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "arable/error.hpp"
#include "arable/parallel.hpp"
#include "pipeline/config.hpp"
#include "pipeline/stages.hpp"
#include "pipeline/stamp.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "master seed (overrides config seed)");
  cmd->add_option("--threads", f.threads, "worker thread cap, 0 = all cores (overrides config threads)");
  cmd->add_option("--out", f.out, "output directory (overrides config out)");
  cmd->add_flag("-q,--quiet", f.quiet, "only log warnings and errors");
}

arable::pipeline::RunConfig resolve(const Flags& f) {
  auto c = f.config.empty() ? arable::pipeline::RunConfig{} : arable::pipeline::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.out) c.out = *f.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arable: cropland suitability pipeline"};
  app.require_subcommand(1);
  Flags flags;
  std::string selected;
  for (const auto& stage : arable::pipeline::stage_names()) {
    auto* cmd = app.add_subcommand(stage, "run the " + stage + " stage");
    add_common(cmd, flags);
    cmd->callback([&selected, stage] { selected = stage; });
  }
  auto* all = app.add_subcommand("all", "run every stage in order");
  add_common(all, flags);
  all->callback([&selected] { selected = "all"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  if (flags.quiet) spdlog::set_level(spdlog::level::warn);
  try {
    const auto config = resolve(flags);
    arable::set_max_threads(config.threads);
    if (selected == "all") {
      for (const auto& stage : arable::pipeline::stage_names()) arable::pipeline::run_stage(config, stage);
    } else {
      arable::pipeline::run_stage(config, selected);
    }
  } catch (const arable::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const arable::DataError& e) {
    spdlog::error("data error: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
