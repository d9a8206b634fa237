#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stprep/config.hpp"
#include "stprep/errors.hpp"
#include "stprep/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string report_path;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "Pipeline configuration (JSON)")
      ->required();
  sub->add_option("--set", args.overrides,
                  "Override a config value, e.g. --set clean.bitext=true")
      ->type_name("stage.key=value");
  args.seed_opt = sub->add_option("--seed", args.seed,
                                  "Override the configured random seed");
  sub->add_option("--report", args.report_path,
                  "Write the JSON report here instead of stdout");
}

int emit(const stprep::CommandResult& result, const std::string& report_path) {
  if (report_path.empty()) {
    std::cout << result.report;
  } else {
    std::ofstream out(report_path, std::ios::binary);
    if (!out || !(out << result.report).flush()) {
      std::cerr << "error: cannot write report to " << report_path << "\n";
      return 1;
    }
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-translation corpus preparation pipeline"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    stprep::CommandResult (*fn)(const stprep::PipelineConfig&);
  };
  const Command commands[] = {
      {"segment", "Segment audio (WAV or activation traces) into utterances",
       &stprep::cmd_segment},
      {"clean", "Rule-based sentence cleaning", &stprep::cmd_clean},
      {"dedup", "Exact deduplication", &stprep::cmd_dedup},
      {"langid", "Language-identification filtering", &stprep::cmd_langid},
      {"select", "Cross-entropy-difference domain selection", &stprep::cmd_select},
      {"align-filter", "Alignment-quality filtering", &stprep::cmd_align_filter},
      {"run", "Run the configured stages in order", &stprep::cmd_run},
  };

  CommonArgs args;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, args);
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are configuration problems
  }

  const Command* chosen = nullptr;
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) chosen = cmd;
  }

  try {
    std::vector<std::string> overrides = args.overrides;
    if (args.seed_opt->count() > 0) {
      overrides.push_back("seed=" + std::to_string(args.seed));
    }
    const auto config = stprep::load_config(args.config_path, overrides);
    return emit(chosen->fn(config), args.report_path);
  } catch (const stprep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
