#pragma once

#include <string>

#include "stprep/config.hpp"

namespace stprep {

// Outcome of one CLI command. `report` is a pretty-printed JSON document
// (LF line endings, no timestamps or other run-dependent content, so
// repeated runs are byte-identical). exit_code is 0 on success and 1 when
// some inputs failed but the stage completed; configuration problems are
// thrown as ConfigError and map to exit code 2 in the CLI.
struct CommandResult {
  int exit_code = 0;
  std::string report;
};

CommandResult cmd_segment(const PipelineConfig& config);
CommandResult cmd_clean(const PipelineConfig& config);
CommandResult cmd_dedup(const PipelineConfig& config);
CommandResult cmd_langid(const PipelineConfig& config);
CommandResult cmd_select(const PipelineConfig& config);
CommandResult cmd_align_filter(const PipelineConfig& config);

// Runs config.stages in order. All stages are validated before the first
// one executes; per-file failures inside a stage do not stop later stages.
CommandResult cmd_run(const PipelineConfig& config);

}  // namespace stprep
