#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stprep/domain_select.hpp"
#include "stprep/energy_vad.hpp"
#include "stprep/segmenter.hpp"
#include "stprep/textclean.hpp"

namespace stprep {

struct SegmentStageConfig {
  std::vector<std::filesystem::path> inputs;  // .wav decoded, anything else read as a trace
  std::filesystem::path manifest;
  SegmenterParams params;
  MergeParams merge;
  EnergyVadParams vad;
};

struct CleanStageConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path rejects;  // optional audit stream of {id, reason}
  bool bitext = false;
  CleanRules rules;
};

struct DedupStageConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  bool bitext = false;
};

struct LangidStageConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  // Language tag -> seed corpus (plain text, one sentence per line).
  std::map<std::string, std::filesystem::path> seeds;
  // Empty means "match each record's own lang tag".
  std::string expected_lang;
};

struct SelectStageConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path scores;  // optional audit TSV of id<TAB>score
  std::filesystem::path in_domain;
  std::filesystem::path out_domain;
  int order = 3;
  bool include_eos = true;
  std::string tokenize = "whitespace";  // or "characters"
  SelectPolicy policy;
};

struct AlignFilterStageConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path qualities;  // optional audit TSV of id<TAB>quality
  int iterations = 5;
  std::optional<double> lambda;  // diagonal prior weight when present
  double fraction = 0.2;
  double posterior_floor = 0.5;
};

// One JSON document drives everything. `stages` is the order for `run`;
// each subcommand only needs its own block. Structural problems (unknown
// keys, wrong types, out-of-range parameters) surface as ConfigError at
// load time; per-stage input paths are checked just before execution.
struct PipelineConfig {
  int threads = 1;
  long long seed = 0;
  std::vector<std::string> stages;
  std::optional<SegmentStageConfig> segment;
  std::optional<CleanStageConfig> clean;
  std::optional<DedupStageConfig> dedup;
  std::optional<LangidStageConfig> langid;
  std::optional<SelectStageConfig> select;
  std::optional<AlignFilterStageConfig> align_filter;
};

// Names accepted in `stages` and by require_stage.
bool is_known_stage(std::string_view name);

// Parses, applies `key=value` / `stage.key=value` overrides, validates
// structure. Overrides parse as JSON when possible, else as strings.
PipelineConfig parse_config_text(const std::string& text,
                                 const std::vector<std::string>& overrides = {},
                                 const std::string& name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

// Paths the stage will write (outputs, manifests, audit files).
std::vector<std::filesystem::path> stage_outputs(const PipelineConfig& config,
                                                 std::string_view stage);

// Existence checks for everything the given stage reads; ConfigError names
// the offending path. Also requires the stage block to be present.
// `pending_outputs` lists files earlier stages of a `run` will create, so
// chained intermediates validate before they exist.
void validate_stage_inputs(
    const PipelineConfig& config, std::string_view stage,
    const std::vector<std::filesystem::path>* pending_outputs = nullptr);

}  // namespace stprep
