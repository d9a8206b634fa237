#include "stprep/config.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stprep/errors.hpp"

namespace stprep {
namespace {

using ordered_json = nlohmann::ordered_json;

ConfigError err(const std::string& path, const std::string& what) {
  return ConfigError(path + ": " + what);
}

double as_double(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) throw err(path, "expected a number");
  return j.get<double>();
}

long long as_int(const ordered_json& j, const std::string& path) {
  if (!j.is_number_integer()) throw err(path, "expected an integer");
  return j.get<long long>();
}

bool as_bool(const ordered_json& j, const std::string& path) {
  if (!j.is_boolean()) throw err(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) throw err(path, "expected a string");
  return j.get<std::string>();
}

std::filesystem::path as_path(const ordered_json& j, const std::string& path) {
  return std::filesystem::path(as_string(j, path));
}

void expect_object(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) throw err(path, "expected an object");
}

template <typename Fn>
void for_each_key(const ordered_json& j, const std::string& path, Fn&& fn) {
  expect_object(j, path);
  for (const auto& [key, value] : j.items()) {
    if (!fn(key, value)) throw err(path + "." + key, "unknown key");
  }
}

SegmenterParams parse_segmenter_params(const ordered_json& j,
                                       const std::string& path) {
  SegmenterParams params;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "p_on") params.p_on = as_double(v, p);
    else if (key == "p_off") params.p_off = as_double(v, p);
    else if (key == "alpha_on") params.alpha_on = as_double(v, p);
    else if (key == "alpha_off") params.alpha_off = as_double(v, p);
    else if (key == "t_dur_s") params.t_dur_s = as_double(v, p);
    else if (key == "escalation_cap") params.escalation_cap = as_double(v, p);
    else return false;
    return true;
  });
  return params;
}

MergeParams parse_merge_params(const ordered_json& j, const std::string& path) {
  MergeParams params;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "m_dur_s") params.m_dur_s = as_double(v, p);
    else if (key == "m_int_s") params.m_int_s = as_double(v, p);
    else return false;
    return true;
  });
  return params;
}

EnergyVadParams parse_vad_params(const ordered_json& j, const std::string& path) {
  EnergyVadParams params;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "frame_ms") params.frame_ms = as_double(v, p);
    else if (key == "hop_ms") params.hop_ms = as_double(v, p);
    else if (key == "floor_db") params.floor_db = as_double(v, p);
    else if (key == "ceil_db") params.ceil_db = as_double(v, p);
    else return false;
    return true;
  });
  return params;
}

SegmentStageConfig parse_segment(const ordered_json& j, const std::string& path) {
  SegmentStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "inputs") {
      if (!v.is_array()) throw err(p, "expected an array of paths");
      for (std::size_t i = 0; i < v.size(); ++i) {
        cfg.inputs.push_back(as_path(v[i], p + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "manifest") cfg.manifest = as_path(v, p);
    else if (key == "params") cfg.params = parse_segmenter_params(v, p);
    else if (key == "merge") cfg.merge = parse_merge_params(v, p);
    else if (key == "vad") cfg.vad = parse_vad_params(v, p);
    else return false;
    return true;
  });
  try {
    cfg.params.validate();
    cfg.merge.validate();
    cfg.vad.validate();
  } catch (const ParameterError& e) {
    throw err(path, e.what());
  }
  return cfg;
}

CleanRules parse_clean_rules_tokens(const ordered_json& j, const std::string& path,
                                    CleanRules rules) {
  // The object replaces the per-language cap table; "default" sets the
  // fallback cap for unlisted languages.
  rules.max_token_chars.clear();
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    const long long n = as_int(v, p);
    if (n < 1) throw err(p, "cap must be at least 1");
    if (key == "default") rules.default_max_token_chars = static_cast<std::size_t>(n);
    else rules.max_token_chars[key] = static_cast<std::size_t>(n);
    return true;
  });
  return rules;
}

CleanStageConfig parse_clean(const ordered_json& j, const std::string& path) {
  CleanStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "input") cfg.input = as_path(v, p);
    else if (key == "output") cfg.output = as_path(v, p);
    else if (key == "rejects") cfg.rejects = as_path(v, p);
    else if (key == "bitext") cfg.bitext = as_bool(v, p);
    else if (key == "max_token_chars")
      cfg.rules = parse_clean_rules_tokens(v, p, cfg.rules);
    else if (key == "reject_nonprinting") cfg.rules.reject_nonprinting = as_bool(v, p);
    else if (key == "reject_urls") cfg.rules.reject_urls = as_bool(v, p);
    else return false;
    return true;
  });
  try {
    cfg.rules.validate();
  } catch (const ParameterError& e) {
    throw err(path, e.what());
  }
  return cfg;
}

DedupStageConfig parse_dedup(const ordered_json& j, const std::string& path) {
  DedupStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "input") cfg.input = as_path(v, p);
    else if (key == "output") cfg.output = as_path(v, p);
    else if (key == "bitext") cfg.bitext = as_bool(v, p);
    else return false;
    return true;
  });
  return cfg;
}

LangidStageConfig parse_langid(const ordered_json& j, const std::string& path) {
  LangidStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "input") cfg.input = as_path(v, p);
    else if (key == "output") cfg.output = as_path(v, p);
    else if (key == "expected_lang") cfg.expected_lang = as_string(v, p);
    else if (key == "seeds") {
      for_each_key(v, p, [&](const std::string& lang, const ordered_json& sv) {
        cfg.seeds[lang] = as_path(sv, p + "." + lang);
        return true;
      });
    } else return false;
    return true;
  });
  return cfg;
}

SelectStageConfig parse_select(const ordered_json& j, const std::string& path) {
  SelectStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "input") cfg.input = as_path(v, p);
    else if (key == "output") cfg.output = as_path(v, p);
    else if (key == "scores") cfg.scores = as_path(v, p);
    else if (key == "in_domain") cfg.in_domain = as_path(v, p);
    else if (key == "out_domain") cfg.out_domain = as_path(v, p);
    else if (key == "order") cfg.order = static_cast<int>(as_int(v, p));
    else if (key == "include_eos") cfg.include_eos = as_bool(v, p);
    else if (key == "tokenize") cfg.tokenize = as_string(v, p);
    else if (key == "mode") {
      const std::string mode = as_string(v, p);
      if (mode == "top_k") cfg.policy.mode = SelectMode::kTopK;
      else if (mode == "threshold") cfg.policy.mode = SelectMode::kThreshold;
      else throw err(p, "expected \"top_k\" or \"threshold\"");
    } else if (key == "k") {
      const long long k = as_int(v, p);
      if (k < 0) throw err(p, "k must be non-negative");
      cfg.policy.k = static_cast<std::size_t>(k);
    } else if (key == "threshold") cfg.policy.threshold = as_double(v, p);
    else return false;
    return true;
  });
  if (cfg.order < 1) throw err(path + ".order", "must be at least 1");
  if (cfg.tokenize != "whitespace" && cfg.tokenize != "characters") {
    throw err(path + ".tokenize", "expected \"whitespace\" or \"characters\"");
  }
  return cfg;
}

AlignFilterStageConfig parse_align_filter(const ordered_json& j,
                                          const std::string& path) {
  AlignFilterStageConfig cfg;
  for_each_key(j, path, [&](const std::string& key, const ordered_json& v) {
    const std::string p = path + "." + key;
    if (key == "input") cfg.input = as_path(v, p);
    else if (key == "output") cfg.output = as_path(v, p);
    else if (key == "qualities") cfg.qualities = as_path(v, p);
    else if (key == "iterations") cfg.iterations = static_cast<int>(as_int(v, p));
    else if (key == "lambda") {
      if (v.is_null()) cfg.lambda.reset();
      else cfg.lambda = as_double(v, p);
    } else if (key == "fraction") cfg.fraction = as_double(v, p);
    else if (key == "posterior_floor") cfg.posterior_floor = as_double(v, p);
    else return false;
    return true;
  });
  if (cfg.iterations < 1) throw err(path + ".iterations", "must be at least 1");
  if (!(cfg.fraction >= 0.0 && cfg.fraction < 1.0)) {
    throw err(path + ".fraction", "must be in [0, 1)");
  }
  if (!(cfg.posterior_floor >= 0.0 && cfg.posterior_floor <= 1.0)) {
    throw err(path + ".posterior_floor", "must be in [0, 1]");
  }
  if (cfg.lambda && *cfg.lambda < 0.0) {
    throw err(path + ".lambda", "must be >= 0");
  }
  return cfg;
}

void apply_override(ordered_json& doc, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + spec + "' must look like stage.key=value");
  }
  const std::string lhs = spec.substr(0, eq);
  const std::string rhs = spec.substr(eq + 1);

  ordered_json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = lhs.find('.', start);
    const std::string part = lhs.substr(start, dot - start);
    if (part.empty()) {
      throw ConfigError("override '" + spec + "' has an empty key segment");
    }
    if (dot == std::string::npos) {
      ordered_json value = ordered_json::parse(rhs, nullptr, false);
      if (value.is_discarded()) value = rhs;  // bare words are strings
      (*node)[part] = std::move(value);
      return;
    }
    ordered_json& child = (*node)[part];
    if (!child.is_object()) child = ordered_json::object();
    node = &child;
    start = dot + 1;
  }
}

constexpr std::array<std::string_view, 6> kStageNames = {
    "segment", "clean", "dedup", "langid", "select", "align_filter"};

void resolve(std::filesystem::path& p, const std::filesystem::path& base) {
  if (!p.empty() && p.is_relative()) p = base / p;
}

void resolve_paths(PipelineConfig& cfg, const std::filesystem::path& base) {
  if (cfg.segment) {
    for (auto& p : cfg.segment->inputs) resolve(p, base);
    resolve(cfg.segment->manifest, base);
  }
  if (cfg.clean) {
    resolve(cfg.clean->input, base);
    resolve(cfg.clean->output, base);
    resolve(cfg.clean->rejects, base);
  }
  if (cfg.dedup) {
    resolve(cfg.dedup->input, base);
    resolve(cfg.dedup->output, base);
  }
  if (cfg.langid) {
    resolve(cfg.langid->input, base);
    resolve(cfg.langid->output, base);
    for (auto& [lang, p] : cfg.langid->seeds) resolve(p, base);
  }
  if (cfg.select) {
    resolve(cfg.select->input, base);
    resolve(cfg.select->output, base);
    resolve(cfg.select->scores, base);
    resolve(cfg.select->in_domain, base);
    resolve(cfg.select->out_domain, base);
  }
  if (cfg.align_filter) {
    resolve(cfg.align_filter->input, base);
    resolve(cfg.align_filter->output, base);
    resolve(cfg.align_filter->qualities, base);
  }
}

void require_set(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is required");
}

}  // namespace

bool is_known_stage(std::string_view name) {
  for (const auto& s : kStageNames)
    if (s == name) return true;
  return false;
}

PipelineConfig parse_config_text(const std::string& text,
                                 const std::vector<std::string>& overrides,
                                 const std::string& name) {
  ordered_json doc = ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(name + ": not valid JSON");
  if (!doc.is_object()) throw ConfigError(name + ": config must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);

  PipelineConfig cfg;
  for_each_key(doc, name, [&](const std::string& key, const ordered_json& v) {
    if (key == "threads") cfg.threads = static_cast<int>(as_int(v, "threads"));
    else if (key == "seed") cfg.seed = as_int(v, "seed");
    else if (key == "stages") {
      if (!v.is_array()) throw err("stages", "expected an array of stage names");
      for (const auto& s : v) cfg.stages.push_back(as_string(s, "stages[]"));
    } else if (key == "segment") cfg.segment = parse_segment(v, "segment");
    else if (key == "clean") cfg.clean = parse_clean(v, "clean");
    else if (key == "dedup") cfg.dedup = parse_dedup(v, "dedup");
    else if (key == "langid") cfg.langid = parse_langid(v, "langid");
    else if (key == "select") cfg.select = parse_select(v, "select");
    else if (key == "align_filter") cfg.align_filter = parse_align_filter(v, "align_filter");
    else return false;
    return true;
  });

  if (cfg.threads < 1) throw err("threads", "must be at least 1");
  for (const auto& stage : cfg.stages) {
    if (!is_known_stage(stage)) {
      throw err("stages", "unknown stage '" + stage + "'");
    }
    const bool configured =
        (stage == "segment" && cfg.segment) || (stage == "clean" && cfg.clean) ||
        (stage == "dedup" && cfg.dedup) || (stage == "langid" && cfg.langid) ||
        (stage == "select" && cfg.select) ||
        (stage == "align_filter" && cfg.align_filter);
    if (!configured) {
      throw err("stages", "stage '" + stage + "' is listed but not configured");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg = parse_config_text(buf.str(), overrides, path.string());
  resolve_paths(cfg, path.parent_path());
  return cfg;
}

std::vector<std::filesystem::path> stage_outputs(const PipelineConfig& config,
                                                 std::string_view stage) {
  std::vector<std::filesystem::path> out;
  auto add = [&](const std::filesystem::path& p) {
    if (!p.empty()) out.push_back(p);
  };
  if (stage == "segment" && config.segment) add(config.segment->manifest);
  if (stage == "clean" && config.clean) {
    add(config.clean->output);
    add(config.clean->rejects);
  }
  if (stage == "dedup" && config.dedup) add(config.dedup->output);
  if (stage == "langid" && config.langid) add(config.langid->output);
  if (stage == "select" && config.select) {
    add(config.select->output);
    add(config.select->scores);
  }
  if (stage == "align_filter" && config.align_filter) {
    add(config.align_filter->output);
    add(config.align_filter->qualities);
  }
  return out;
}

void validate_stage_inputs(
    const PipelineConfig& config, std::string_view stage,
    const std::vector<std::filesystem::path>* pending_outputs) {
  auto require_exists = [&](const std::filesystem::path& p,
                            const std::string& what) {
    require_set(p, what);
    if (std::filesystem::exists(p)) return;
    if (pending_outputs) {
      for (const auto& pending : *pending_outputs) {
        if (pending.lexically_normal() == p.lexically_normal()) return;
      }
    }
    throw ConfigError(what + " not found: " + p.string());
  };

  if (!is_known_stage(stage)) {
    throw ConfigError("unknown stage '" + std::string(stage) + "'");
  }
  if (stage == "segment") {
    if (!config.segment) throw ConfigError("no 'segment' stage configured");
    require_set(config.segment->manifest, "segment.manifest");
    for (const auto& p : config.segment->inputs) {
      require_exists(p, "segment input");
    }
  } else if (stage == "clean") {
    if (!config.clean) throw ConfigError("no 'clean' stage configured");
    require_exists(config.clean->input, "clean.input");
    require_set(config.clean->output, "clean.output");
  } else if (stage == "dedup") {
    if (!config.dedup) throw ConfigError("no 'dedup' stage configured");
    require_exists(config.dedup->input, "dedup.input");
    require_set(config.dedup->output, "dedup.output");
  } else if (stage == "langid") {
    if (!config.langid) throw ConfigError("no 'langid' stage configured");
    require_exists(config.langid->input, "langid.input");
    require_set(config.langid->output, "langid.output");
    if (config.langid->seeds.empty()) {
      throw ConfigError("langid.seeds must list at least one language");
    }
    for (const auto& [lang, p] : config.langid->seeds) {
      require_exists(p, "langid.seeds." + lang);
    }
    if (!config.langid->expected_lang.empty() &&
        !config.langid->seeds.count(config.langid->expected_lang)) {
      throw ConfigError("langid.expected_lang '" + config.langid->expected_lang +
                        "' has no seed corpus");
    }
  } else if (stage == "select") {
    if (!config.select) throw ConfigError("no 'select' stage configured");
    require_exists(config.select->input, "select.input");
    require_set(config.select->output, "select.output");
    require_exists(config.select->in_domain, "select.in_domain");
    require_exists(config.select->out_domain, "select.out_domain");
  } else if (stage == "align_filter") {
    if (!config.align_filter) throw ConfigError("no 'align_filter' stage configured");
    require_exists(config.align_filter->input, "align_filter.input");
    require_set(config.align_filter->output, "align_filter.output");
  }
}

}  // namespace stprep
