#include "stprep/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "stprep/audio.hpp"
#include "stprep/domain_select.hpp"
#include "stprep/energy_vad.hpp"
#include "stprep/errors.hpp"
#include "stprep/ibm1.hpp"
#include "stprep/jsonl.hpp"
#include "stprep/langid.hpp"
#include "stprep/manifest.hpp"
#include "stprep/ngram_lm.hpp"
#include "stprep/numfmt.hpp"
#include "stprep/segmenter.hpp"
#include "stprep/textclean.hpp"
#include "stprep/trace_io.hpp"

namespace stprep {
namespace {

using ordered_json = nlohmann::ordered_json;

// Index-parallel map; slot-addressed results keep output order independent
// of scheduling. Exceptions from workers are rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void ensure_parent(const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

void write_tsv_pairs(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, double>>& rows) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [id, value] : rows) {
    out << id << '\t' << format_double(value) << "\n";
  }
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::vector<std::string> read_seed_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string pad4(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() >= 4 ? s : std::string(4 - s.size(), '0') + s;
}

// Unique per-input utterance-id prefixes: a repeated file stem gets a
// -1, -2, ... suffix by input order.
std::vector<std::string> utt_prefixes(
    const std::vector<std::filesystem::path>& inputs) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const auto& p : inputs) {
    std::string stem = p.stem().string();
    if (stem.empty()) stem = "input";
    const std::size_t n = seen[stem]++;
    out.push_back(n == 0 ? stem : stem + "-" + std::to_string(n));
  }
  return out;
}

bool has_wav_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

ordered_json run_segment_stage(const PipelineConfig& config, bool* failed) {
  const SegmentStageConfig& cfg = *config.segment;

  struct FileOutcome {
    std::vector<ManifestRow> rows;
    std::string error;
  };
  const auto prefixes = utt_prefixes(cfg.inputs);
  std::vector<FileOutcome> outcomes(cfg.inputs.size());

  parallel_for(cfg.inputs.size(), config.threads, [&](std::size_t i) {
    FileOutcome& slot = outcomes[i];
    try {
      const std::filesystem::path& path = cfg.inputs[i];
      FrameTrace trace;
      if (has_wav_extension(path)) {
        trace = energy_activation(read_wav(path), cfg.vad);
      } else {
        trace = read_trace(path);
      }
      const auto spans =
          merge_segments(segment_audio(trace, cfg.params), cfg.merge);
      slot.rows.reserve(spans.size());
      for (std::size_t k = 0; k < spans.size(); ++k) {
        slot.rows.push_back({prefixes[i] + "-" + pad4(k), path.string(),
                             spans[k].start_s, spans[k].end_s});
      }
    } catch (const std::exception& e) {
      slot.error = e.what();
      if (slot.error.empty()) slot.error = "unknown error";
    }
  });

  std::vector<ManifestRow> rows;
  ordered_json errors = ordered_json::array();
  std::size_t n_failed = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      ++n_failed;
      errors.push_back(ordered_json{{"path", cfg.inputs[i].string()},
                                    {"error", outcomes[i].error}});
      continue;
    }
    rows.insert(rows.end(), outcomes[i].rows.begin(), outcomes[i].rows.end());
  }

  ensure_parent(cfg.manifest);
  write_manifest(cfg.manifest, rows);

  double total_s = 0.0;
  double max_s = 0.0;
  for (const auto& row : rows) {
    const double d = row.end_s - row.start_s;
    total_s += d;
    max_s = std::max(max_s, d);
  }
  const double mean_s =
      rows.empty() ? 0.0 : total_s / static_cast<double>(rows.size());

  if (n_failed > 0) *failed = true;
  ordered_json report;
  report["stage"] = "segment";
  report["files"] = cfg.inputs.size();
  report["failed"] = n_failed;
  report["segments"] = rows.size();
  report["total_hours"] = total_s / 3600.0;
  report["max_duration_s"] = max_s;
  report["mean_duration_s"] = mean_s;
  report["errors"] = std::move(errors);
  return report;
}

ordered_json run_clean_stage(const PipelineConfig& config, bool* /*failed*/) {
  const CleanStageConfig& cfg = *config.clean;
  CleanReport rep;
  std::vector<std::pair<std::string, RejectReason>> rejects;

  ensure_parent(cfg.output);
  if (cfg.bitext) {
    const auto records = read_bitext_records(cfg.input);
    std::vector<BitextRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
      ++rep.input;
      if (const auto reason = check_bitext_record(rec, cfg.rules)) {
        rep.count(*reason);
        rejects.emplace_back(rec.id, *reason);
        continue;
      }
      ++rep.kept;
      kept.push_back({rec.id, rec.src_lang, normalize_whitespace(rec.src_text),
                      rec.tgt_lang, normalize_whitespace(rec.tgt_text)});
    }
    write_bitext_records(cfg.output, kept);
  } else {
    const auto records = read_sentence_records(cfg.input);
    std::vector<SentenceRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
      ++rep.input;
      if (const auto reason = check_sentence(rec, cfg.rules)) {
        rep.count(*reason);
        rejects.emplace_back(rec.id, *reason);
        continue;
      }
      ++rep.kept;
      kept.push_back({rec.id, rec.lang, normalize_whitespace(rec.text)});
    }
    write_sentence_records(cfg.output, kept);
  }

  if (!cfg.rejects.empty()) {
    ensure_parent(cfg.rejects);
    std::ofstream out(cfg.rejects, std::ios::binary);
    if (!out) throw IoError("cannot open " + cfg.rejects.string() + " for writing");
    for (const auto& [id, reason] : rejects) {
      ordered_json j;
      j["id"] = id;
      j["reason"] = to_string(reason);
      out << j.dump(-1, ' ', false, ordered_json::error_handler_t::replace)
          << "\n";
    }
    if (!out.flush()) throw IoError("failed writing " + cfg.rejects.string());
  }

  ordered_json report;
  report["stage"] = "clean";
  report["input"] = rep.input;
  report["kept"] = rep.kept;
  report["rejected"] = ordered_json{{"invalid", rep.rejected_invalid},
                                    {"nonprinting", rep.rejected_nonprinting},
                                    {"url", rep.rejected_url},
                                    {"token_length", rep.rejected_token_length}};
  return report;
}

ordered_json run_dedup_stage(const PipelineConfig& config, bool* /*failed*/) {
  const DedupStageConfig& cfg = *config.dedup;
  std::size_t input = 0;
  std::size_t kept_count = 0;
  DedupSet seen;

  ensure_parent(cfg.output);
  if (cfg.bitext) {
    const auto records = read_bitext_records(cfg.input);
    input = records.size();
    std::vector<BitextRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
      // '\n' cannot occur inside a side, so the joined key is unambiguous
      const std::string key = normalize_whitespace(rec.src_text) + "\n" +
                              normalize_whitespace(rec.tgt_text);
      if (seen.insert(key)) kept.push_back(rec);
    }
    kept_count = kept.size();
    write_bitext_records(cfg.output, kept);
  } else {
    const auto records = read_sentence_records(cfg.input);
    input = records.size();
    std::vector<SentenceRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
      if (seen.insert(normalize_whitespace(rec.text))) kept.push_back(rec);
    }
    kept_count = kept.size();
    write_sentence_records(cfg.output, kept);
  }

  ordered_json report;
  report["stage"] = "dedup";
  report["input"] = input;
  report["kept"] = kept_count;
  report["removed"] = input - kept_count;
  return report;
}

ordered_json run_langid_stage(const PipelineConfig& config, bool* /*failed*/) {
  const LangidStageConfig& cfg = *config.langid;

  std::map<std::string, std::vector<std::string>> seeds;
  for (const auto& [lang, path] : cfg.seeds) {
    seeds[lang] = read_seed_lines(path);
    if (seeds[lang].empty()) {
      throw ConfigError("langid.seeds." + lang + ": " + path.string() +
                        " contains no sentences");
    }
  }
  const auto classifier = NGramLanguageClassifier::train(seeds);

  const auto records = read_sentence_records(cfg.input);
  std::vector<std::string> labels(records.size());
  parallel_for(records.size(), config.threads, [&](std::size_t i) {
    if (!records[i].text.empty()) {
      labels[i] = classifier.classify(records[i].text);
    }
  });

  LangFilterReport rep;
  std::vector<SentenceRecord> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    ++rep.input;
    if (records[i].text.empty()) {
      ++rep.rejected_empty;
      continue;
    }
    const std::string& expected =
        cfg.expected_lang.empty() ? records[i].lang : cfg.expected_lang;
    if (labels[i] != expected) {
      ++rep.rejected_lang;
      continue;
    }
    ++rep.kept;
    kept.push_back(records[i]);
  }

  ensure_parent(cfg.output);
  write_sentence_records(cfg.output, kept);

  ordered_json report;
  report["stage"] = "langid";
  report["input"] = rep.input;
  report["kept"] = rep.kept;
  report["rejected_lang"] = rep.rejected_lang;
  report["rejected_empty"] = rep.rejected_empty;
  return report;
}

ordered_json run_select_stage(const PipelineConfig& config, bool* /*failed*/) {
  const SelectStageConfig& cfg = *config.select;
  NGramOptions opts;
  opts.order = cfg.order;
  opts.include_eos = cfg.include_eos;
  opts.mode = cfg.tokenize == "characters" ? TokenizeMode::kCharacters
                                           : TokenizeMode::kWhitespace;

  auto train_seed = [&](const std::filesystem::path& path,
                        const char* which) -> NGramModel {
    std::vector<std::vector<std::string>> corpus;
    for (const auto& line : read_seed_lines(path)) {
      corpus.push_back(tokenize(line, opts.mode));
    }
    try {
      return NGramModel::train(corpus, opts);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("select.") + which + ": " + path.string() +
                        ": " + e.what());
    }
  };
  const NGramModel in_lm = train_seed(cfg.in_domain, "in_domain");
  const NGramModel out_lm = train_seed(cfg.out_domain, "out_domain");

  const auto records = read_sentence_records(cfg.input);
  std::vector<double> scores(records.size());
  parallel_for(records.size(), config.threads, [&](std::size_t i) {
    const auto tokens = tokenize(records[i].text, opts.mode);
    scores[i] = moore_lewis_score(in_lm, out_lm, tokens);
  });

  if (!cfg.scores.empty()) {
    std::vector<std::pair<std::string, double>> rows;
    rows.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      rows.emplace_back(records[i].id, scores[i]);
    }
    write_tsv_pairs(cfg.scores, rows);
  }

  const SelectResult sel = select_by_score(scores, cfg.policy);
  std::vector<SentenceRecord> kept;
  kept.reserve(sel.kept.size());
  for (std::size_t idx : sel.kept) kept.push_back(records[idx]);
  ensure_parent(cfg.output);
  write_sentence_records(cfg.output, kept);

  ordered_json report;
  report["stage"] = "select";
  report["input"] = records.size();
  report["kept"] = kept.size();
  if (cfg.policy.mode == SelectMode::kTopK) {
    report["mode"] = "top_k";
    report["k"] = cfg.policy.k;
  } else {
    report["mode"] = "threshold";
    report["threshold"] = cfg.policy.threshold;
  }
  ordered_json warnings = ordered_json::array();
  if (sel.k_clamped) {
    warnings.push_back("k=" + std::to_string(cfg.policy.k) +
                       " exceeds the pool size; clamped to " +
                       std::to_string(records.size()));
  }
  report["warnings"] = std::move(warnings);
  return report;
}

ordered_json run_align_filter_stage(const PipelineConfig& config,
                                    bool* /*failed*/) {
  const AlignFilterStageConfig& cfg = *config.align_filter;
  const auto records = read_bitext_records(cfg.input);
  if (records.empty()) {
    throw ConfigError("align_filter.input: " + cfg.input.string() +
                      " contains no records");
  }

  std::optional<DiagonalPrior> prior;
  if (cfg.lambda) prior = DiagonalPrior{*cfg.lambda};
  TrainStats stats;
  TranslationTable table;
  try {
    table = train_model1(records, cfg.iterations, prior, &stats,
                         config.threads);
  } catch (const ParameterError& e) {
    throw ConfigError("align_filter: " + std::string(e.what()));
  }

  std::vector<double> qualities(records.size());
  parallel_for(records.size(), config.threads, [&](std::size_t i) {
    if (tokenize(records[i].tgt_text, TokenizeMode::kWhitespace).empty()) {
      qualities[i] = 0.0;  // nothing alignable
      return;
    }
    const AlignmentResult result = align_viterbi(table, records[i]);
    qualities[i] = alignment_quality(result, cfg.posterior_floor);
  });

  if (!cfg.qualities.empty()) {
    std::vector<std::pair<std::string, double>> rows;
    rows.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      rows.emplace_back(records[i].id, qualities[i]);
    }
    write_tsv_pairs(cfg.qualities, rows);
  }

  const auto kept_idx = filter_bottom_fraction(qualities, cfg.fraction);
  std::vector<BitextRecord> kept;
  kept.reserve(kept_idx.size());
  for (std::size_t idx : kept_idx) kept.push_back(records[idx]);
  ensure_parent(cfg.output);
  write_bitext_records(cfg.output, kept);

  ordered_json report;
  report["stage"] = "align_filter";
  report["input"] = records.size();
  report["kept"] = kept.size();
  report["removed"] = records.size() - kept.size();
  report["iterations"] = cfg.iterations;
  report["log_likelihood"] = stats.log_likelihood.back();
  return report;
}

ordered_json run_stage(const PipelineConfig& config, std::string_view stage,
                       bool* failed) {
  if (stage == "segment") return run_segment_stage(config, failed);
  if (stage == "clean") return run_clean_stage(config, failed);
  if (stage == "dedup") return run_dedup_stage(config, failed);
  if (stage == "langid") return run_langid_stage(config, failed);
  if (stage == "select") return run_select_stage(config, failed);
  if (stage == "align_filter") return run_align_filter_stage(config, failed);
  throw ConfigError("unknown stage '" + std::string(stage) + "'");
}

CommandResult single_stage(const PipelineConfig& config, std::string_view stage) {
  validate_stage_inputs(config, stage);
  bool failed = false;
  ordered_json env;
  env["seed"] = config.seed;
  env["threads"] = config.threads;
  env["stages"] = ordered_json::array({run_stage(config, stage, &failed)});
  return {failed ? 1 : 0, env.dump(2) + "\n"};
}

}  // namespace

CommandResult cmd_segment(const PipelineConfig& config) {
  return single_stage(config, "segment");
}
CommandResult cmd_clean(const PipelineConfig& config) {
  return single_stage(config, "clean");
}
CommandResult cmd_dedup(const PipelineConfig& config) {
  return single_stage(config, "dedup");
}
CommandResult cmd_langid(const PipelineConfig& config) {
  return single_stage(config, "langid");
}
CommandResult cmd_select(const PipelineConfig& config) {
  return single_stage(config, "select");
}
CommandResult cmd_align_filter(const PipelineConfig& config) {
  return single_stage(config, "align_filter");
}

CommandResult cmd_run(const PipelineConfig& config) {
  // Everything is validated before any stage runs; inputs produced by an
  // earlier stage in the list count as resolvable.
  std::vector<std::filesystem::path> pending;
  for (const auto& stage : config.stages) {
    validate_stage_inputs(config, stage, &pending);
    for (auto& p : stage_outputs(config, stage)) pending.push_back(std::move(p));
  }

  bool failed = false;
  ordered_json stage_reports = ordered_json::array();
  for (const auto& stage : config.stages) {
    stage_reports.push_back(run_stage(config, stage, &failed));
  }
  ordered_json env;
  env["seed"] = config.seed;
  env["threads"] = config.threads;
  env["stages"] = std::move(stage_reports);
  return {failed ? 1 : 0, env.dump(2) + "\n"};
}

}  // namespace stprep
