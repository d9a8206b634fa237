#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "stprep/errors.hpp"
#include "stprep/jsonl.hpp"
#include "stprep/manifest.hpp"
#include "stprep/pipeline.hpp"
#include "wav_helpers.hpp"

using namespace stprep;
namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// 1 Hz traces keep the expected spans easy to state.
std::string trace_text(const std::vector<double>& values, double rate = 1.0) {
  std::string out = "frame_rate_hz=" + std::to_string(rate) + " start_s=0\n";
  for (const double v : values) out += std::to_string(v) + "\n";
  return out;
}

njson stage_report(const CommandResult& result, std::size_t index = 0) {
  const njson doc = njson::parse(result.report);
  REQUIRE(doc.contains("stages"));
  REQUIRE(doc["stages"].size() > index);
  return doc["stages"][index];
}

PipelineConfig config_in(const fs::path& dir, const std::string& body,
                         const std::vector<std::string>& overrides = {}) {
  testutil::write_file(dir / "pipeline.json", body);
  return load_config(dir / "pipeline.json", overrides);
}

}  // namespace

TEST_CASE("segment stage: trace input to manifest") {
  const fs::path dir = testutil::scratch_dir("pipe-segment");
  testutil::write_file(dir / "talk.trace",
                       trace_text(std::vector<double>(10, 0.9)));
  const auto cfg = config_in(dir, R"({"segment": {
      "inputs": ["talk.trace"], "manifest": "out/manifest.tsv"}})");

  const auto result = cmd_segment(cfg);
  CHECK(result.exit_code == 0);
  const auto report = stage_report(result);
  CHECK(report["stage"] == "segment");
  CHECK(report["files"] == 1);
  CHECK(report["failed"] == 0);
  CHECK(report["segments"] == 1);
  CHECK(report["errors"].empty());
  CHECK(report["max_duration_s"].get<double>() == doctest::Approx(10.0));
  CHECK(report["total_hours"].get<double>() == doctest::Approx(10.0 / 3600.0));

  const auto rows = read_manifest(dir / "out" / "manifest.tsv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].utt_id == "talk-0000");
  CHECK(rows[0].path == (dir / "talk.trace").string());
  CHECK(rows[0].start_s == 0.0);
  CHECK(rows[0].end_s == 10.0);

  // report envelope carries the determinism-relevant settings
  const njson doc = njson::parse(result.report);
  CHECK(doc["seed"] == 0);
  CHECK(doc["threads"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("segment stage: stem collisions and per-file failures") {
  const fs::path dir = testutil::scratch_dir("pipe-segment-multi");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  testutil::write_file(dir / "a" / "talk.trace",
                       trace_text(std::vector<double>(5, 0.9)));
  testutil::write_file(dir / "b" / "talk.trace",
                       trace_text(std::vector<double>(7, 0.9)));
  testutil::write_file(dir / "broken.trace", "this is not a trace\n");
  const auto cfg = config_in(dir, R"({"segment": {
      "inputs": ["a/talk.trace", "b/talk.trace", "broken.trace"],
      "manifest": "manifest.tsv"}})");

  const auto result = cmd_segment(cfg);
  CHECK(result.exit_code == 1);  // one input failed, the rest completed
  const auto report = stage_report(result);
  CHECK(report["files"] == 3);
  CHECK(report["failed"] == 1);
  CHECK(report["segments"] == 2);
  REQUIRE(report["errors"].size() == 1);
  CHECK(report["errors"][0]["path"].get<std::string>().find("broken.trace") !=
        std::string::npos);
  CHECK(!report["errors"][0]["error"].get<std::string>().empty());

  const auto rows = read_manifest(dir / "manifest.tsv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].utt_id == "talk-0000");    // a/talk.trace
  CHECK(rows[1].utt_id == "talk-1-0000");  // b/talk.trace, same stem
  fs::remove_all(dir);
}

TEST_CASE("segment stage: wav inputs run through the energy VAD") {
  const fs::path dir = testutil::scratch_dir("pipe-segment-wav");
  const std::vector<std::int16_t> loud(16000, 16384);  // approx -6 dBFS
  testutil::write_file(dir / "talk.WAV", testutil::wav_bytes(loud, 16000, 1));
  const auto cfg = config_in(dir, R"({"segment": {
      "inputs": ["talk.WAV"], "manifest": "manifest.tsv"}})");

  const auto result = cmd_segment(cfg);
  CHECK(result.exit_code == 0);
  const auto rows = read_manifest(dir / "manifest.tsv");
  REQUIRE(rows.size() == 1);
  // 49 frames at 50 fps: the last hop ends at 0.98 s
  CHECK(rows[0].end_s == doctest::Approx(0.98));
  fs::remove_all(dir);
}

TEST_CASE("clean stage: per-reason counts and the rejects stream") {
  const fs::path dir = testutil::scratch_dir("pipe-clean");
  const std::vector<SentenceRecord> records = {
      {"keep-1", "en", "  hello   world  "},
      {"url-1", "en", "visit http://spam.example"},
      {"ctl-1", "en", std::string("bell\x07")},
      {"long-1", "en", std::string(51, 'x')},
      {"keep-2", "en", "fine"},
  };
  write_sentence_records(dir / "in.jsonl", records);
  const auto cfg = config_in(dir, R"({"clean": {
      "input": "in.jsonl", "output": "out.jsonl", "rejects": "rej.jsonl"}})");

  const auto result = cmd_clean(cfg);
  CHECK(result.exit_code == 0);
  const auto report = stage_report(result);
  CHECK(report["input"] == 5);
  CHECK(report["kept"] == 2);
  CHECK(report["rejected"]["invalid"] == 0);
  CHECK(report["rejected"]["nonprinting"] == 1);
  CHECK(report["rejected"]["url"] == 1);
  CHECK(report["rejected"]["token_length"] == 1);

  const auto kept = read_sentence_records(dir / "out.jsonl");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "keep-1");
  CHECK(kept[0].text == "hello world");  // normalized on the way through

  CHECK(slurp(dir / "rej.jsonl") ==
        "{\"id\":\"url-1\",\"reason\":\"url\"}\n"
        "{\"id\":\"ctl-1\",\"reason\":\"nonprinting\"}\n"
        "{\"id\":\"long-1\",\"reason\":\"token_length\"}\n");
  fs::remove_all(dir);
}

TEST_CASE("clean stage: bitext pairs are rejected as a unit") {
  const fs::path dir = testutil::scratch_dir("pipe-clean-bi");
  const std::vector<BitextRecord> records = {
      {"1", "en", "good  pair", "de", "gutes paar"},
      {"2", "en", "fine", "de", "siehe http://spam"},
      {"3", "en", "", "de", "einsam"},  // an empty side is invalid
  };
  write_bitext_records(dir / "in.jsonl", records);
  const auto cfg = config_in(dir, R"({"clean": {
      "input": "in.jsonl", "output": "out.jsonl", "bitext": true}})");

  const auto result = cmd_clean(cfg);
  CHECK(result.exit_code == 0);
  const auto report = stage_report(result);
  CHECK(report["input"] == 3);
  CHECK(report["kept"] == 1);
  CHECK(report["rejected"]["url"] == 1);
  CHECK(report["rejected"]["invalid"] == 1);
  const auto kept = read_bitext_records(dir / "out.jsonl");
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].src_text == "good pair");
  fs::remove_all(dir);
}

TEST_CASE("dedup stage keeps first occurrences") {
  const fs::path dir = testutil::scratch_dir("pipe-dedup");
  write_sentence_records(dir / "in.jsonl",
                         {{"1", "en", "same  text"},
                          {"2", "en", "other"},
                          {"3", "en", "same text"}});
  const auto cfg = config_in(dir, R"({"dedup": {
      "input": "in.jsonl", "output": "out.jsonl"}})");

  const auto result = cmd_dedup(cfg);
  CHECK(result.exit_code == 0);
  const auto report = stage_report(result);
  CHECK(report["input"] == 3);
  CHECK(report["kept"] == 2);
  CHECK(report["removed"] == 1);
  const auto kept = read_sentence_records(dir / "out.jsonl");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "1");
  CHECK(kept[0].text == "same  text");  // records pass through unmodified
  fs::remove_all(dir);
}

TEST_CASE("dedup stage with bitext uses the pair as the key") {
  const fs::path dir = testutil::scratch_dir("pipe-dedup-bi");
  write_bitext_records(dir / "in.jsonl",
                       {{"1", "en", "a", "de", "x"},
                        {"2", "en", "a", "de", "y"},
                        {"3", "en", "a", "de", "x"}});
  const auto cfg = config_in(dir, R"({"dedup": {
      "input": "in.jsonl", "output": "out.jsonl", "bitext": true}})");

  const auto result = cmd_dedup(cfg);
  const auto report = stage_report(result);
  CHECK(report["kept"] == 2);  // same src with a new tgt is a new pair
  CHECK(report["removed"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("langid stage filters against seed-trained models") {
  const fs::path dir = testutil::scratch_dir("pipe-langid");
  testutil::write_file(dir / "en.txt",
                       "the cat sat on the mat\na quick brown fox\nhello there\n");
  testutil::write_file(dir / "de.txt",
                       "der hund lief schnell\nein kleines haus\nguten morgen\n");
  write_sentence_records(dir / "in.jsonl",
                         {{"1", "en", "the cat sat"},
                          {"2", "en", "der hund lief schnell"},
                          {"3", "de", "ein kleines haus"},
                          {"4", "en", ""}});

  SUBCASE("expected language comes from each record") {
    const auto cfg = config_in(dir, R"({"langid": {
        "input": "in.jsonl", "output": "out.jsonl",
        "seeds": {"en": "en.txt", "de": "de.txt"}}})");
    const auto result = cmd_langid(cfg);
    CHECK(result.exit_code == 0);
    const auto report = stage_report(result);
    CHECK(report["input"] == 4);
    CHECK(report["kept"] == 2);
    CHECK(report["rejected_lang"] == 1);   // record 2 classifies as de
    CHECK(report["rejected_empty"] == 1);
    const auto kept = read_sentence_records(dir / "out.jsonl");
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == "1");
    CHECK(kept[1].id == "3");
  }

  SUBCASE("expected_lang pins one language for every record") {
    const auto cfg = config_in(dir, R"({"langid": {
        "input": "in.jsonl", "output": "out.jsonl", "expected_lang": "en",
        "seeds": {"en": "en.txt", "de": "de.txt"}}})");
    const auto report = stage_report(cmd_langid(cfg));
    CHECK(report["kept"] == 1);
    CHECK(report["rejected_lang"] == 2);
  }

  SUBCASE("an empty seed corpus is a config error") {
    testutil::write_file(dir / "empty.txt", "");
    const auto cfg = config_in(dir, R"({"langid": {
        "input": "in.jsonl", "output": "out.jsonl",
        "seeds": {"en": "en.txt", "xx": "empty.txt"}}})");
    try {
      cmd_langid(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("empty.txt") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("select stage scores against two seed models") {
  const fs::path dir = testutil::scratch_dir("pipe-select");
  // Repeat each seed sentence so held-out (new-event) mass stays small; with
  // a handful of singleton lines, unknown words would outscore known ones.
  std::string med, news;
  for (int i = 0; i < 25; ++i) {
    med +=
        "patient dose trial\nclinical therapy symptom\n"
        "acute lesion biopsy\nremission oncology dose\n";
    news +=
        "minister election market\ntreaty parliament border\n"
        "economy summit court\npolice budget strike\n";
  }
  testutil::write_file(dir / "med.txt", med);
  testutil::write_file(dir / "news.txt", news);
  write_sentence_records(dir / "pool.jsonl",
                         {{"m1", "en", "patient dose trial"},
                          {"n1", "en", "minister election"},
                          {"m2", "en", "clinical therapy"},
                          {"n2", "en", "police budget strike"},
                          {"m3", "en", "acute lesion biopsy"},
                          {"n3", "en", "economy summit"}});

  SUBCASE("top_k keeps the in-domain sentences in input order") {
    const auto cfg = config_in(dir, R"({"select": {
        "input": "pool.jsonl", "output": "kept.jsonl", "scores": "scores.tsv",
        "in_domain": "med.txt", "out_domain": "news.txt",
        "mode": "top_k", "k": 3}})");
    const auto result = cmd_select(cfg);
    CHECK(result.exit_code == 0);
    const auto report = stage_report(result);
    CHECK(report["mode"] == "top_k");
    CHECK(report["k"] == 3);
    CHECK(report["kept"] == 3);
    CHECK(report["warnings"].empty());

    const auto kept = read_sentence_records(dir / "kept.jsonl");
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].id == "m1");
    CHECK(kept[1].id == "m2");
    CHECK(kept[2].id == "m3");

    const std::string scores = slurp(dir / "scores.tsv");
    CHECK(std::count(scores.begin(), scores.end(), '\n') == 6);
    CHECK(scores.rfind("m1\t", 0) == 0);
  }

  SUBCASE("an oversized k is clamped with a warning") {
    const auto cfg = config_in(dir, R"({"select": {
        "input": "pool.jsonl", "output": "kept.jsonl",
        "in_domain": "med.txt", "out_domain": "news.txt",
        "mode": "top_k", "k": 100}})");
    const auto report = stage_report(cmd_select(cfg));
    CHECK(report["kept"] == 6);
    REQUIRE(report["warnings"].size() == 1);
    CHECK(report["warnings"][0].get<std::string>().find("clamped") !=
          std::string::npos);
  }

  SUBCASE("threshold mode keeps negative scores") {
    const auto cfg = config_in(dir, R"({"select": {
        "input": "pool.jsonl", "output": "kept.jsonl",
        "in_domain": "med.txt", "out_domain": "news.txt",
        "mode": "threshold", "threshold": 0.0}})");
    const auto report = stage_report(cmd_select(cfg));
    CHECK(report["mode"] == "threshold");
    CHECK(report["kept"] == 3);
  }

  SUBCASE("an empty seed corpus is a config error naming the file") {
    testutil::write_file(dir / "empty.txt", "");
    const auto cfg = config_in(dir, R"({"select": {
        "input": "pool.jsonl", "output": "kept.jsonl",
        "in_domain": "empty.txt", "out_domain": "news.txt"}})");
    try {
      cmd_select(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("select.in_domain") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("align_filter stage drops the worst fifth") {
  const fs::path dir = testutil::scratch_dir("pipe-align");
  std::vector<BitextRecord> pairs;
  for (int i = 0; i < 4; ++i) {
    pairs.push_back({"good-h" + std::to_string(i), "en", "the house", "de",
                     "das haus"});
    pairs.push_back({"good-b" + std::to_string(i), "en", "the book", "de",
                     "das buch"});
  }
  // unalignable: no target tokens at all
  pairs.push_back({"bad-0", "en", "the house", "de", ""});
  pairs.push_back({"bad-1", "en", "the book", "de", "  "});
  write_bitext_records(dir / "in.jsonl", pairs);

  const auto cfg = config_in(dir, R"({"align_filter": {
      "input": "in.jsonl", "output": "out.jsonl", "qualities": "q.tsv",
      "iterations": 8}})");
  const auto result = cmd_align_filter(cfg);
  CHECK(result.exit_code == 0);
  const auto report = stage_report(result);
  CHECK(report["input"] == 10);
  CHECK(report["kept"] == 8);
  CHECK(report["removed"] == 2);  // floor(0.2 * 10)
  CHECK(report["iterations"] == 8);
  CHECK(std::isfinite(report["log_likelihood"].get<double>()));

  const auto kept = read_bitext_records(dir / "out.jsonl");
  REQUIRE(kept.size() == 8);
  for (const auto& rec : kept) {
    CHECK(rec.id.rfind("good-", 0) == 0);
  }
  const std::string qualities = slurp(dir / "q.tsv");
  CHECK(std::count(qualities.begin(), qualities.end(), '\n') == 10);
  fs::remove_all(dir);
}

TEST_CASE("align_filter equal qualities drop the earliest pairs") {
  const fs::path dir = testutil::scratch_dir("pipe-align-ties");
  std::vector<BitextRecord> pairs;
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"p" + std::to_string(i), "en", "a", "de", "x"});
  }
  write_bitext_records(dir / "in.jsonl", pairs);
  const auto cfg = config_in(dir, R"({"align_filter": {
      "input": "in.jsonl", "output": "out.jsonl"}})");
  const auto result = cmd_align_filter(cfg);
  const auto kept = read_bitext_records(dir / "out.jsonl");
  REQUIRE(kept.size() == 8);
  CHECK(kept[0].id == "p2");  // p0 and p1 went first
  CHECK(kept[7].id == "p9");
  fs::remove_all(dir);
}

TEST_CASE("align_filter refuses an empty input") {
  const fs::path dir = testutil::scratch_dir("pipe-align-empty");
  write_bitext_records(dir / "in.jsonl", {});
  const auto cfg = config_in(dir, R"({"align_filter": {
      "input": "in.jsonl", "output": "out.jsonl"}})");
  CHECK_THROWS_AS(cmd_align_filter(cfg), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("missing stage inputs are config errors that name the path") {
  const fs::path dir = testutil::scratch_dir("pipe-missing");
  const auto cfg = config_in(dir, R"({"dedup": {
      "input": "nowhere.jsonl", "output": "out.jsonl"}})");
  try {
    cmd_dedup(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nowhere.jsonl") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("run chains stages through not-yet-existing intermediates") {
  const fs::path dir = testutil::scratch_dir("pipe-run");
  write_sentence_records(dir / "raw.jsonl",
                         {{"1", "en", "keep  me"},
                          {"2", "en", "see http://spam"},
                          {"3", "en", "keep me"},
                          {"4", "en", "other"}});
  const auto cfg = config_in(dir, R"({
    "stages": ["clean", "dedup"],
    "clean": {"input": "raw.jsonl", "output": "cleaned.jsonl"},
    "dedup": {"input": "cleaned.jsonl", "output": "final.jsonl"}})");

  const auto result = cmd_run(cfg);
  CHECK(result.exit_code == 0);
  const njson doc = njson::parse(result.report);
  REQUIRE(doc["stages"].size() == 2);
  CHECK(doc["stages"][0]["stage"] == "clean");
  CHECK(doc["stages"][1]["stage"] == "dedup");
  CHECK(doc["stages"][1]["kept"] == 2);

  const auto kept = read_sentence_records(dir / "final.jsonl");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].text == "keep me");
  CHECK(kept[1].text == "other");
  fs::remove_all(dir);
}

TEST_CASE("run validates every stage before executing any") {
  const fs::path dir = testutil::scratch_dir("pipe-run-validate");
  write_sentence_records(dir / "raw.jsonl", {{"1", "en", "x"}});
  // dedup reads a file nobody produces
  const auto cfg = config_in(dir, R"({
    "stages": ["clean", "dedup"],
    "clean": {"input": "raw.jsonl", "output": "cleaned.jsonl"},
    "dedup": {"input": "unrelated.jsonl", "output": "final.jsonl"}})");

  CHECK_THROWS_AS(cmd_run(cfg), ConfigError);
  CHECK(!fs::exists(dir / "cleaned.jsonl"));  // nothing ran
  fs::remove_all(dir);
}

TEST_CASE("run with no stages succeeds vacuously") {
  const fs::path dir = testutil::scratch_dir("pipe-run-empty");
  const auto cfg = config_in(dir, R"({"stages": []})");
  const auto result = cmd_run(cfg);
  CHECK(result.exit_code == 0);
  const njson doc = njson::parse(result.report);
  CHECK(doc["stages"].empty());
  fs::remove_all(dir);
}

TEST_CASE("repeated runs and higher thread counts are byte-identical") {
  auto build_inputs = [](const fs::path& dir) {
    testutil::write_file(dir / "med.txt",
                         "patient dose trial\nclinical therapy symptom\n"
                         "acute lesion biopsy\n");
    testutil::write_file(dir / "news.txt",
                         "minister election market\ntreaty parliament border\n"
                         "economy summit court\n");
    std::vector<SentenceRecord> pool;
    for (int i = 0; i < 30; ++i) {
      const bool med = i % 3 == 0;
      pool.push_back({"r" + std::to_string(i), "en",
                      med ? "patient trial dose therapy"
                          : "minister market summit border"});
    }
    pool.push_back({"dup", "en", "patient  trial dose therapy"});
    write_sentence_records(dir / "pool.jsonl", pool);
    std::vector<BitextRecord> pairs;
    for (int i = 0; i < 20; ++i) {
      pairs.push_back({"b" + std::to_string(i), "en",
                       i % 2 ? "the house" : "the book", "de",
                       i % 2 ? "das haus" : "das buch"});
    }
    write_bitext_records(dir / "pairs.jsonl", pairs);
  };
  const std::string body = R"({
    "stages": ["clean", "dedup", "select", "align_filter"],
    "clean": {"input": "pool.jsonl", "output": "cleaned.jsonl"},
    "dedup": {"input": "cleaned.jsonl", "output": "unique.jsonl"},
    "select": {"input": "unique.jsonl", "output": "selected.jsonl",
               "scores": "scores.tsv", "in_domain": "med.txt",
               "out_domain": "news.txt", "mode": "top_k", "k": 10},
    "align_filter": {"input": "pairs.jsonl", "output": "aligned.jsonl",
                     "qualities": "q.tsv", "iterations": 4}})";

  const std::vector<std::string> outputs = {
      "cleaned.jsonl", "unique.jsonl", "selected.jsonl",
      "scores.tsv",    "aligned.jsonl", "q.tsv"};

  const fs::path dir_a = testutil::scratch_dir("pipe-det-a");
  const fs::path dir_b = testutil::scratch_dir("pipe-det-b");
  const fs::path dir_c = testutil::scratch_dir("pipe-det-c");
  build_inputs(dir_a);
  build_inputs(dir_b);
  build_inputs(dir_c);

  const auto run_a = cmd_run(config_in(dir_a, body));
  const auto run_b = cmd_run(config_in(dir_b, body));
  const auto run_c = cmd_run(config_in(dir_c, body, {"threads=4"}));
  CHECK(run_a.exit_code == 0);
  CHECK(run_b.exit_code == 0);
  CHECK(run_c.exit_code == 0);

  CHECK(run_a.report == run_b.report);
  for (const auto& name : outputs) {
    INFO("output ", name);
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK(slurp(dir_a / name) == slurp(dir_c / name));
  }
  // stage reports (not the thread count in the envelope) match across threads
  CHECK(njson::parse(run_a.report)["stages"] ==
        njson::parse(run_c.report)["stages"]);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove_all(dir_c);
}
