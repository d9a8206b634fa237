#include "stprep/jsonl.hpp"

#include <fstream>

#include <json.hpp>

#include "stprep/errors.hpp"

namespace stprep {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string field(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  if (!it->is_string()) {
    throw FormatError(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

ordered_json parse_object(std::string_view line) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) throw FormatError("not valid JSON");
  if (!j.is_object()) throw FormatError("record must be a JSON object");
  return j;
}

// Invalid UTF-8 in a record (e.g. a reject being echoed back out) is
// serialized with replacement characters rather than aborting the write.
std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

template <typename Record>
std::vector<Record> read_records(const std::filesystem::path& path,
                                 Record (*parse)(std::string_view)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(parse(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": line " + std::to_string(lineno) +
                        ": " + e.what());
    }
  }
  return records;
}

}  // namespace

SentenceRecord parse_sentence_line(std::string_view line) {
  const ordered_json j = parse_object(line);
  return {field(j, "id"), field(j, "lang"), field(j, "text")};
}

BitextRecord parse_bitext_line(std::string_view line) {
  const ordered_json j = parse_object(line);
  return {field(j, "id"), field(j, "src_lang"), field(j, "src"),
          field(j, "tgt_lang"), field(j, "tgt")};
}

std::string format_sentence_line(const SentenceRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["lang"] = record.lang;
  j["text"] = record.text;
  return dump_line(j);
}

std::string format_bitext_line(const BitextRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["src_lang"] = record.src_lang;
  j["src"] = record.src_text;
  j["tgt_lang"] = record.tgt_lang;
  j["tgt"] = record.tgt_text;
  return dump_line(j);
}

std::vector<SentenceRecord> read_sentence_records(
    const std::filesystem::path& path) {
  return read_records<SentenceRecord>(path, &parse_sentence_line);
}

std::vector<BitextRecord> read_bitext_records(const std::filesystem::path& path) {
  return read_records<BitextRecord>(path, &parse_bitext_line);
}

namespace {

template <typename Record>
void write_records(const std::filesystem::path& path,
                   const std::vector<Record>& records,
                   std::string (*format)(const Record&)) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const Record& rec : records) out << format(rec) << "\n";
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_sentence_records(const std::filesystem::path& path,
                            const std::vector<SentenceRecord>& records) {
  write_records<SentenceRecord>(path, records, &format_sentence_line);
}

void write_bitext_records(const std::filesystem::path& path,
                          const std::vector<BitextRecord>& records) {
  write_records<BitextRecord>(path, records, &format_bitext_line);
}

}  // namespace stprep
