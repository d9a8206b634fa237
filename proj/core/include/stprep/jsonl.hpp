#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stprep/text_records.hpp"

namespace stprep {

// JSON-lines record streams, UTF-8 with LF line endings.
// Monolingual lines carry {"id", "lang", "text"}; bitext lines carry
// {"id", "src_lang", "src", "tgt_lang", "tgt"}. Unknown fields are
// ignored on read; fields are emitted in that order on write.

SentenceRecord parse_sentence_line(std::string_view line);
BitextRecord parse_bitext_line(std::string_view line);

std::string format_sentence_line(const SentenceRecord& record);
std::string format_bitext_line(const BitextRecord& record);

// Throws IoError for unreadable files and FormatError (naming path and
// line) for malformed records. Blank lines are skipped.
std::vector<SentenceRecord> read_sentence_records(const std::filesystem::path& path);
std::vector<BitextRecord> read_bitext_records(const std::filesystem::path& path);

void write_sentence_records(const std::filesystem::path& path,
                            const std::vector<SentenceRecord>& records);
void write_bitext_records(const std::filesystem::path& path,
                          const std::vector<BitextRecord>& records);

}  // namespace stprep
