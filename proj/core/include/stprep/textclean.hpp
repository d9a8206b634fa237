#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "stprep/text_records.hpp"

namespace stprep {

// Rule-based sentence cleaning: non-printing characters, URLs/markup and
// over-long tokens.
struct CleanRules {
  // Per-language override of the token length cap, counted in Unicode
  // scalar values; everything else uses default_max_token_chars.
  std::map<std::string, std::size_t> max_token_chars = {{"ja", 150}, {"zh", 150}};
  std::size_t default_max_token_chars = 50;
  bool reject_nonprinting = true;
  bool reject_urls = true;

  std::size_t max_chars_for(const std::string& lang) const;
  void validate() const;  // throws ParameterError
};

enum class RejectReason { kInvalid, kNonPrinting, kUrl, kTokenLength };
const char* to_string(RejectReason reason);

struct CleanReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t rejected_invalid = 0;
  std::size_t rejected_nonprinting = 0;
  std::size_t rejected_url = 0;
  std::size_t rejected_token_length = 0;

  std::size_t rejected_total() const {
    return rejected_invalid + rejected_nonprinting + rejected_url +
           rejected_token_length;
  }
  void count(RejectReason reason);
  void merge(const CleanReport& other);
};

// True for Unicode categories Cc (except U+0009), Cf, Co, Cs and Cn.
bool is_nonprinting(char32_t cp);

// Decodes UTF-8 into scalar values; false on malformed input.
bool decode_utf8(std::string_view text, std::u32string& out);

// Collapses runs of spaces/tabs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// First matching rejection reason for `text`, or nullopt if it passes.
// Checks run in order: malformed UTF-8, non-printing characters,
// URL / angle-bracket markup, token length for `lang`.
std::optional<RejectReason> check_text(std::string_view text,
                                       const std::string& lang,
                                       const CleanRules& rules);

std::optional<RejectReason> check_sentence(const SentenceRecord& record,
                                           const CleanRules& rules);

// Either side failing rejects the pair (first failing reason, source side
// checked first); an empty side counts as invalid.
std::optional<RejectReason> check_bitext_record(const BitextRecord& record,
                                                const CleanRules& rules);

// Kept records pass through whitespace-normalized; clean(clean(X)) == clean(X).
std::vector<SentenceRecord> clean(const std::vector<SentenceRecord>& records,
                                  const CleanRules& rules,
                                  CleanReport* report = nullptr);

// Both sides are checked with the side's own language; rejecting either
// side rejects the pair (counted once, by the first failing reason).
std::vector<BitextRecord> clean_bitext(const std::vector<BitextRecord>& records,
                                       const CleanRules& rules,
                                       CleanReport* report = nullptr);

// Shared key set for exact deduplication. First writer wins; safe for
// concurrent insertion.
class DedupSet {
 public:
  // True if this normalized key was not seen before.
  bool insert(std::string_view normalized_key);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_set<std::string> keys_;
};

// Keeps the first occurrence of each whitespace-normalized text, preserving
// order; case is significant.
std::vector<SentenceRecord> deduplicate(const std::vector<SentenceRecord>& records,
                                        std::size_t* removed = nullptr);

}  // namespace stprep
