#include "stprep/textclean.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "stprep/errors.hpp"

namespace stprep {
namespace {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

constexpr CodepointRange kNonPrintingRanges[] = {
#include "nonprinting_ranges.inc"
};

bool is_ws(char c) { return c == ' ' || c == '\t'; }

// Whitespace-separated tokens of the normalized text, as string views.
std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_ws(text[i])) ++i;
    if (i > begin) tokens.push_back(text.substr(begin, i - begin));
  }
  return tokens;
}

std::size_t scalar_count(std::string_view token) {
  std::size_t n = 0;
  for (char c : token)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;  // non-continuation
  return n;
}

bool has_url_or_markup(std::string_view text) {
  if (text.find("http://") != std::string_view::npos) return true;
  if (text.find("https://") != std::string_view::npos) return true;
  const auto open = text.find('<');
  return open != std::string_view::npos &&
         text.find('>', open + 1) != std::string_view::npos;
}

}  // namespace

bool is_nonprinting(char32_t cp) {
  const auto* end = std::end(kNonPrintingRanges);
  const auto* it = std::upper_bound(
      std::begin(kNonPrintingRanges), end, cp,
      [](char32_t value, const CodepointRange& r) { return value < r.first; });
  if (it == std::begin(kNonPrintingRanges)) return false;
  --it;
  return cp >= it->first && cp <= it->last;
}

bool decode_utf8(std::string_view text, std::u32string& out) {
  out.clear();
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len;
    char32_t cp;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates and out-of-range values.
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    out.push_back(cp);
    i += len;
  }
  return true;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ws(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::size_t CleanRules::max_chars_for(const std::string& lang) const {
  const auto it = max_token_chars.find(lang);
  return it != max_token_chars.end() ? it->second : default_max_token_chars;
}

void CleanRules::validate() const {
  if (default_max_token_chars == 0)
    throw ParameterError("token length threshold must be positive");
  for (const auto& [lang, limit] : max_token_chars)
    if (limit == 0)
      throw ParameterError("token length threshold for " + lang +
                           " must be positive");
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kInvalid: return "invalid";
    case RejectReason::kNonPrinting: return "nonprinting";
    case RejectReason::kUrl: return "url";
    case RejectReason::kTokenLength: return "token_length";
  }
  return "unknown";
}

void CleanReport::count(RejectReason reason) {
  switch (reason) {
    case RejectReason::kInvalid: ++rejected_invalid; break;
    case RejectReason::kNonPrinting: ++rejected_nonprinting; break;
    case RejectReason::kUrl: ++rejected_url; break;
    case RejectReason::kTokenLength: ++rejected_token_length; break;
  }
}

void CleanReport::merge(const CleanReport& other) {
  input += other.input;
  kept += other.kept;
  rejected_invalid += other.rejected_invalid;
  rejected_nonprinting += other.rejected_nonprinting;
  rejected_url += other.rejected_url;
  rejected_token_length += other.rejected_token_length;
}

std::optional<RejectReason> check_text(std::string_view text,
                                       const std::string& lang,
                                       const CleanRules& rules) {
  rules.validate();
  std::u32string scalars;
  if (!decode_utf8(text, scalars)) return RejectReason::kInvalid;
  if (rules.reject_nonprinting) {
    for (char32_t cp : scalars)
      if (is_nonprinting(cp)) return RejectReason::kNonPrinting;
  }
  if (rules.reject_urls && has_url_or_markup(text)) return RejectReason::kUrl;
  const std::size_t limit = rules.max_chars_for(lang);
  for (std::string_view token : split_tokens(text))
    if (scalar_count(token) > limit) return RejectReason::kTokenLength;
  return std::nullopt;
}

std::optional<RejectReason> check_sentence(const SentenceRecord& record,
                                           const CleanRules& rules) {
  return check_text(record.text, record.lang, rules);
}

std::optional<RejectReason> check_bitext_record(const BitextRecord& record,
                                                const CleanRules& rules) {
  auto reason = check_text(record.src_text, record.src_lang, rules);
  if (!reason) reason = check_text(record.tgt_text, record.tgt_lang, rules);
  if (!reason && (record.src_text.empty() || record.tgt_text.empty()))
    reason = RejectReason::kInvalid;  // both sides must be non-empty
  return reason;
}

std::vector<SentenceRecord> clean(const std::vector<SentenceRecord>& records,
                                  const CleanRules& rules, CleanReport* report) {
  CleanReport local;
  std::vector<SentenceRecord> kept;
  kept.reserve(records.size());
  for (const SentenceRecord& rec : records) {
    ++local.input;
    if (const auto reason = check_sentence(rec, rules)) {
      local.count(*reason);
      continue;
    }
    ++local.kept;
    kept.push_back({rec.id, rec.lang, normalize_whitespace(rec.text)});
  }
  if (report) report->merge(local);
  return kept;
}

std::vector<BitextRecord> clean_bitext(const std::vector<BitextRecord>& records,
                                       const CleanRules& rules,
                                       CleanReport* report) {
  CleanReport local;
  std::vector<BitextRecord> kept;
  kept.reserve(records.size());
  for (const BitextRecord& rec : records) {
    ++local.input;
    if (const auto reason = check_bitext_record(rec, rules)) {
      local.count(*reason);
      continue;
    }
    ++local.kept;
    kept.push_back({rec.id, rec.src_lang, normalize_whitespace(rec.src_text),
                    rec.tgt_lang, normalize_whitespace(rec.tgt_text)});
  }
  if (report) report->merge(local);
  return kept;
}

bool DedupSet::insert(std::string_view normalized_key) {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_.emplace(normalized_key).second;
}

std::size_t DedupSet::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_.size();
}

std::vector<SentenceRecord> deduplicate(const std::vector<SentenceRecord>& records,
                                        std::size_t* removed) {
  DedupSet seen;
  std::vector<SentenceRecord> out;
  out.reserve(records.size());
  for (const SentenceRecord& rec : records) {
    if (seen.insert(normalize_whitespace(rec.text)))
      out.push_back(rec);
  }
  if (removed) *removed = records.size() - out.size();
  return out;
}

}  // namespace stprep
