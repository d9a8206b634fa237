#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stprep/text_records.hpp"

namespace stprep {

// Assigns a language tag to a piece of text. Implementations must be
// deterministic; ties break toward the lexicographically smallest tag.
// External classifiers can be plugged in through this interface.
class LanguageClassifier {
 public:
  virtual ~LanguageClassifier() = default;
  virtual std::vector<std::string> languages() const = 0;
  virtual std::string classify(std::string_view text) const = 0;
};

// Built-in substitute: a multinomial character n-gram model (n = 1..3,
// add-one smoothing) per language, classification by maximum
// log-likelihood over the text's character n-grams.
class NGramLanguageClassifier final : public LanguageClassifier {
 public:
  // One seed corpus per language; every corpus must contribute at least one
  // character (throws ParameterError otherwise).
  static NGramLanguageClassifier train(
      const std::map<std::string, std::vector<std::string>>& seed_corpora);

  std::vector<std::string> languages() const override;
  std::string classify(std::string_view text) const override;

  // Add-one smoothed log-likelihood of text under one language's model.
  double log_likelihood(std::string_view text, const std::string& lang) const;

 private:
  static constexpr int kMaxOrder = 3;

  struct LangModel {
    std::string lang;
    // counts[n-1]: occurrence count per n-gram (key = scalar values).
    std::array<std::unordered_map<std::u32string, std::size_t>, 3> counts;
    std::array<std::size_t, 3> totals{};  // token count per order
  };

  std::vector<LangModel> models_;                 // sorted by language tag
  std::array<std::size_t, 3> vocab_sizes_{};      // distinct n-grams per order, all languages
};

struct LangFilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t rejected_lang = 0;   // classified as another language
  std::size_t rejected_empty = 0;  // empty text cannot be classified
};

// Keeps records whose predicted language equals expected_lang. Throws
// ParameterError when expected_lang is not one of the classifier's
// languages.
std::vector<SentenceRecord> language_filter(
    const std::vector<SentenceRecord>& records, const std::string& expected_lang,
    const LanguageClassifier& classifier, LangFilterReport* report = nullptr);

}  // namespace stprep
