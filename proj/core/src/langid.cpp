#include "stprep/langid.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stprep/errors.hpp"
#include "stprep/textclean.hpp"

namespace stprep {
namespace {

template <typename Fn>
void for_each_ngram(const std::u32string& scalars, int order, Fn&& fn) {
  if (scalars.size() < static_cast<std::size_t>(order)) return;
  for (std::size_t i = 0; i + order <= scalars.size(); ++i)
    fn(scalars.substr(i, order));
}

}  // namespace

NGramLanguageClassifier NGramLanguageClassifier::train(
    const std::map<std::string, std::vector<std::string>>& seed_corpora) {
  if (seed_corpora.empty())
    throw ParameterError("langid training needs at least one language");
  NGramLanguageClassifier clf;
  std::array<std::unordered_set<std::u32string>, 3> vocab;
  for (const auto& [lang, corpus] : seed_corpora) {  // std::map: sorted tags
    LangModel model;
    model.lang = lang;
    std::u32string scalars;
    for (const std::string& line : corpus) {
      if (!decode_utf8(line, scalars)) continue;
      for (int n = 1; n <= kMaxOrder; ++n) {
        for_each_ngram(scalars, n, [&](std::u32string gram) {
          ++model.counts[n - 1][gram];
          ++model.totals[n - 1];
          vocab[n - 1].insert(std::move(gram));
        });
      }
    }
    if (model.totals[0] == 0)
      throw ParameterError("empty seed corpus for language " + lang);
    clf.models_.push_back(std::move(model));
  }
  for (int n = 0; n < kMaxOrder; ++n)
    clf.vocab_sizes_[n] = vocab[n].size() + 1;  // +1 reserves an unseen slot
  return clf;
}

std::vector<std::string> NGramLanguageClassifier::languages() const {
  std::vector<std::string> tags;
  tags.reserve(models_.size());
  for (const LangModel& m : models_) tags.push_back(m.lang);
  return tags;
}

double NGramLanguageClassifier::log_likelihood(std::string_view text,
                                               const std::string& lang) const {
  const auto it = std::find_if(models_.begin(), models_.end(),
                               [&](const LangModel& m) { return m.lang == lang; });
  if (it == models_.end())
    throw ParameterError("unknown language tag: " + lang);
  std::u32string scalars;
  if (!decode_utf8(text, scalars)) return 0.0;
  double ll = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const auto& counts = it->counts[n - 1];
    const double denom = static_cast<double>(it->totals[n - 1]) +
                         static_cast<double>(vocab_sizes_[n - 1]);
    for_each_ngram(scalars, n, [&](const std::u32string& gram) {
      const auto hit = counts.find(gram);
      const double c = hit != counts.end() ? static_cast<double>(hit->second) : 0.0;
      ll += std::log((c + 1.0) / denom);
    });
  }
  return ll;
}

std::string NGramLanguageClassifier::classify(std::string_view text) const {
  std::string best = models_.front().lang;
  double best_ll = log_likelihood(text, best);
  for (std::size_t i = 1; i < models_.size(); ++i) {
    const double ll = log_likelihood(text, models_[i].lang);
    if (ll > best_ll) {  // ties keep the lexicographically smaller tag
      best_ll = ll;
      best = models_[i].lang;
    }
  }
  return best;
}

std::vector<SentenceRecord> language_filter(
    const std::vector<SentenceRecord>& records, const std::string& expected_lang,
    const LanguageClassifier& classifier, LangFilterReport* report) {
  const auto tags = classifier.languages();
  if (std::find(tags.begin(), tags.end(), expected_lang) == tags.end())
    throw ParameterError("unknown expected_lang: " + expected_lang);
  LangFilterReport local;
  std::vector<SentenceRecord> kept;
  kept.reserve(records.size());
  for (const SentenceRecord& rec : records) {
    ++local.input;
    if (rec.text.empty()) {
      ++local.rejected_empty;
      continue;
    }
    if (classifier.classify(rec.text) != expected_lang) {
      ++local.rejected_lang;
      continue;
    }
    ++local.kept;
    kept.push_back(rec);
  }
  if (report) {
    report->input += local.input;
    report->kept += local.kept;
    report->rejected_lang += local.rejected_lang;
    report->rejected_empty += local.rejected_empty;
  }
  return kept;
}

}  // namespace stprep
