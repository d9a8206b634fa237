#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stprep/text_records.hpp"

namespace stprep {

// fast_align-style diagonal weighting exp(-lambda*|i/I - j/J|) applied to
// the expected counts. lambda = 0 gives uniform weights and is bitwise
// identical to plain Model 1 (same code path).
struct DiagonalPrior {
  double lambda = 0.0;
};

struct TrainStats {
  // Corpus log-likelihood under the parameters entering each iteration.
  std::vector<double> log_likelihood;
};

// Lexical translation probabilities t(f|e) over the co-occurrence support,
// with a reserved NULL source token prepended to every sentence. Rows sum
// to 1 within 1e-9 after every EM iteration; unseen pairs score the floor.
class TranslationTable {
 public:
  static constexpr const char* kNullToken = "<NULL>";
  static constexpr double kProbFloor = 1e-12;

  double prob(std::string_view src, std::string_view tgt) const;

  std::size_t source_count() const { return src_tokens_.size(); }
  const std::vector<std::string>& source_tokens() const { return src_tokens_; }
  // Row of (target token, probability) for one source token, sorted by
  // target id; empty for unknown sources.
  std::vector<std::pair<std::string, double>> row(std::string_view src) const;

  // Versioned text dump, one `e<TAB>f<TAB>prob` line per entry sorted by
  // (e, f); probabilities round-trip exactly.
  void dump(std::ostream& out) const;
  static TranslationTable load(std::istream& in,
                               const std::string& name = "<stream>");

 private:
  friend TranslationTable train_model1(std::span<const BitextRecord>, int,
                                       const std::optional<DiagonalPrior>&,
                                       TrainStats*, int);

  struct RowRef {
    std::size_t offset = 0;
    std::size_t len = 0;
  };

  std::uint32_t src_id(std::string_view tok) const;   // npos32 when unknown
  std::uint32_t tgt_id(std::string_view tok) const;
  double prob_ids(std::uint32_t e, std::uint32_t f) const;

  static constexpr std::uint32_t npos32 = 0xFFFFFFFFu;

  std::vector<std::string> src_tokens_;  // index 0 is kNullToken
  std::vector<std::string> tgt_tokens_;
  std::unordered_map<std::string, std::uint32_t> src_ids_;
  std::unordered_map<std::string, std::uint32_t> tgt_ids_;
  std::vector<RowRef> rows_;             // per source id
  std::vector<std::uint32_t> row_tgts_;  // flattened, sorted within a row
  std::vector<double> row_probs_;
};

// EM training. Source/target text is whitespace-tokenized; every source
// sentence gets the NULL token at position 0. Expected counts accumulate
// over fixed-size blocks of sentence pairs that are merged in block order,
// so the result is bitwise identical for any thread count.
// Throws ParameterError on empty bitext or iterations < 1.
TranslationTable train_model1(
    std::span<const BitextRecord> bitext, int iterations,
    const std::optional<DiagonalPrior>& diagonal = std::nullopt,
    TrainStats* stats = nullptr, int threads = 1);

struct AlignmentLink {
  int src = -1;        // 0-based source token index, -1 for NULL
  double posterior = 0.0;
};

struct AlignmentResult {
  std::vector<AlignmentLink> links;  // one per target token
  double quality = 0.0;              // at the default 0.5 posterior floor
};

// Per-target-token argmax link under the table with a uniform position
// prior. Ties go to the smallest source position; NULL wins only when
// strictly better than every real candidate. Unseen pairs use the floor.
// Throws ParameterError when the target side has no tokens.
AlignmentResult align_viterbi(const TranslationTable& table,
                              const BitextRecord& pair);

// Fraction of target tokens with a non-NULL link at or above the floor.
// Throws ParameterError on empty links.
double alignment_quality(const AlignmentResult& result,
                         double posterior_floor = 0.5);

// Indices (ascending) of the pairs kept after dropping the
// floor(fraction*N) lowest-quality pairs. Equal qualities are removed
// earliest-first, so the drop set is a prefix of the stable quality order.
// fraction must lie in [0,1).
std::vector<std::size_t> filter_bottom_fraction(std::span<const double> qualities,
                                                double fraction = 0.2);

}  // namespace stprep
