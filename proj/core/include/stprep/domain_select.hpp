#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stprep/ngram_lm.hpp"

namespace stprep {

// Cross-entropy difference H_in(s) - H_out(s) in bits per token. Lower
// means closer to the in-domain model. The two models must agree on
// order, EOS handling and tokenize mode; otherwise the per-token averages
// are not comparable and this throws ParameterError. Swapping the models
// negates the score exactly (same subtraction in IEEE arithmetic).
double moore_lewis_score(const NGramModel& in_domain,
                         const NGramModel& out_domain,
                         std::span<const std::string> tokens);

enum class SelectMode { kTopK, kThreshold };

struct SelectPolicy {
  SelectMode mode = SelectMode::kTopK;
  std::size_t k = 0;         // kTopK: number of sentences to keep
  double threshold = 0.0;    // kThreshold: keep scores strictly below this
};

struct SelectResult {
  std::vector<std::size_t> kept;  // indices into the scored input, ascending
  bool k_clamped = false;         // k exceeded the candidate count
};

// Picks sentences by score. Top-k keeps the k lowest scores with ties
// broken toward the earlier sentence; the returned indices are in input
// order either way. k larger than the input is clamped (flagged in the
// result), never an error.
SelectResult select_by_score(std::span<const double> scores,
                             const SelectPolicy& policy);

}  // namespace stprep
