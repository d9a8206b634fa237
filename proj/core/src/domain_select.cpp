#include "stprep/domain_select.hpp"

#include <algorithm>
#include <numeric>

#include "stprep/errors.hpp"

namespace stprep {

double moore_lewis_score(const NGramModel& in_domain,
                         const NGramModel& out_domain,
                         std::span<const std::string> tokens) {
  if (!(in_domain.options() == out_domain.options())) {
    throw ParameterError(
        "moore_lewis_score: in-domain and out-of-domain models were trained "
        "with different options");
  }
  return in_domain.cross_entropy_bits(tokens) -
         out_domain.cross_entropy_bits(tokens);
}

SelectResult select_by_score(std::span<const double> scores,
                             const SelectPolicy& policy) {
  SelectResult result;
  if (policy.mode == SelectMode::kThreshold) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] < policy.threshold) result.kept.push_back(i);
    }
    return result;
  }

  std::size_t k = policy.k;
  if (k > scores.size()) {
    k = scores.size();
    result.k_clamped = true;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  // stable partial ordering: ties keep the earlier sentence
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] < scores[b];
                   });
  order.resize(k);
  std::sort(order.begin(), order.end());
  result.kept = std::move(order);
  return result;
}

}  // namespace stprep
