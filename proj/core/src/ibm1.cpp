#include "stprep/ibm1.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "stprep/errors.hpp"
#include "stprep/ngram_lm.hpp"
#include "stprep/numfmt.hpp"

namespace stprep {
namespace {

struct TokenizedPair {
  std::vector<std::uint32_t> src;  // real source tokens; NULL is implicit
  std::vector<std::uint32_t> tgt;
};

std::uint32_t intern(std::vector<std::string>& tokens,
                     std::unordered_map<std::string, std::uint32_t>& ids,
                     const std::string& tok) {
  auto it = ids.find(tok);
  if (it != ids.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(tokens.size());
  tokens.push_back(tok);
  ids.emplace(tok, id);
  return id;
}

}  // namespace

std::uint32_t TranslationTable::src_id(std::string_view tok) const {
  auto it = src_ids_.find(std::string(tok));
  return it == src_ids_.end() ? npos32 : it->second;
}

std::uint32_t TranslationTable::tgt_id(std::string_view tok) const {
  auto it = tgt_ids_.find(std::string(tok));
  return it == tgt_ids_.end() ? npos32 : it->second;
}

double TranslationTable::prob_ids(std::uint32_t e, std::uint32_t f) const {
  if (e == npos32 || f == npos32) return kProbFloor;
  const RowRef& ref = rows_[e];
  const auto begin = row_tgts_.begin() + static_cast<std::ptrdiff_t>(ref.offset);
  const auto end = begin + static_cast<std::ptrdiff_t>(ref.len);
  auto it = std::lower_bound(begin, end, f);
  if (it == end || *it != f) return kProbFloor;
  return row_probs_[ref.offset + static_cast<std::size_t>(it - begin)];
}

double TranslationTable::prob(std::string_view src, std::string_view tgt) const {
  return prob_ids(src_id(src), tgt_id(tgt));
}

std::vector<std::pair<std::string, double>> TranslationTable::row(
    std::string_view src) const {
  std::vector<std::pair<std::string, double>> out;
  const std::uint32_t e = src_id(src);
  if (e == npos32) return out;
  const RowRef& ref = rows_[e];
  out.reserve(ref.len);
  for (std::size_t i = 0; i < ref.len; ++i) {
    out.emplace_back(tgt_tokens_[row_tgts_[ref.offset + i]],
                     row_probs_[ref.offset + i]);
  }
  return out;
}

TranslationTable train_model1(std::span<const BitextRecord> bitext,
                              int iterations,
                              const std::optional<DiagonalPrior>& diagonal,
                              TrainStats* stats, int threads) {
  if (bitext.empty()) throw ParameterError("train_model1: empty bitext");
  if (iterations < 1) throw ParameterError("train_model1: iterations must be >= 1");
  const double lambda = diagonal ? diagonal->lambda : 0.0;
  if (lambda < 0.0) throw ParameterError("train_model1: lambda must be >= 0");

  TranslationTable table;
  table.src_tokens_.push_back(TranslationTable::kNullToken);
  table.src_ids_.emplace(TranslationTable::kNullToken, 0u);

  std::vector<TokenizedPair> pairs;
  pairs.reserve(bitext.size());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cooc;
  std::vector<std::uint32_t> sent_src, sent_tgt;
  for (const auto& rec : bitext) {
    TokenizedPair pair;
    for (const auto& tok : tokenize(rec.src_text, TokenizeMode::kWhitespace)) {
      pair.src.push_back(intern(table.src_tokens_, table.src_ids_, tok));
    }
    for (const auto& tok : tokenize(rec.tgt_text, TokenizeMode::kWhitespace)) {
      pair.tgt.push_back(intern(table.tgt_tokens_, table.tgt_ids_, tok));
    }
    if (!pair.tgt.empty()) {
      sent_src.assign(pair.src.begin(), pair.src.end());
      sent_src.push_back(0);  // NULL co-occurs with every target token
      std::sort(sent_src.begin(), sent_src.end());
      sent_src.erase(std::unique(sent_src.begin(), sent_src.end()),
                     sent_src.end());
      sent_tgt.assign(pair.tgt.begin(), pair.tgt.end());
      std::sort(sent_tgt.begin(), sent_tgt.end());
      sent_tgt.erase(std::unique(sent_tgt.begin(), sent_tgt.end()),
                     sent_tgt.end());
      for (std::uint32_t e : sent_src) {
        for (std::uint32_t f : sent_tgt) cooc.emplace_back(e, f);
      }
    }
    pairs.push_back(std::move(pair));
  }
  std::sort(cooc.begin(), cooc.end());
  cooc.erase(std::unique(cooc.begin(), cooc.end()), cooc.end());
  if (cooc.empty()) {
    throw ParameterError("train_model1: no sentence pair has target tokens");
  }

  const std::size_t n_src = table.src_tokens_.size();
  table.rows_.assign(n_src, {});
  table.row_tgts_.reserve(cooc.size());
  table.row_probs_.assign(cooc.size(), 0.0);
  for (std::size_t i = 0; i < cooc.size();) {
    const std::uint32_t e = cooc[i].first;
    const std::size_t start = i;
    while (i < cooc.size() && cooc[i].first == e) {
      table.row_tgts_.push_back(cooc[i].second);
      ++i;
    }
    table.rows_[e] = {start, i - start};
  }
  for (const auto& ref : table.rows_) {
    if (ref.len == 0) continue;
    const double init = 1.0 / static_cast<double>(ref.len);
    std::fill_n(table.row_probs_.begin() + static_cast<std::ptrdiff_t>(ref.offset),
                ref.len, init);
  }

  // Flat position of (e, f); caller guarantees the pair is in the support.
  auto flat_index = [&](std::uint32_t e, std::uint32_t f) {
    const TranslationTable::RowRef& ref = table.rows_[e];
    const auto begin =
        table.row_tgts_.begin() + static_cast<std::ptrdiff_t>(ref.offset);
    auto it = std::lower_bound(begin, begin + static_cast<std::ptrdiff_t>(ref.len), f);
    return ref.offset + static_cast<std::size_t>(it - begin);
  };

  struct Accum {
    std::vector<double> counts;
    double ll = 0.0;
  };

  // E-step over one pair: posterior-weighted counts plus the pair's
  // log-likelihood under the current table.
  auto process_pair = [&](const TokenizedPair& pair, Accum& acc) {
    const std::size_t I = pair.src.size();
    const std::size_t J = pair.tgt.size();
    if (J == 0) return;
    std::vector<double> w(I + 1);
    std::vector<std::size_t> pos(I + 1);
    for (std::size_t j = 0; j < J; ++j) {
      const std::uint32_t f = pair.tgt[j];
      const double jr = static_cast<double>(j + 1) / static_cast<double>(J);
      double sum_u = 0.0;
      double denom = 0.0;
      for (std::size_t i = 0; i <= I; ++i) {
        const double ir =
            (i == 0 || I == 0) ? 0.0
                               : static_cast<double>(i) / static_cast<double>(I);
        const double u = std::exp(-lambda * std::abs(ir - jr));
        const std::uint32_t e = i == 0 ? 0u : pair.src[i - 1];
        pos[i] = flat_index(e, f);
        w[i] = u * table.row_probs_[pos[i]];
        sum_u += u;
        denom += w[i];
      }
      acc.ll += std::log(denom) - std::log(sum_u);
      for (std::size_t i = 0; i <= I; ++i) {
        acc.counts[pos[i]] += w[i] / denom;
      }
    }
  };

  // Pairs are consumed in fixed-size blocks and block results merged in
  // block order, so expected counts sum identically for any thread count.
  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (pairs.size() + kBlock - 1) / kBlock;
  const std::size_t n_workers = std::min<std::size_t>(
      std::max(threads, 1), n_blocks);

  std::vector<double> counts(table.row_probs_.size());
  if (stats) stats->log_likelihood.clear();

  for (int iter = 0; iter < iterations; ++iter) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double iter_ll = 0.0;

    if (n_workers <= 1) {
      // Same block-partial summation as the threaded path, so one worker
      // and many workers associate every floating-point sum identically.
      Accum acc;
      acc.counts.assign(counts.size(), 0.0);
      for (std::size_t b = 0; b < n_blocks; ++b) {
        std::fill(acc.counts.begin(), acc.counts.end(), 0.0);
        acc.ll = 0.0;
        const std::size_t lo = b * kBlock;
        const std::size_t hi = std::min(lo + kBlock, pairs.size());
        for (std::size_t i = lo; i < hi; ++i) process_pair(pairs[i], acc);
        for (std::size_t i = 0; i < counts.size(); ++i) {
          counts[i] += acc.counts[i];
        }
        iter_ll += acc.ll;
      }
    } else {
      std::atomic<std::size_t> next_block{0};
      std::size_t merge_turn = 0;
      std::mutex merge_mu;
      std::condition_variable merge_cv;

      auto worker = [&]() {
        Accum acc;
        acc.counts.assign(counts.size(), 0.0);
        while (true) {
          const std::size_t b = next_block.fetch_add(1);
          if (b >= n_blocks) break;
          std::fill(acc.counts.begin(), acc.counts.end(), 0.0);
          acc.ll = 0.0;
          const std::size_t lo = b * kBlock;
          const std::size_t hi = std::min(lo + kBlock, pairs.size());
          for (std::size_t i = lo; i < hi; ++i) process_pair(pairs[i], acc);

          std::unique_lock lock(merge_mu);
          merge_cv.wait(lock, [&] { return merge_turn == b; });
          for (std::size_t i = 0; i < counts.size(); ++i) {
            counts[i] += acc.counts[i];
          }
          iter_ll += acc.ll;
          ++merge_turn;
          merge_cv.notify_all();
        }
      };
      std::vector<std::thread> pool;
      pool.reserve(n_workers);
      for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    if (stats) stats->log_likelihood.push_back(iter_ll);

    for (const auto& ref : table.rows_) {
      if (ref.len == 0) continue;
      double total = 0.0;
      for (std::size_t i = 0; i < ref.len; ++i) total += counts[ref.offset + i];
      if (total <= 0.0) continue;  // source never saw a target token
      for (std::size_t i = 0; i < ref.len; ++i) {
        table.row_probs_[ref.offset + i] = counts[ref.offset + i] / total;
      }
    }
  }
  return table;
}

AlignmentResult align_viterbi(const TranslationTable& table,
                              const BitextRecord& pair) {
  const auto src = tokenize(pair.src_text, TokenizeMode::kWhitespace);
  const auto tgt = tokenize(pair.tgt_text, TokenizeMode::kWhitespace);
  if (tgt.empty()) {
    throw ParameterError("align_viterbi: target side has no tokens (" +
                         pair.id + ")");
  }
  AlignmentResult result;
  result.links.reserve(tgt.size());
  for (const auto& f : tgt) {
    const double w_null = table.prob(TranslationTable::kNullToken, f);
    double total = w_null;
    double best_w = -1.0;
    int best_i = -1;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double w = table.prob(src[i], f);
      total += w;
      if (w > best_w) {  // strict: earlier position wins ties
        best_w = w;
        best_i = static_cast<int>(i);
      }
    }
    AlignmentLink link;
    if (best_i >= 0 && best_w >= w_null) {  // NULL only when strictly better
      link.src = best_i;
      link.posterior = best_w / total;
    } else {
      link.src = -1;
      link.posterior = w_null / total;
    }
    result.links.push_back(link);
  }
  result.quality = alignment_quality(result);
  return result;
}

double alignment_quality(const AlignmentResult& result, double posterior_floor) {
  if (result.links.empty()) {
    throw ParameterError("alignment_quality: no links");
  }
  std::size_t aligned = 0;
  for (const auto& link : result.links) {
    if (link.src >= 0 && link.posterior >= posterior_floor) ++aligned;
  }
  return static_cast<double>(aligned) / static_cast<double>(result.links.size());
}

std::vector<std::size_t> filter_bottom_fraction(std::span<const double> qualities,
                                                double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ParameterError("filter_bottom_fraction: fraction must be in [0,1)");
  }
  const std::size_t k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(qualities.size())));
  std::vector<std::size_t> order(qualities.size());
  std::iota(order.begin(), order.end(), 0);
  // stable: equal qualities are dropped earliest-first
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return qualities[a] < qualities[b];
                   });
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(k),
                                order.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

void TranslationTable::dump(std::ostream& out) const {
  out << "stprep-ttable 1\n";
  std::vector<std::uint32_t> src_order(src_tokens_.size());
  std::iota(src_order.begin(), src_order.end(), 0);
  std::sort(src_order.begin(), src_order.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              return src_tokens_[a] < src_tokens_[b];
            });
  std::vector<std::size_t> entry;
  for (std::uint32_t e : src_order) {
    const RowRef& ref = rows_[e];
    entry.resize(ref.len);
    std::iota(entry.begin(), entry.end(), ref.offset);
    std::sort(entry.begin(), entry.end(), [&](std::size_t a, std::size_t b) {
      return tgt_tokens_[row_tgts_[a]] < tgt_tokens_[row_tgts_[b]];
    });
    for (std::size_t pos : entry) {
      out << src_tokens_[e] << '\t' << tgt_tokens_[row_tgts_[pos]] << '\t'
          << format_double(row_probs_[pos]) << "\n";
    }
  }
}

TranslationTable TranslationTable::load(std::istream& in,
                                        const std::string& name) {
  auto fail = [&](std::size_t lineno, const std::string& what) -> FormatError {
    return FormatError(name + ": line " + std::to_string(lineno) + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line)) throw FormatError(name + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "stprep-ttable 1") {
    throw FormatError(name + ": unrecognized header '" + line + "'");
  }

  TranslationTable table;
  table.src_tokens_.push_back(kNullToken);
  table.src_ids_.emplace(kNullToken, 0u);

  // (e, f, prob) with ids in file order; rows are rebuilt afterwards.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                   : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw fail(lineno, "expected e<TAB>f<TAB>prob");
    const std::string e = line.substr(0, t1);
    const std::string f = line.substr(t1 + 1, t2 - t1 - 1);
    const auto prob = parse_double(line.substr(t2 + 1));
    if (!prob || !(*prob >= 0.0) || !(*prob <= 1.0)) {
      throw fail(lineno, "probability must be a number in [0,1]");
    }
    entries.emplace_back(intern(table.src_tokens_, table.src_ids_, e),
                         intern(table.tgt_tokens_, table.tgt_ids_, f), *prob);
  }

  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              return std::pair(std::get<0>(a), std::get<1>(a)) <
                     std::pair(std::get<0>(b), std::get<1>(b));
            });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (std::get<0>(entries[i]) == std::get<0>(entries[i - 1]) &&
        std::get<1>(entries[i]) == std::get<1>(entries[i - 1])) {
      throw FormatError(name + ": duplicate entry for (" +
                        table.src_tokens_[std::get<0>(entries[i])] + ", " +
                        table.tgt_tokens_[std::get<1>(entries[i])] + ")");
    }
  }
  table.rows_.assign(table.src_tokens_.size(), {});
  table.row_tgts_.reserve(entries.size());
  table.row_probs_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size();) {
    const std::uint32_t e = std::get<0>(entries[i]);
    const std::size_t start = i;
    while (i < entries.size() && std::get<0>(entries[i]) == e) {
      table.row_tgts_.push_back(std::get<1>(entries[i]));
      table.row_probs_.push_back(std::get<2>(entries[i]));
      ++i;
    }
    table.rows_[e] = {start, i - start};
  }
  return table;
}

}  // namespace stprep
