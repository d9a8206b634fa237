#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stprep {

enum class TokenizeMode { kWhitespace, kCharacters };

// Whitespace splitting, or one token per Unicode scalar (whitespace
// dropped) for unsegmented scripts.
std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode);

// ja|zh -> kCharacters, everything else kWhitespace.
TokenizeMode tokenize_mode_for(std::string_view lang);

struct NGramOptions {
  int order = 3;
  // When set, the sentence-final EOS event is part of both training counts
  // and scoring; empty sentences always score the EOS event alone.
  bool include_eos = true;
  TokenizeMode mode = TokenizeMode::kWhitespace;

  friend bool operator==(const NGramOptions&, const NGramOptions&) = default;
};

namespace detail {

struct IdSeqHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (std::uint32_t x : v) {
      h ^= x;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace detail

class NGramModel;

// Raw k-gram counts (k = 1..order) with BOS-padded contexts. Counting is
// associative: accumulating shards and merging gives the same model as a
// single pass.
class NGramCounts {
 public:
  explicit NGramCounts(const NGramOptions& opts);

  void add_sentence(std::span<const std::string> tokens);
  void merge(const NGramCounts& other);  // throws ParameterError on option mismatch

  const NGramOptions& options() const { return opts_; }
  NGramModel finalize() const;

 private:
  friend class NGramModel;
  using Gram = std::vector<std::uint32_t>;

  std::uint32_t intern(const std::string& token);

  NGramOptions opts_;
  std::vector<std::string> words_;  // local ids 3.., first-seen order
  std::unordered_map<std::string, std::uint32_t> word_ids_;
  // grams_[k-1]: counts of k-grams (context + word), local ids.
  std::vector<std::unordered_map<Gram, std::uint64_t, detail::IdSeqHash>> grams_;
};

// Interpolated Witten-Bell n-gram model.
//
// For a context h with total count N(h) and T(h) distinct continuations:
//   p(w|h) = (c(h,w) + T(h) * p(w|tail(h))) / (N(h) + T(h))
// and an unobserved context falls through to its tail. At the unigram
// level, seen words get c(w)/(N+T) and the reserved mass T/(N+T) is split
// evenly over the zero-count vocabulary entries (UNK absorbs it if none
// remain), so every conditional sums to exactly 1 over the vocabulary.
// Unknown tokens map to the reserved UNK entry.
class NGramModel {
 public:
  static constexpr std::uint32_t kUnkId = 0;
  static constexpr std::uint32_t kBosId = 1;
  static constexpr std::uint32_t kEosId = 2;
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kBosToken = "<s>";
  static constexpr const char* kEosToken = "</s>";

  // Throws ParameterError on an empty corpus (no scorable events).
  static NGramModel train(const std::vector<std::vector<std::string>>& corpus,
                          const NGramOptions& opts);

  int order() const { return opts_.order; }
  const NGramOptions& options() const { return opts_; }

  // Vocabulary size including the three reserved entries.
  std::size_t vocab_size() const { return words_.size() + 3; }
  std::uint32_t token_id(std::string_view token) const;  // kUnkId when unseen
  const std::string& token(std::uint32_t id) const;

  // p(word | context); context is most-recent-last and may be any length up
  // to order-1 (longer contexts are truncated to the most recent).
  double prob(std::uint32_t word, std::span<const std::uint32_t> context) const;
  double prob_tokens(const std::string& word,
                     const std::vector<std::string>& context) const;

  // Mean -log2 p over the sentence's events (the words plus EOS when the
  // model includes it; an empty sentence scores EOS alone).
  double cross_entropy_bits(std::span<const std::string> tokens) const;

  // Observed contexts of the given length, for audit and tests.
  std::vector<std::vector<std::uint32_t>> observed_contexts(int length) const;

  // Versioned text dump; loading evaluates identically on all sentences.
  void dump(std::ostream& out) const;
  static NGramModel load(std::istream& in, const std::string& name = "<stream>");

 private:
  friend class NGramCounts;

  struct Row {
    std::uint64_t total = 0;
    std::vector<std::pair<std::uint32_t, std::uint64_t>> entries;  // sorted by word id
    std::uint64_t count(std::uint32_t word) const;
  };
  using ContextMap =
      std::unordered_map<std::vector<std::uint32_t>, Row, detail::IdSeqHash>;

  double prob_ids(std::uint32_t word, const std::uint32_t* ctx,
                  std::size_t len) const;

  NGramOptions opts_;
  std::vector<std::string> words_;  // sorted; global id = index + 3
  std::unordered_map<std::string, std::uint32_t> word_ids_;
  std::vector<ContextMap> tables_;  // tables_[k]: contexts of length k
};

// Convenience wrappers over NGramCounts/NGramModel.
NGramModel train_lm(const std::vector<std::vector<std::string>>& corpus,
                    int order);
void save_lm(const NGramModel& model, const std::filesystem::path& path);
NGramModel load_lm(const std::filesystem::path& path);

}  // namespace stprep
