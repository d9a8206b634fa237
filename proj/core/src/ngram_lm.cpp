#include "stprep/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "stprep/errors.hpp"
#include "stprep/numfmt.hpp"

namespace stprep {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

bool is_skippable_scalar(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\v' || cp == U'\f' || cp == U'　';
}

// Lossy scalar iteration: malformed bytes come back as U+FFFD so that
// tokenization is total even on dirty input.
std::size_t next_scalar(std::string_view s, std::size_t pos, char32_t* out) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(s[i]);
  };
  unsigned char b0 = byte(pos);
  if (b0 < 0x80) {
    *out = b0;
    return 1;
  }
  int len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
    min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
    min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
    min = 0x10000;
  } else {
    *out = 0xFFFD;
    return 1;
  }
  if (pos + len > s.size()) {
    *out = 0xFFFD;
    return 1;
  }
  for (int i = 1; i < len; ++i) {
    unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) {
      *out = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    *out = 0xFFFD;
    return 1;
  }
  *out = cp;
  return static_cast<std::size_t>(len);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizeMode::kWhitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_ascii_space(text[i])) ++i;
      std::size_t start = i;
      while (i < text.size() && !is_ascii_space(text[i])) ++i;
      if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    std::size_t len = next_scalar(text, i, &cp);
    if (!is_skippable_scalar(cp)) {
      if (cp == 0xFFFD && len == 1) {
        out.emplace_back("\xEF\xBF\xBD");  // malformed byte -> replacement char
      } else {
        out.emplace_back(text.substr(i, len));
      }
    }
    i += len;
  }
  return out;
}

TokenizeMode tokenize_mode_for(std::string_view lang) {
  return (lang == "ja" || lang == "zh") ? TokenizeMode::kCharacters
                                        : TokenizeMode::kWhitespace;
}

NGramCounts::NGramCounts(const NGramOptions& opts) : opts_(opts) {
  if (opts.order < 1) throw ParameterError("ngram order must be >= 1");
  grams_.resize(static_cast<std::size_t>(opts.order));
}

std::uint32_t NGramCounts::intern(const std::string& token) {
  if (token == NGramModel::kUnkToken) return NGramModel::kUnkId;
  if (token == NGramModel::kBosToken) return NGramModel::kBosId;
  if (token == NGramModel::kEosToken) return NGramModel::kEosId;
  auto it = word_ids_.find(token);
  if (it != word_ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(words_.size()) + 3;
  words_.push_back(token);
  word_ids_.emplace(token, id);
  return id;
}

void NGramCounts::add_sentence(std::span<const std::string> tokens) {
  const std::size_t pad = static_cast<std::size_t>(opts_.order) - 1;
  std::vector<std::uint32_t> seq(pad, NGramModel::kBosId);
  seq.reserve(pad + tokens.size());
  for (const auto& tok : tokens) seq.push_back(intern(tok));

  const std::size_t events =
      tokens.size() + (opts_.include_eos ? 1 : 0);
  Gram gram;
  for (std::size_t t = 0; t < events; ++t) {
    const std::uint32_t word =
        t < tokens.size() ? seq[pad + t] : NGramModel::kEosId;
    // Full marginal counting: each event feeds every context length, so
    // lower orders are consistent with their own direct counts.
    for (std::size_t k = 0; k < static_cast<std::size_t>(opts_.order); ++k) {
      gram.assign(seq.begin() + static_cast<std::ptrdiff_t>(pad + t - k),
                  seq.begin() + static_cast<std::ptrdiff_t>(pad + t));
      gram.push_back(word);
      ++grams_[k][gram];
    }
  }
}

void NGramCounts::merge(const NGramCounts& other) {
  if (!(opts_ == other.opts_)) {
    throw ParameterError("cannot merge ngram counts with different options");
  }
  std::vector<std::uint32_t> remap(other.words_.size() + 3);
  remap[0] = 0;
  remap[1] = 1;
  remap[2] = 2;
  for (std::size_t i = 0; i < other.words_.size(); ++i) {
    remap[i + 3] = intern(other.words_[i]);
  }
  Gram gram;
  for (std::size_t k = 0; k < grams_.size(); ++k) {
    for (const auto& [key, count] : other.grams_[k]) {
      gram.resize(key.size());
      for (std::size_t i = 0; i < key.size(); ++i) gram[i] = remap[key[i]];
      grams_[k][gram] += count;
    }
  }
}

NGramModel NGramCounts::finalize() const {
  if (grams_[0].empty()) {
    throw ParameterError("cannot train an ngram model on an empty corpus");
  }

  NGramModel model;
  model.opts_ = opts_;
  model.words_ = words_;
  std::sort(model.words_.begin(), model.words_.end());
  model.words_.erase(
      std::unique(model.words_.begin(), model.words_.end()),
      model.words_.end());
  model.word_ids_.reserve(model.words_.size());
  for (std::size_t i = 0; i < model.words_.size(); ++i) {
    model.word_ids_.emplace(model.words_[i],
                            static_cast<std::uint32_t>(i) + 3);
  }

  // Canonical ids are sorted, so identical aggregate counts serialize to
  // identical bytes no matter how the corpus was sharded.
  std::vector<std::uint32_t> remap(words_.size() + 3);
  remap[0] = 0;
  remap[1] = 1;
  remap[2] = 2;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    remap[i + 3] = model.word_ids_.at(words_[i]);
  }

  model.tables_.resize(grams_.size());
  Gram ctx;
  for (std::size_t k = 0; k < grams_.size(); ++k) {
    auto& table = model.tables_[k];
    for (const auto& [key, count] : grams_[k]) {
      ctx.resize(k);
      for (std::size_t i = 0; i < k; ++i) ctx[i] = remap[key[i]];
      auto& row = table[ctx];
      row.total += count;
      row.entries.emplace_back(remap[key.back()], count);
    }
    for (auto& [key, row] : table) {
      std::sort(row.entries.begin(), row.entries.end());
    }
  }
  return model;
}

std::uint64_t NGramModel::Row::count(std::uint32_t word) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), word,
      [](const auto& e, std::uint32_t w) { return e.first < w; });
  if (it != entries.end() && it->first == word) return it->second;
  return 0;
}

NGramModel NGramModel::train(
    const std::vector<std::vector<std::string>>& corpus,
    const NGramOptions& opts) {
  NGramCounts counts(opts);
  for (const auto& sentence : corpus) counts.add_sentence(sentence);
  return counts.finalize();
}

std::uint32_t NGramModel::token_id(std::string_view token) const {
  if (token == kUnkToken) return kUnkId;
  if (token == kBosToken) return kBosId;
  if (token == kEosToken) return kEosId;
  auto it = word_ids_.find(std::string(token));
  return it == word_ids_.end() ? kUnkId : it->second;
}

const std::string& NGramModel::token(std::uint32_t id) const {
  static const std::string kReserved[3] = {kUnkToken, kBosToken, kEosToken};
  if (id < 3) return kReserved[id];
  if (id - 3 >= words_.size()) throw ParameterError("token id out of range");
  return words_[id - 3];
}

double NGramModel::prob_ids(std::uint32_t word, const std::uint32_t* ctx,
                            std::size_t len) const {
  if (len == 0) {
    const Row& row = tables_[0].at({});
    const double n = static_cast<double>(row.total);
    const double t = static_cast<double>(row.entries.size());
    const double denom = n + t;
    const std::uint64_t c = row.count(word);
    double p = static_cast<double>(c) / denom;
    const std::size_t zero = vocab_size() - row.entries.size();
    if (c == 0) {
      p = (t / denom) / static_cast<double>(zero);
    } else if (zero == 0 && word == kUnkId) {
      p += t / denom;  // nowhere else for the novelty mass to live
    }
    return p;
  }
  auto it = tables_[len].find(std::vector<std::uint32_t>(ctx, ctx + len));
  if (it == tables_[len].end()) return prob_ids(word, ctx + 1, len - 1);
  const Row& row = it->second;
  const double lower = prob_ids(word, ctx + 1, len - 1);
  const double t = static_cast<double>(row.entries.size());
  return (static_cast<double>(row.count(word)) + t * lower) /
         (static_cast<double>(row.total) + t);
}

double NGramModel::prob(std::uint32_t word,
                        std::span<const std::uint32_t> context) const {
  const std::size_t max_len = static_cast<std::size_t>(opts_.order) - 1;
  std::size_t len = context.size();
  const std::uint32_t* ctx = context.data();
  if (len > max_len) {
    ctx += len - max_len;
    len = max_len;
  }
  return prob_ids(word, ctx, len);
}

double NGramModel::prob_tokens(const std::string& word,
                               const std::vector<std::string>& context) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(context.size());
  for (const auto& tok : context) ids.push_back(token_id(tok));
  return prob(token_id(word), ids);
}

double NGramModel::cross_entropy_bits(
    std::span<const std::string> tokens) const {
  const std::size_t pad = static_cast<std::size_t>(opts_.order) - 1;
  std::vector<std::uint32_t> seq(pad, kBosId);
  seq.reserve(pad + tokens.size());
  for (const auto& tok : tokens) seq.push_back(token_id(tok));

  std::size_t events = tokens.size() + (opts_.include_eos ? 1 : 0);
  bool forced_eos = false;
  if (events == 0) {
    events = 1;  // empty sentences score the EOS event alone
    forced_eos = true;
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < events; ++t) {
    const std::uint32_t word =
        (!forced_eos && t < tokens.size()) ? seq[pad + t] : kEosId;
    sum -= std::log2(prob_ids(word, seq.data() + t, pad));
  }
  return sum / static_cast<double>(events);
}

std::vector<std::vector<std::uint32_t>> NGramModel::observed_contexts(
    int length) const {
  if (length < 0 || length >= opts_.order) {
    throw ParameterError("context length out of range");
  }
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(tables_[static_cast<std::size_t>(length)].size());
  for (const auto& [key, row] : tables_[static_cast<std::size_t>(length)]) {
    out.push_back(key);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void NGramModel::dump(std::ostream& out) const {
  out << "stprep-ngram 1\n";
  out << "order " << opts_.order << "\n";
  out << "include_eos " << (opts_.include_eos ? 1 : 0) << "\n";
  out << "mode "
      << (opts_.mode == TokenizeMode::kWhitespace ? "whitespace" : "characters")
      << "\n";
  out << "words " << words_.size() << "\n";
  for (const auto& w : words_) out << w << "\n";

  std::size_t lines = 0;
  for (const auto& table : tables_) {
    for (const auto& [key, row] : table) lines += row.entries.size();
  }
  out << "grams " << lines << "\n";
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    std::vector<std::vector<std::uint32_t>> keys;
    keys.reserve(tables_[k].size());
    for (const auto& [key, row] : tables_[k]) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (const auto& key : keys) {
      const Row& row = tables_[k].at(key);
      for (const auto& [word, count] : row.entries) {
        out << (k + 1);
        for (std::uint32_t id : key) out << ' ' << id;
        out << ' ' << word << ' ' << count << "\n";
      }
    }
  }
}

NGramModel NGramModel::load(std::istream& in, const std::string& name) {
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError(name + ": " + what);
  };
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw fail(std::string("missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto keyed = [&](const char* key) -> std::string {
    next_line(key);
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0) {
      throw fail(std::string("expected '") + key + "' line, got '" + line + "'");
    }
    return line.substr(prefix.size());
  };
  auto to_count = [&](const std::string& s, const char* what) -> std::uint64_t {
    std::uint64_t value = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw fail(std::string("bad ") + what + " '" + s + "'");
      value = value * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (s.empty()) throw fail(std::string("bad ") + what);
    return value;
  };

  next_line("header");
  if (line != "stprep-ngram 1") throw fail("unrecognized header '" + line + "'");

  NGramModel model;
  model.opts_.order = static_cast<int>(to_count(keyed("order"), "order"));
  if (model.opts_.order < 1) throw fail("order must be >= 1");
  const std::string eos = keyed("include_eos");
  if (eos != "0" && eos != "1") throw fail("include_eos must be 0 or 1");
  model.opts_.include_eos = eos == "1";
  const std::string mode = keyed("mode");
  if (mode == "whitespace") {
    model.opts_.mode = TokenizeMode::kWhitespace;
  } else if (mode == "characters") {
    model.opts_.mode = TokenizeMode::kCharacters;
  } else {
    throw fail("unrecognized mode '" + mode + "'");
  }

  const std::uint64_t n_words = to_count(keyed("words"), "word count");
  model.words_.reserve(n_words);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    next_line("word");
    model.words_.push_back(line);
    if (i > 0 && !(model.words_[i - 1] < model.words_[i])) {
      throw fail("vocabulary must be strictly sorted");
    }
    model.word_ids_.emplace(line, static_cast<std::uint32_t>(i) + 3);
  }

  model.tables_.resize(static_cast<std::size_t>(model.opts_.order));
  const std::uint64_t n_grams = to_count(keyed("grams"), "gram count");
  std::vector<std::uint32_t> ctx;
  for (std::uint64_t i = 0; i < n_grams; ++i) {
    next_line("gram");
    std::istringstream fields(line);
    std::string field;
    std::vector<std::uint64_t> nums;
    while (fields >> field) nums.push_back(to_count(field, "gram field"));
    if (nums.size() < 3) throw fail("gram line too short: '" + line + "'");
    const std::uint64_t k = nums[0];
    if (k < 1 || k > static_cast<std::uint64_t>(model.opts_.order) ||
        nums.size() != k + 2) {
      throw fail("gram arity mismatch: '" + line + "'");
    }
    ctx.clear();
    for (std::uint64_t j = 1; j < k; ++j) {
      ctx.push_back(static_cast<std::uint32_t>(nums[j]));
    }
    const auto word = static_cast<std::uint32_t>(nums[k]);
    const std::uint64_t count = nums[k + 1];
    for (std::uint64_t j = 1; j <= k; ++j) {
      if (nums[j] >= model.words_.size() + 3) {
        throw fail("token id out of range: '" + line + "'");
      }
    }
    auto& row = model.tables_[static_cast<std::size_t>(k) - 1][ctx];
    row.total += count;
    row.entries.emplace_back(word, count);
  }
  for (auto& table : model.tables_) {
    for (auto& [key, row] : table) {
      std::sort(row.entries.begin(), row.entries.end());
    }
  }
  if (model.tables_[0].empty()) throw fail("model has no unigram counts");
  return model;
}

NGramModel train_lm(const std::vector<std::vector<std::string>>& corpus,
                    int order) {
  NGramOptions opts;
  opts.order = order;
  return NGramModel::train(corpus, opts);
}

void save_lm(const NGramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  model.dump(out);
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

NGramModel load_lm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return NGramModel::load(in, path.string());
}

}  // namespace stprep
