#pragma once

#include "drift/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace drift {

using TokenList = std::vector<std::string>;

/// One premise/hypothesis pair. cheat_token records which label word was
/// prepended by the bias injector, if any.
struct Example {
  TokenList premise;
  TokenList hypothesis;
  Label label = Label::Entailment;
  std::optional<Label> cheat_token;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Lowercases, splits on whitespace, splits punctuation characters off as
/// separate tokens, and splits the contraction suffix "n't" as its own token.
TokenList tokenize(std::string_view text);

/// The four words that must always be in the vocabulary: the three label
/// words used by the cheat injector plus the "and" connector.
inline constexpr std::array<std::string_view, 4> kSpecialWords = {
    "entailment", "contradiction", "neutral", "and"};

struct Vocabulary {
  static constexpr std::string_view kUnknownToken = "<unk>";

  std::vector<std::string> id_to_token;  // id 0 is the unknown token
  std::unordered_map<std::string, int> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int unk_id() const { return 0; }

  int id(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? 0 : it->second;
  }
  const std::string& token(int id) const { return id_to_token.at(static_cast<std::size_t>(id)); }
};

/// Tokens occurring >= min_count times plus the special words; ids assigned
/// by (count descending, token lexicographic) after the unknown token at 0.
Vocabulary build_vocab(const Dataset& dataset, int min_count);

std::uint64_t vocab_hash(const Vocabulary& vocab);

void save_vocab(const Vocabulary& vocab, std::ostream& out);
Vocabulary load_vocab(std::istream& in);

/// SNLI-style TSV: header row names gold_label/sentence1/sentence2 (extra
/// columns ignored); rows with gold_label "-" are skipped.
Dataset parse_snli_tsv(std::istream& in, std::string name = "");

/// One JSON object per line with the same three field names.
Dataset parse_jsonl(std::istream& in, std::string name = "");

void write_tsv(const Dataset& dataset, std::ostream& out);
void write_jsonl(const Dataset& dataset, std::ostream& out);

/// Balanced three-way pair task over antonym-paired content tokens
/// w1..w_vocab_size. The label is decidable from the tokens alone:
/// hypothesis subset of premise -> Entailment, any hypothesis token an
/// antonym of a premise token -> Contradiction, else Neutral.
Dataset generate_synthetic_task(int n, int vocab_size, std::uint64_t seed);

struct SplitResult {
  Dataset train;
  Dataset dev;
  Dataset test;
};

/// Seeded shuffle then contiguous slices; floor-based sizes with the
/// remainder going to train. Throws if any split would be empty.
SplitResult split(const Dataset& dataset, double frac_train, double frac_dev, double frac_test,
                  std::uint64_t seed);

}  // namespace drift
