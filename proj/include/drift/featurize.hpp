#pragma once

#include "drift/corpus.hpp"
#include "drift/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace drift {

/// One embedding row per vocabulary id; trainable tables are updated by the
/// training loop through the featurizer pullback.
struct EmbeddingTable {
  MatX weights;  // vocab_size x dim
  bool trainable = true;

  int rows() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

/// Entries uniform in [-0.5/dim, 0.5/dim], seeded.
EmbeddingTable init_embedding(int vocab_size, int dim, std::uint64_t seed);

/// Text word-vector format: "word v1 v2 ... vd" per line. Words absent from
/// the vocabulary are skipped; a dimension mismatch throws.
void load_word_vectors(std::istream& in, const Vocabulary& vocab, EmbeddingTable& table);

struct FeatureVector {
  VecX values;
  std::string extractor_id;
};

/// Sum of embedding rows over token ids (unknown id for OOV); empty list
/// gives the zero vector.
VecX embed_sum(const TokenList& tokens, const Vocabulary& vocab, const EmbeddingTable& table);

/// |set(p) & set(h)| / |set(p) | set(h)|. Throws when both are empty.
double jaccard(const TokenList& p_tokens, const TokenList& h_tokens);

/// |lp - lh| / (lp + lh). Throws when both lengths are zero.
double length_diff(int lp, int lh);

/// 1.0 iff "not" or "n't" appears as a whole token.
double negation_flag(const TokenList& h_tokens);

FeatureVector hypo_features(const Example& ex, const Vocabulary& vocab, const EmbeddingTable& table);
FeatureVector cbow_features(const Example& ex, const Vocabulary& vocab, const EmbeddingTable& table);
FeatureVector hand_features(const Example& ex, const Vocabulary& vocab, const EmbeddingTable& table);
FeatureVector full_features(const Example& ex, const Vocabulary& vocab, const EmbeddingTable& table);

enum class Extractor { Hypo, Cbow, Hand, Full };

const std::string& extractor_id(Extractor kind);
Extractor extractor_from_id(const std::string& id);
int feature_dim(Extractor kind, int embed_dim);

/// Binds an extractor to a vocabulary and an owned embedding table.
struct Featurizer {
  Extractor kind = Extractor::Full;
  const Vocabulary* vocab = nullptr;
  EmbeddingTable table;

  int dim() const { return feature_dim(kind, table.dim()); }
  FeatureVector features(const Example& ex) const;

  /// Accumulates d(loss)/d(table) given d(loss)/d(features); grad must be
  /// shaped like table.weights.
  void accumulate_table_grad(const Example& ex, const VecX& dvalues, MatX& grad) const;
};

Featurizer make_featurizer(Extractor kind, const Vocabulary& vocab, int embed_dim,
                           std::uint64_t seed, bool trainable = true);

}  // namespace drift
