#include "drift/featurize.hpp"

#include "drift/rng.hpp"

#include <istream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace drift {

namespace {

std::unordered_set<std::string> token_set(const TokenList& tokens) {
  return std::unordered_set<std::string>(tokens.begin(), tokens.end());
}

// Hypothesis tokens partitioned by premise-set membership, instance-wise:
// duplicated overlapping tokens are summed as many times as they appear.
void partition_hypothesis(const Example& ex, TokenList& overlap, TokenList& unique) {
  const auto prem = token_set(ex.premise);
  for (const std::string& t : ex.hypothesis) {
    (prem.count(t) ? overlap : unique).push_back(t);
  }
}

}  // namespace

EmbeddingTable init_embedding(int vocab_size, int dim, std::uint64_t seed) {
  if (vocab_size < 1 || dim < 1) throw std::invalid_argument("embedding dims must be >= 1");
  EmbeddingTable table;
  table.weights.resize(vocab_size, dim);
  const double limit = 0.5 / static_cast<double>(dim);
  Rng rng(seed);
  for (int r = 0; r < vocab_size; ++r) {
    for (int c = 0; c < dim; ++c) table.weights(r, c) = uniform_range(rng, -limit, limit);
  }
  return table;
}

void load_word_vectors(std::istream& in, const Vocabulary& vocab, EmbeddingTable& table) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> values;
    double v = 0;
    while (ss >> v) values.push_back(v);
    if (static_cast<int>(values.size()) != table.dim()) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": word vector for \"" + word +
                               "\" has dimension " + std::to_string(values.size()) +
                               ", expected " + std::to_string(table.dim()));
    }
    auto it = vocab.token_to_id.find(word);
    if (it == vocab.token_to_id.end()) continue;
    for (int c = 0; c < table.dim(); ++c) table.weights(it->second, c) = values[static_cast<std::size_t>(c)];
  }
}

VecX embed_sum(const TokenList& tokens, const Vocabulary& vocab, const EmbeddingTable& table) {
  VecX sum = VecX::Zero(table.dim());
  for (const std::string& t : tokens) sum += table.weights.row(vocab.id(t)).transpose();
  return sum;
}

double jaccard(const TokenList& p_tokens, const TokenList& h_tokens) {
  const auto p = token_set(p_tokens);
  const auto h = token_set(h_tokens);
  std::size_t inter = 0;
  for (const std::string& t : h) inter += p.count(t);
  const std::size_t uni = p.size() + h.size() - inter;
  if (uni == 0) throw std::runtime_error("jaccard undefined for two empty token lists");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double length_diff(int lp, int lh) {
  if (lp + lh <= 0) throw std::runtime_error("length_diff undefined for two empty sentences");
  return std::abs(lp - lh) / static_cast<double>(lp + lh);
}

double negation_flag(const TokenList& h_tokens) {
  for (const std::string& t : h_tokens) {
    if (t == "not" || t == "n't") return 1.0;
  }
  return 0.0;
}

FeatureVector hypo_features(const Example& ex, const Vocabulary& vocab,
                            const EmbeddingTable& table) {
  return FeatureVector{embed_sum(ex.hypothesis, vocab, table), extractor_id(Extractor::Hypo)};
}

namespace {

VecX interaction_features(const Example& ex, const Vocabulary& vocab, const EmbeddingTable& table) {
  const int d = table.dim();
  const VecX ep = embed_sum(ex.premise, vocab, table);
  const VecX eh = embed_sum(ex.hypothesis, vocab, table);
  VecX out(4 * d);
  out.segment(0, d) = ep;
  out.segment(d, d) = eh;
  out.segment(2 * d, d) = ep - eh;
  out.segment(3 * d, d) = ep.cwiseProduct(eh);
  return out;
}

}  // namespace

FeatureVector cbow_features(const Example& ex, const Vocabulary& vocab,
                            const EmbeddingTable& table) {
  return FeatureVector{interaction_features(ex, vocab, table), extractor_id(Extractor::Cbow)};
}

FeatureVector full_features(const Example& ex, const Vocabulary& vocab,
                            const EmbeddingTable& table) {
  return FeatureVector{interaction_features(ex, vocab, table), extractor_id(Extractor::Full)};
}

FeatureVector hand_features(const Example& ex, const Vocabulary& vocab,
                            const EmbeddingTable& table) {
  const int d = table.dim();
  TokenList overlap, unique;
  partition_hypothesis(ex, overlap, unique);
  VecX out(2 * d + 3);
  out.segment(0, d) = embed_sum(overlap, vocab, table);
  out.segment(d, d) = embed_sum(unique, vocab, table);
  out(2 * d) = jaccard(ex.premise, ex.hypothesis);
  out(2 * d + 1) = negation_flag(ex.hypothesis);
  out(2 * d + 2) = length_diff(static_cast<int>(ex.premise.size()),
                               static_cast<int>(ex.hypothesis.size()));
  return FeatureVector{std::move(out), extractor_id(Extractor::Hand)};
}

const std::string& extractor_id(Extractor kind) {
  static const std::string ids[4] = {"hypo", "cbow", "hand", "full"};
  return ids[static_cast<int>(kind)];
}

Extractor extractor_from_id(const std::string& id) {
  if (id == "hypo") return Extractor::Hypo;
  if (id == "cbow") return Extractor::Cbow;
  if (id == "hand") return Extractor::Hand;
  if (id == "full") return Extractor::Full;
  throw std::invalid_argument("unknown extractor \"" + id + "\"");
}

int feature_dim(Extractor kind, int embed_dim) {
  switch (kind) {
    case Extractor::Hypo: return embed_dim;
    case Extractor::Cbow: return 4 * embed_dim;
    case Extractor::Hand: return 2 * embed_dim + 3;
    case Extractor::Full: return 4 * embed_dim;
  }
  throw std::logic_error("unreachable");
}

FeatureVector Featurizer::features(const Example& ex) const {
  switch (kind) {
    case Extractor::Hypo: return hypo_features(ex, *vocab, table);
    case Extractor::Cbow: return cbow_features(ex, *vocab, table);
    case Extractor::Hand: return hand_features(ex, *vocab, table);
    case Extractor::Full: return full_features(ex, *vocab, table);
  }
  throw std::logic_error("unreachable");
}

void Featurizer::accumulate_table_grad(const Example& ex, const VecX& dvalues, MatX& grad) const {
  const int d = table.dim();
  switch (kind) {
    case Extractor::Hypo: {
      for (const std::string& t : ex.hypothesis) grad.row(vocab->id(t)) += dvalues.transpose();
      return;
    }
    case Extractor::Cbow:
    case Extractor::Full: {
      const VecX ep = embed_sum(ex.premise, *vocab, table);
      const VecX eh = embed_sum(ex.hypothesis, *vocab, table);
      const VecX dp = dvalues.segment(0, d) + dvalues.segment(2 * d, d) +
                      dvalues.segment(3 * d, d).cwiseProduct(eh);
      const VecX dh = dvalues.segment(d, d) - dvalues.segment(2 * d, d) +
                      dvalues.segment(3 * d, d).cwiseProduct(ep);
      for (const std::string& t : ex.premise) grad.row(vocab->id(t)) += dp.transpose();
      for (const std::string& t : ex.hypothesis) grad.row(vocab->id(t)) += dh.transpose();
      return;
    }
    case Extractor::Hand: {
      TokenList overlap, unique;
      partition_hypothesis(ex, overlap, unique);
      // The three scalar features do not depend on the table.
      for (const std::string& t : overlap) {
        grad.row(vocab->id(t)) += dvalues.segment(0, d).transpose();
      }
      for (const std::string& t : unique) {
        grad.row(vocab->id(t)) += dvalues.segment(d, d).transpose();
      }
      return;
    }
  }
  throw std::logic_error("unreachable");
}

Featurizer make_featurizer(Extractor kind, const Vocabulary& vocab, int embed_dim,
                           std::uint64_t seed, bool trainable) {
  Featurizer f;
  f.kind = kind;
  f.vocab = &vocab;
  f.table = init_embedding(vocab.size(), embed_dim, seed);
  f.table.trainable = trainable;
  return f;
}

}  // namespace drift
