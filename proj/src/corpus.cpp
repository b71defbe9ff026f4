#include "drift/corpus.hpp"

#include "drift/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace drift {

namespace {

using json = nlohmann::json;

bool is_word_byte(unsigned char c) {
  return c >= 0x80 || std::isalnum(c) != 0;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

[[noreturn]] void line_error(int lineno, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(lineno) + ": " + what);
}

Label parse_label_at(const std::string& value, int lineno) {
  try {
    return label_from_name(value);
  } catch (const std::invalid_argument&) {
    line_error(lineno, "unknown label \"" + value + "\"");
  }
}

Example make_example(const std::string& premise_text, const std::string& hypothesis_text, Label y,
                     std::optional<Label> cheat, int lineno) {
  Example ex;
  ex.premise = tokenize(premise_text);
  ex.hypothesis = tokenize(hypothesis_text);
  ex.label = y;
  ex.cheat_token = cheat;
  if (ex.premise.empty()) line_error(lineno, "empty premise after tokenization");
  if (ex.hypothesis.empty()) line_error(lineno, "empty hypothesis after tokenization");
  return ex;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

const std::string& label_name(Label y) {
  static const std::string names[3] = {"entailment", "contradiction", "neutral"};
  return names[static_cast<int>(y)];
}

Label label_from_name(const std::string& name) {
  if (name == "entailment") return Label::Entailment;
  if (name == "contradiction") return Label::Contradiction;
  if (name == "neutral") return Label::Neutral;
  throw std::invalid_argument("unknown label \"" + name + "\"");
}

TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string buf;
  auto flush = [&] {
    if (!buf.empty()) {
      out.push_back(buf);
      buf.clear();
    }
  };
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) c = static_cast<unsigned char>(std::tolower(c));
    if (c < 0x80 && std::isspace(c)) {
      flush();
      continue;
    }
    if (is_word_byte(c)) {
      buf.push_back(static_cast<char>(c));
      continue;
    }
    // "n't" stays one token so the negation feature can fire on it.
    if (c == '\'' && !buf.empty() && buf.back() == 'n' && i + 1 < n &&
        std::tolower(static_cast<unsigned char>(text[i + 1])) == 't' &&
        (i + 2 == n || !is_word_byte(static_cast<unsigned char>(text[i + 2])))) {
      buf.pop_back();
      flush();
      out.push_back("n't");
      ++i;
      continue;
    }
    flush();
    out.push_back(std::string(1, static_cast<char>(c)));
  }
  flush();
  return out;
}

Vocabulary build_vocab(const Dataset& dataset, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  std::unordered_map<std::string, long> counts;
  for (const Example& ex : dataset.examples) {
    for (const std::string& t : ex.premise) ++counts[t];
    for (const std::string& t : ex.hypothesis) ++counts[t];
  }

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count && token != Vocabulary::kUnknownToken) kept.emplace_back(token, count);
  }
  for (std::string_view special : kSpecialWords) {
    if (counts.find(std::string(special)) == counts.end() ||
        counts[std::string(special)] < min_count) {
      kept.emplace_back(std::string(special), counts.count(std::string(special))
                                                  ? counts[std::string(special)]
                                                  : 0);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.id_to_token.reserve(kept.size() + 1);
  vocab.id_to_token.emplace_back(Vocabulary::kUnknownToken);
  for (auto& [token, count] : kept) vocab.id_to_token.push_back(std::move(token));
  for (int i = 0; i < vocab.size(); ++i) vocab.token_to_id[vocab.id_to_token[i]] = i;
  return vocab;
}

std::uint64_t vocab_hash(const Vocabulary& vocab) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::string& token : vocab.id_to_token) {
    for (char c : token) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ULL;
  }
  return h;
}

void save_vocab(const Vocabulary& vocab, std::ostream& out) {
  for (const std::string& token : vocab.id_to_token) out << token << '\n';
}

Vocabulary load_vocab(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    vocab.id_to_token.push_back(line);
  }
  if (vocab.id_to_token.empty() || vocab.id_to_token[0] != Vocabulary::kUnknownToken) {
    throw std::runtime_error("invalid vocabulary file: first token must be " +
                             std::string(Vocabulary::kUnknownToken));
  }
  for (int i = 0; i < vocab.size(); ++i) vocab.token_to_id[vocab.id_to_token[i]] = i;
  return vocab;
}

Dataset parse_snli_tsv(std::istream& in, std::string name) {
  Dataset ds;
  ds.name = std::move(name);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty input: missing TSV header");
  strip_cr(line);
  std::vector<std::string> header = split_tabs(line);

  auto column = [&](const std::string& want) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == want) return static_cast<int>(i);
    }
    throw std::runtime_error("header missing column \"" + want + "\"");
  };
  const int gold_col = column("gold_label");
  const int s1_col = column("sentence1");
  const int s2_col = column("sentence2");
  int cheat_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "cheat_label") cheat_col = static_cast<int>(i);
  }
  const int need = std::max({gold_col, s1_col, s2_col, cheat_col}) + 1;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cols = split_tabs(line);
    if (static_cast<int>(cols.size()) < need) {
      line_error(lineno, "expected ≥" + std::to_string(need) + " columns");
    }
    const std::string& gold = cols[static_cast<std::size_t>(gold_col)];
    if (gold == "-") continue;
    Label y = parse_label_at(gold, lineno);
    std::optional<Label> cheat;
    if (cheat_col >= 0 && !cols[static_cast<std::size_t>(cheat_col)].empty()) {
      cheat = parse_label_at(cols[static_cast<std::size_t>(cheat_col)], lineno);
    }
    ds.examples.push_back(make_example(cols[static_cast<std::size_t>(s1_col)],
                                       cols[static_cast<std::size_t>(s2_col)], y, cheat, lineno));
  }
  return ds;
}

Dataset parse_jsonl(std::istream& in, std::string name) {
  Dataset ds;
  ds.name = std::move(name);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      line_error(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) line_error(lineno, "expected a JSON object");
    auto field = [&](const char* key) -> std::string {
      if (!obj.contains(key) || !obj[key].is_string()) {
        line_error(lineno, "missing string field \"" + std::string(key) + "\"");
      }
      return obj[key].get<std::string>();
    };
    const std::string gold = field("gold_label");
    if (gold == "-") continue;
    Label y = parse_label_at(gold, lineno);
    std::optional<Label> cheat;
    if (obj.contains("cheat_label")) {
      cheat = parse_label_at(field("cheat_label"), lineno);
    }
    ds.examples.push_back(make_example(field("sentence1"), field("sentence2"), y, cheat, lineno));
  }
  return ds;
}

void write_tsv(const Dataset& dataset, std::ostream& out) {
  out << "gold_label\tsentence1\tsentence2\tcheat_label\n";
  for (const Example& ex : dataset.examples) {
    out << label_name(ex.label) << '\t' << join_tokens(ex.premise) << '\t'
        << join_tokens(ex.hypothesis) << '\t'
        << (ex.cheat_token ? label_name(*ex.cheat_token) : "") << '\n';
  }
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const Example& ex : dataset.examples) {
    json obj;
    obj["gold_label"] = label_name(ex.label);
    obj["sentence1"] = join_tokens(ex.premise);
    obj["sentence2"] = join_tokens(ex.hypothesis);
    if (ex.cheat_token) obj["cheat_label"] = label_name(*ex.cheat_token);
    out << obj.dump() << '\n';
  }
}

Dataset generate_synthetic_task(int n, int vocab_size, std::uint64_t seed) {
  if (vocab_size < 20 || vocab_size % 2 != 0) {
    throw std::invalid_argument("vocab_size must be even and >= 20");
  }
  if (n < 3) throw std::invalid_argument("n must be >= 3");

  std::vector<std::string> words(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < vocab_size; ++i) words[static_cast<std::size_t>(i)] = "w" + std::to_string(i + 1);
  auto antonym = [](int w) { return w ^ 1; };  // pairs (w1,w2), (w3,w4), ...

  constexpr int kPremiseLen = 6;
  Rng rng(seed);
  Dataset ds;
  ds.name = "synthetic";
  ds.examples.reserve(static_cast<std::size_t>(n));

  std::vector<int> premise;
  premise.reserve(kPremiseLen);
  auto in_premise = [&](int w) {
    return std::find(premise.begin(), premise.end(), w) != premise.end();
  };

  for (int i = 0; i < n; ++i) {
    const Label y = static_cast<Label>(i % kNumClasses);

    // No antonym pair inside the premise, so the token-level label rule
    // stays unambiguous for all three hypothesis constructions.
    premise.clear();
    while (static_cast<int>(premise.size()) < kPremiseLen) {
      int w = uniform_int(rng, vocab_size);
      if (in_premise(w) || in_premise(antonym(w))) continue;
      premise.push_back(w);
    }

    auto sample_positions = [&](int k) {
      std::array<int, kPremiseLen> pos{0, 1, 2, 3, 4, 5};
      for (int j = 0; j < k; ++j) {
        std::swap(pos[static_cast<std::size_t>(j)],
                  pos[static_cast<std::size_t>(j + uniform_int(rng, kPremiseLen - j))]);
      }
      return std::vector<int>(pos.begin(), pos.begin() + k);
    };

    std::vector<int> hyp;
    switch (y) {
      case Label::Entailment: {
        for (int p : sample_positions(3)) hyp.push_back(premise[static_cast<std::size_t>(p)]);
        break;
      }
      case Label::Contradiction: {
        std::vector<int> pos = sample_positions(3);
        hyp.push_back(premise[static_cast<std::size_t>(pos[0])]);
        hyp.push_back(premise[static_cast<std::size_t>(pos[1])]);
        hyp.push_back(antonym(premise[static_cast<std::size_t>(pos[2])]));
        break;
      }
      case Label::Neutral: {
        std::vector<int> pos = sample_positions(2);
        hyp.push_back(premise[static_cast<std::size_t>(pos[0])]);
        hyp.push_back(premise[static_cast<std::size_t>(pos[1])]);
        int fresh = -1;
        for (int attempts = 0; attempts < 16 * vocab_size; ++attempts) {
          int w = uniform_int(rng, vocab_size);
          if (!in_premise(w) && !in_premise(antonym(w))) {
            fresh = w;
            break;
          }
        }
        if (fresh < 0) {
          throw std::runtime_error("vocab_size too small to sample a fresh non-antonym token");
        }
        hyp.push_back(fresh);
        break;
      }
    }
    shuffle_in_place(hyp, rng);

    Example ex;
    for (int w : premise) ex.premise.push_back(words[static_cast<std::size_t>(w)]);
    for (int w : hyp) ex.hypothesis.push_back(words[static_cast<std::size_t>(w)]);
    ex.label = y;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

SplitResult split(const Dataset& dataset, double frac_train, double frac_dev, double frac_test,
                  std::uint64_t seed) {
  if (frac_train < 0 || frac_dev < 0 || frac_test < 0 ||
      std::abs(frac_train + frac_dev + frac_test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
  }
  const auto n = static_cast<long>(dataset.size());
  const long n_dev = static_cast<long>(std::floor(static_cast<double>(n) * frac_dev));
  const long n_test = static_cast<long>(std::floor(static_cast<double>(n) * frac_test));
  const long n_train = n - n_dev - n_test;
  if (n_train <= 0) throw std::runtime_error("empty split: train");
  if (n_dev <= 0) throw std::runtime_error("empty split: dev");
  if (n_test <= 0) throw std::runtime_error("empty split: test");

  std::vector<std::size_t> perm(dataset.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(seed);
  shuffle_in_place(perm, rng);

  auto slice = [&](long begin, long count, const char* suffix) {
    Dataset out;
    out.name = dataset.name.empty() ? suffix : dataset.name + "-" + suffix;
    out.examples.reserve(static_cast<std::size_t>(count));
    for (long i = begin; i < begin + count; ++i) {
      out.examples.push_back(dataset.examples[perm[static_cast<std::size_t>(i)]]);
    }
    return out;
  };
  return SplitResult{slice(0, n_train, "train"), slice(n_train, n_dev, "dev"),
                     slice(n_train + n_dev, n_test, "test")};
}

}  // namespace drift
