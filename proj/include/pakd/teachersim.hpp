#ifndef PAKD_TEACHERSIM_HPP
#define PAKD_TEACHERSIM_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pakd/treebank.hpp"

namespace pakd {

struct GrammarConfig {
  int nonterminals = 8;
  int terminals = 64;
  std::uint64_t seed = 7;
  double expansion_prob = 0.75;  // chance an expandable symbol branches
  int rules_per_nonterminal = 2;
  int max_depth = 9;  // emission forced at this depth
};

struct BinaryRule {
  int left = 0;
  int right = 0;
  double prob = 0.0;
};

// Synthetic PCFG with word classes: each nonterminal emits from its own
// vocabulary slice, so bracketing is recoverable from word identity.
struct SyntheticGrammar {
  GrammarConfig config;
  std::vector<std::vector<BinaryRule>> rules;        // per nonterminal, probs sum to 1
  std::vector<std::vector<double>> emission;         // per nonterminal over terminals
};

struct NoiseTier {
  double weight = 1.0;
  double eta = 0.0;  // corruption intensity in [0, 1]
};

enum class NoiseMode { Rotation, RandomReplacement };

struct NoiseConfig {
  std::vector<NoiseTier> tiers = {{1.0, 0.0}};
  NoiseMode mode = NoiseMode::Rotation;
  std::uint64_t seed = 0;
};

struct AnnotatedExample {
  std::string id;
  std::vector<Token> tokens;
  std::optional<ConstituencyTree> gold;
  std::optional<ConstituencyTree> teacher;
  std::optional<ConstituencyTree> student;
  std::optional<int> noise_tier;
};

using Corpus = std::vector<AnnotatedExample>;

SyntheticGrammar sample_grammar(const GrammarConfig& config);

// Sampled sentences carry their generation tree as gold (already binary).
Corpus sample_corpus(const SyntheticGrammar& grammar, int n_sentences, int min_len, int max_len,
                     std::uint64_t seed, const std::string& id_prefix = "s");

// Structured or adversarial corruption of a binary tree. Rotation mode applies
// round(eta * max(0, n-2)) single rotations; random-replacement swaps the
// whole tree for a uniformly random binary tree with probability eta.
ConstituencyTree corrupt(const ConstituencyTree& tree, double eta, NoiseMode mode,
                         std::mt19937_64& rng);

// Assigns each example a noise tier by weighted draw and fills teacher labels.
void make_teacher_labels(Corpus& corpus, const NoiseConfig& noise);

Corpus ingest_jsonl(const std::string& path);

// One JSON record per line; optional header object is emitted first when
// non-empty (carried as a raw JSON string to keep this header light).
void write_jsonl(const Corpus& corpus, const std::string& path,
                 const std::string& header_json = "");

// Uniform over all binary tree structures (Catalan-weighted splits).
ConstituencyTree uniform_random_binary_tree(const std::vector<Token>& tokens,
                                            std::mt19937_64& rng);

double random_unit(std::mt19937_64& rng);  // [0, 1)

}  // namespace pakd

#endif
