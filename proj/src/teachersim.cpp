#include "pakd/teachersim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace pakd {

using nlohmann::json;

double random_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

int pick_weighted(const std::vector<double>& weights, std::mt19937_64& rng) {
  double u = random_unit(rng);
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// ---- generation ---------------------------------------------------------

struct Generator {
  const SyntheticGrammar& grammar;
  std::mt19937_64& rng;
  ConstituencyTree tree;

  int gen(int nt, int depth) {
    const GrammarConfig& cfg = grammar.config;
    bool expand = depth < cfg.max_depth && random_unit(rng) < cfg.expansion_prob;
    if (!expand) {
      std::vector<double> probs(grammar.emission[nt]);
      int term = pick_weighted(probs, rng);
      int idx = static_cast<int>(tree.tokens.size());
      std::string tag = "N" + std::to_string(nt);
      tree.tokens.push_back({idx, "w" + std::to_string(term), tag});
      tree.nodes.push_back({idx, idx + 1, tag, {}});
      return static_cast<int>(tree.nodes.size()) - 1;
    }
    std::vector<double> probs;
    for (const BinaryRule& r : grammar.rules[nt]) probs.push_back(r.prob);
    const BinaryRule& rule = grammar.rules[nt][pick_weighted(probs, rng)];
    int left = gen(rule.left, depth + 1);
    int right = gen(rule.right, depth + 1);
    tree.nodes.push_back({tree.nodes[left].start, tree.nodes[right].end,
                          "N" + std::to_string(nt), {left, right}});
    return static_cast<int>(tree.nodes.size()) - 1;
  }
};

// ---- rotations ----------------------------------------------------------

struct BNode {
  int token = -1;  // leaf token index, -1 for internal
  std::unique_ptr<BNode> left, right;
  bool is_leaf() const { return token >= 0; }
};

std::unique_ptr<BNode> to_bnode(const ConstituencyTree& t, int ni) {
  auto node = std::make_unique<BNode>();
  const TreeNode& n = t.nodes[ni];
  if (n.is_leaf()) {
    node->token = n.start;
    return node;
  }
  node->left = to_bnode(t, n.children[0]);
  node->right = to_bnode(t, n.children[1]);
  return node;
}

int from_bnode(const BNode& b, const std::vector<Token>& tokens, ConstituencyTree& out) {
  if (b.is_leaf()) {
    out.nodes.push_back({b.token, b.token + 1, tokens[b.token].tag, {}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  int left = from_bnode(*b.left, tokens, out);
  int right = from_bnode(*b.right, tokens, out);
  out.nodes.push_back({out.nodes[left].start, out.nodes[right].end, "X", {left, right}});
  return static_cast<int>(out.nodes.size()) - 1;
}

void collect_rotatable(BNode* node, std::vector<BNode*>& out) {
  if (node->is_leaf()) return;
  if (!node->left->is_leaf() || !node->right->is_leaf()) out.push_back(node);
  collect_rotatable(node->left.get(), out);
  collect_rotatable(node->right.get(), out);
}

void rotate(BNode* p, bool left_rotation) {
  if (left_rotation) {
    // (A, (B, C)) -> ((A, B), C)
    auto a = std::move(p->left);
    auto b = std::move(p->right->left);
    auto c = std::move(p->right->right);
    auto ab = std::make_unique<BNode>();
    ab->left = std::move(a);
    ab->right = std::move(b);
    p->left = std::move(ab);
    p->right = std::move(c);
  } else {
    // ((A, B), C) -> (A, (B, C))
    auto a = std::move(p->left->left);
    auto b = std::move(p->left->right);
    auto c = std::move(p->right);
    auto bc = std::make_unique<BNode>();
    bc->left = std::move(b);
    bc->right = std::move(c);
    p->left = std::move(a);
    p->right = std::move(bc);
  }
}

// ---- jsonl --------------------------------------------------------------

std::vector<Token> tokens_from_json(const json& arr) {
  std::vector<Token> tokens;
  int idx = 0;
  for (const auto& t : arr) tokens.push_back({idx++, t.get<std::string>(), ""});
  return tokens;
}

void check_tree_tokens(const ConstituencyTree& tree, const std::vector<Token>& tokens,
                       size_t line_no, const char* field) {
  if (tree.length() != static_cast<int>(tokens.size()))
    throw Error("TokenMismatch", std::string(field) + " tree length differs from tokens at line " +
                                     std::to_string(line_no));
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tree.tokens[i].surface != tokens[i].surface)
      throw Error("TokenMismatch", std::string(field) + " tree tokens disagree at line " +
                                       std::to_string(line_no));
}

}  // namespace

SyntheticGrammar sample_grammar(const GrammarConfig& config) {
  if (config.nonterminals < 2)
    throw Error("DegenerateConfig", "need at least 2 nonterminals");
  if (config.terminals < 10) throw Error("DegenerateConfig", "need at least 10 terminals");
  if (config.rules_per_nonterminal < 1)
    throw Error("DegenerateConfig", "need at least one rule per nonterminal");

  std::mt19937_64 rng(config.seed);
  SyntheticGrammar grammar;
  grammar.config = config;
  const int K = config.nonterminals;
  const int V = config.terminals;

  grammar.rules.resize(K);
  for (int a = 0; a < K; ++a) {
    double total = 0.0;
    for (int r = 0; r < config.rules_per_nonterminal; ++r) {
      BinaryRule rule;
      rule.left = static_cast<int>(rng() % K);
      rule.right = static_cast<int>(rng() % K);
      rule.prob = 0.25 + random_unit(rng);
      total += rule.prob;
      grammar.rules[a].push_back(rule);
    }
    for (BinaryRule& rule : grammar.rules[a]) rule.prob /= total;
  }

  // each nonterminal owns a vocabulary slice; emission mass stays inside it
  grammar.emission.assign(K, std::vector<double>(V, 0.0));
  for (int a = 0; a < K; ++a) {
    int lo = a * V / K;
    int hi = (a + 1) * V / K;
    double total = 0.0;
    for (int t = lo; t < hi; ++t) {
      grammar.emission[a][t] = 0.5 + random_unit(rng);
      total += grammar.emission[a][t];
    }
    for (int t = lo; t < hi; ++t) grammar.emission[a][t] /= total;
  }
  return grammar;
}

Corpus sample_corpus(const SyntheticGrammar& grammar, int n_sentences, int min_len, int max_len,
                     std::uint64_t seed, const std::string& id_prefix) {
  if (n_sentences < 1) throw Error("DegenerateConfig", "need at least one sentence");
  std::mt19937_64 rng(seed);
  Corpus corpus;
  const int kAttemptCap = 20000;
  for (int s = 0; s < n_sentences; ++s) {
    bool accepted = false;
    for (int attempt = 0; attempt < kAttemptCap && !accepted; ++attempt) {
      Generator g{grammar, rng, {}};
      g.tree.root = g.gen(0, 0);
      int n = g.tree.length();
      if (n < min_len || n > max_len) continue;
      AnnotatedExample ex;
      ex.id = id_prefix + std::to_string(s);
      ex.tokens = g.tree.tokens;
      ex.gold = std::move(g.tree);
      corpus.push_back(std::move(ex));
      accepted = true;
    }
    if (!accepted)
      throw Error("LengthBoundsInfeasible",
                  "rejection cap exceeded for length bounds [" + std::to_string(min_len) + "," +
                      std::to_string(max_len) + "]");
  }
  return corpus;
}

ConstituencyTree uniform_random_binary_tree(const std::vector<Token>& tokens,
                                            std::mt19937_64& rng) {
  const int n = static_cast<int>(tokens.size());
  // Catalan-style tree counts: count[m] = number of binary trees over m leaves
  std::vector<double> count(n + 1, 0.0);
  count[1] = 1.0;
  for (int m = 2; m <= n; ++m)
    for (int l = 1; l < m; ++l) count[m] += count[l] * count[m - l];

  ConstituencyTree out;
  out.tokens = tokens;
  std::function<int(int, int)> build = [&](int start, int end) -> int {
    int m = end - start;
    if (m == 1) {
      out.nodes.push_back({start, end, tokens[start].tag, {}});
      return static_cast<int>(out.nodes.size()) - 1;
    }
    std::vector<double> weights;
    for (int l = 1; l < m; ++l) weights.push_back(count[l] * count[m - l] / count[m]);
    int l = 1 + pick_weighted(weights, rng);
    int left = build(start, start + l);
    int right = build(start + l, end);
    out.nodes.push_back({start, end, "X", {left, right}});
    return static_cast<int>(out.nodes.size()) - 1;
  };
  out.root = build(0, n);
  return out;
}

ConstituencyTree corrupt(const ConstituencyTree& tree, double eta, NoiseMode mode,
                         std::mt19937_64& rng) {
  const int n = tree.length();
  if (mode == NoiseMode::RandomReplacement) {
    if (random_unit(rng) < eta) return uniform_random_binary_tree(tree.tokens, rng);
    return tree;
  }
  long rotations = std::lround(eta * std::max(0, n - 2));
  if (rotations == 0) return tree;
  auto root = to_bnode(tree, tree.root);
  for (long r = 0; r < rotations; ++r) {
    std::vector<BNode*> eligible;
    collect_rotatable(root.get(), eligible);
    if (eligible.empty()) break;  // n <= 2
    BNode* p = eligible[rng() % eligible.size()];
    bool can_left = !p->right->is_leaf();
    bool can_right = !p->left->is_leaf();
    bool go_left = can_left && (!can_right || rng() % 2 == 0);
    rotate(p, go_left);
  }
  ConstituencyTree out;
  out.tokens = tree.tokens;
  out.root = from_bnode(*root, tree.tokens, out);
  return out;
}

void make_teacher_labels(Corpus& corpus, const NoiseConfig& noise) {
  double total = 0.0;
  std::vector<double> weights;
  for (const NoiseTier& tier : noise.tiers) {
    if (tier.eta < 0.0 || tier.eta > 1.0)
      throw Error("DegenerateConfig", "tier eta outside [0,1]");
    total += tier.weight;
    weights.push_back(tier.weight);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("DegenerateConfig", "tier weights must sum to 1");

  std::mt19937_64 rng(noise.seed);
  for (AnnotatedExample& ex : corpus) {
    if (!ex.gold) throw Error("MissingGold", "example " + ex.id + " has no gold tree");
    int tier = pick_weighted(weights, rng);
    ex.noise_tier = tier;
    ex.teacher = corrupt(binarize(*ex.gold), noise.tiers[tier].eta, noise.mode, rng);
  }
}

Corpus ingest_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path);
  Corpus corpus;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("MalformedRecord", "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object())
      throw Error("MalformedRecord", "line " + std::to_string(line_no) + ": not an object");
    if (record.contains("_header")) continue;
    try {
      AnnotatedExample ex;
      ex.id = record.at("id").get<std::string>();
      ex.tokens = tokens_from_json(record.at("tokens"));
      auto read_tree = [&](const char* field) -> std::optional<ConstituencyTree> {
        if (!record.contains(field) || record[field].is_null()) return std::nullopt;
        ConstituencyTree t = parse_bracketed(record[field].get<std::string>());
        check_tree_tokens(t, ex.tokens, line_no, field);
        return t;
      };
      ex.gold = read_tree("gold");
      ex.teacher = read_tree("teacher");
      ex.student = read_tree("student");
      if (record.contains("noise_tier") && !record["noise_tier"].is_null())
        ex.noise_tier = record["noise_tier"].get<int>();
      // tags from a present tree carry over to the token sequence
      const ConstituencyTree* src = ex.gold ? &*ex.gold : (ex.teacher ? &*ex.teacher : nullptr);
      if (src)
        for (size_t i = 0; i < ex.tokens.size(); ++i) ex.tokens[i].tag = src->tokens[i].tag;
      corpus.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error("MalformedRecord", "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void write_jsonl(const Corpus& corpus, const std::string& path, const std::string& header_json) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open " + path + " for writing");
  if (!header_json.empty()) {
    json header;
    header["_header"] = json::parse(header_json);
    out << header.dump() << "\n";
  }
  for (const AnnotatedExample& ex : corpus) {
    json record;
    record["id"] = ex.id;
    json tokens = json::array();
    for (const Token& t : ex.tokens) tokens.push_back(t.surface);
    record["tokens"] = tokens;
    record["gold"] = ex.gold ? json(serialize_bracketed(*ex.gold)) : json(nullptr);
    record["teacher"] = ex.teacher ? json(serialize_bracketed(*ex.teacher)) : json(nullptr);
    if (ex.student) record["student"] = serialize_bracketed(*ex.student);
    if (ex.noise_tier) record["noise_tier"] = *ex.noise_tier;
    out << record.dump() << "\n";
  }
}

}  // namespace pakd
