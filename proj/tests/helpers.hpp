// Shared test-only utilities: random tree generators and independent
// brute-force oracles. Nothing here may call back into the code paths it is
// used to check.
#ifndef PAKD_TESTS_HELPERS_HPP
#define PAKD_TESTS_HELPERS_HPP

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pakd/treebank.hpp"

namespace pakd::testing {

inline std::vector<Token> make_tokens(int n, const std::string& prefix = "w") {
  std::vector<Token> tokens;
  for (int i = 0; i < n; ++i) tokens.push_back({i, prefix + std::to_string(i), ""});
  return tokens;
}

inline int random_binary_node(int start, int end, std::mt19937_64& rng, ConstituencyTree& out) {
  if (end - start == 1) {
    out.nodes.push_back({start, end, "", {}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  int split = start + 1 + static_cast<int>(rng() % (end - start - 1));
  int left = random_binary_node(start, split, rng, out);
  int right = random_binary_node(split, end, rng, out);
  out.nodes.push_back({start, end, "X", {left, right}});
  return static_cast<int>(out.nodes.size()) - 1;
}

inline ConstituencyTree random_binary_tree(int n, std::mt19937_64& rng) {
  ConstituencyTree t;
  t.tokens = make_tokens(n);
  t.root = random_binary_node(0, n, rng, t);
  return t;
}

inline int random_kary_node(int start, int end, std::mt19937_64& rng, ConstituencyTree& out,
                            int depth) {
  static const char* labels[] = {"S", "NP", "VP", "PP", "ADJP"};
  if (end - start == 1) {
    bool tagged = rng() % 2 == 0;
    out.nodes.push_back({start, end, tagged ? "NN" : "", {}});
    if (tagged) out.tokens[start].tag = "NN";
    return static_cast<int>(out.nodes.size()) - 1;
  }
  int max_arity = std::min(4, end - start);
  int arity = 2 + static_cast<int>(rng() % (max_arity - 1));
  std::vector<int> splits;
  while (static_cast<int>(splits.size()) < arity - 1) {
    int s = start + 1 + static_cast<int>(rng() % (end - start - 1));
    bool dup = false;
    for (int t : splits) dup |= (t == s);
    if (!dup) splits.push_back(s);
  }
  std::sort(splits.begin(), splits.end());
  splits.push_back(end);
  std::vector<int> children;
  int pos = start;
  for (int s : splits) {
    children.push_back(random_kary_node(pos, s, rng, out, depth + 1));
    pos = s;
  }
  out.nodes.push_back({start, end, labels[rng() % 5], children});
  int node = static_cast<int>(out.nodes.size()) - 1;
  if (depth > 0 && rng() % 5 == 0) {
    // occasional unary wrapper to exercise unary handling
    out.nodes.push_back({start, end, labels[rng() % 5], {node}});
    node = static_cast<int>(out.nodes.size()) - 1;
  }
  return node;
}

inline ConstituencyTree random_kary_tree(int n, std::mt19937_64& rng) {
  ConstituencyTree t;
  t.tokens = make_tokens(n);
  t.root = random_kary_node(0, n, rng, t, 0);
  return t;
}

// Independent span collection by explicit stack walk.
inline void brute_spans(const ConstituencyTree& t, int ni, std::vector<Span>& out) {
  out.push_back({t.nodes[ni].start, t.nodes[ni].end});
  for (int c : t.nodes[ni].children) brute_spans(t, c, out);
}

// Brute-force unlabeled F1 with explicit set algebra, no pakd::eval_spans.
inline double brute_force_f1(const ConstituencyTree& pred, const ConstituencyTree& ref,
                             bool include_root = false) {
  const int n = pred.length();
  auto gather = [&](const ConstituencyTree& t) {
    std::vector<Span> raw;
    brute_spans(t, t.root, raw);
    std::vector<Span> kept;
    for (Span s : raw) {
      if (s.second - s.first < 2) continue;
      if (!include_root && s.first == 0 && s.second == n) continue;
      bool seen = false;
      for (Span k : kept) seen |= (k == s);
      if (!seen) kept.push_back(s);
    }
    return kept;
  };
  std::vector<Span> p = gather(pred);
  std::vector<Span> r = gather(ref);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  int match = 0;
  for (Span a : p)
    for (Span b : r)
      if (a == b) ++match;
  if (match == 0) return 0.0;
  double precision = double(match) / p.size();
  double recall = double(match) / r.size();
  return 2.0 * precision * recall / (precision + recall);
}

// All binary tree structures over [i, j), each as the list of width>=2 spans
// (root of the fragment included), in canonical order: split ascending, then
// left enumeration order, then right enumeration order. The span set uniquely
// identifies a binary tree.
inline std::vector<std::vector<Span>> enumerate_binary_spansets(int i, int j) {
  if (j - i == 1) return {{}};
  std::vector<std::vector<Span>> out;
  for (int k = i + 1; k < j; ++k) {
    auto lefts = enumerate_binary_spansets(i, k);
    auto rights = enumerate_binary_spansets(k, j);
    for (const auto& l : lefts)
      for (const auto& r : rights) {
        std::vector<Span> spans = {{i, j}};
        spans.insert(spans.end(), l.begin(), l.end());
        spans.insert(spans.end(), r.begin(), r.end());
        out.push_back(spans);
      }
  }
  return out;
}

}  // namespace pakd::testing

#endif
