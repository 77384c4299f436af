#ifndef PAKD_TREEBANK_HPP
#define PAKD_TREEBANK_HPP

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pakd/error.hpp"

namespace pakd {

struct Token {
  int index = 0;           // 0-based position in the sentence
  std::string surface;     // non-empty
  std::string tag;         // optional part-of-speech text
};

// A constituent over the half-open token span [start, end).
// Leaves have no children and width 1; node indices refer into
// ConstituencyTree::nodes.
struct TreeNode {
  int start = 0;
  int end = 0;
  std::string label;
  std::vector<int> children;

  bool is_leaf() const { return children.empty(); }
};

struct ConstituencyTree {
  std::vector<Token> tokens;
  std::vector<TreeNode> nodes;
  int root = -1;

  int length() const { return static_cast<int>(tokens.size()); }
  bool empty() const { return tokens.empty(); }

  // Throws Error("InvalidTree", ...) if the structural invariants do not hold.
  void validate() const;
};

using Span = std::pair<int, int>;
using SpanSet = std::set<Span>;

struct SpanPolicy {
  // The whole-sentence span is structurally guaranteed, so it is excluded
  // from evaluation by default; width-1 spans are always excluded.
  bool include_root = false;
};

ConstituencyTree parse_bracketed(const std::string& text);
std::string serialize_bracketed(const ConstituencyTree& tree);

// Right-branching binarization. Unary chains are collapsed (outermost label
// kept), introduced nodes are labeled "X". Output leaves are single tokens.
ConstituencyTree binarize(const ConstituencyTree& tree);

// Spans of every node in the tree, leaves included.
SpanSet node_spans(const ConstituencyTree& tree);

// Spans scored by unlabeled F1: width >= 2, root excluded per policy.
SpanSet eval_spans(const ConstituencyTree& tree, const SpanPolicy& policy = {});

// Sentence-level unlabeled F1 over eval_spans sets. Both sets empty -> 1.0,
// exactly one empty -> 0.0. Throws Error("LengthMismatch", ...) if the trees
// cover different sentence lengths.
double unlabeled_f1(const ConstituencyTree& pred, const ConstituencyTree& ref,
                    const SpanPolicy& policy = {});

// Mean of per-sentence unlabeled F1 over aligned corpora.
double corpus_f1(const std::vector<ConstituencyTree>& preds,
                 const std::vector<ConstituencyTree>& refs,
                 const SpanPolicy& policy = {});

// True if the two trees have the same tokens and the same serialized form.
bool same_structure(const ConstituencyTree& a, const ConstituencyTree& b);

}  // namespace pakd

#endif
