#include "pakd/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace pakd {

void ConstituencyTree::validate() const {
  const int n = length();
  if (n == 0) throw Error("InvalidTree", "tree has no tokens");
  if (root < 0 || root >= static_cast<int>(nodes.size()))
    throw Error("InvalidTree", "missing root node");
  for (int i = 0; i < n; ++i) {
    if (tokens[i].index != i)
      throw Error("InvalidTree", "token indices not contiguous");
    if (tokens[i].surface.empty())
      throw Error("InvalidTree", "empty token surface");
  }
  const TreeNode& r = nodes[root];
  if (r.start != 0 || r.end != n)
    throw Error("InvalidTree", "root span does not cover the sentence");

  // Every internal node's children must partition its span in order; every
  // leaf must cover exactly one token.
  std::vector<int> leaf_cover(n, 0);
  std::vector<int> stack = {root};
  while (!stack.empty()) {
    int ni = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[ni];
    if (node.start < 0 || node.end > n || node.start >= node.end)
      throw Error("InvalidTree", "node span out of range");
    if (node.is_leaf()) {
      if (node.end - node.start != 1)
        throw Error("InvalidTree", "leaf does not cover exactly one token");
      leaf_cover[node.start] += 1;
      continue;
    }
    int pos = node.start;
    for (int ci : node.children) {
      if (ci < 0 || ci >= static_cast<int>(nodes.size()))
        throw Error("InvalidTree", "child index out of range");
      const TreeNode& child = nodes[ci];
      if (child.start != pos)
        throw Error("InvalidTree", "children do not partition parent span");
      pos = child.end;
      stack.push_back(ci);
    }
    if (pos != node.end)
      throw Error("InvalidTree", "children do not cover parent span");
  }
  for (int i = 0; i < n; ++i)
    if (leaf_cover[i] != 1)
      throw Error("InvalidTree", "token not covered by exactly one leaf");
}

namespace {

// Raw parse product: groups and atoms, labels not yet decided. The first atom
// of a group is its label only when at least one further element follows;
// "(b)" is therefore a bare token, "(X a)" a tagged one.
struct RawNode {
  bool is_atom = false;
  std::string atom;
  std::vector<RawNode> kids;
  size_t offset = 0;
};

struct BracketParser {
  const std::string& text;
  size_t pos = 0;
  ConstituencyTree tree;

  explicit BracketParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const char* code, const std::string& msg) {
    std::ostringstream os;
    os << msg << " at byte " << pos;
    throw Error(code, os.str());
  }

  void skip_space() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  std::string read_atom() {
    size_t begin = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    return text.substr(begin, pos - begin);
  }

  RawNode parse_group() {
    // caller consumed '('
    RawNode group;
    group.offset = pos;
    while (true) {
      skip_space();
      if (pos >= text.size()) fail("UnbalancedBrackets", "unexpected end of input");
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      if (text[pos] == '(') {
        ++pos;
        group.kids.push_back(parse_group());
      } else {
        RawNode atom;
        atom.is_atom = true;
        atom.offset = pos;
        atom.atom = read_atom();
        group.kids.push_back(atom);
      }
    }
    return group;
  }

  int new_leaf(const std::string& surface, const std::string& tag) {
    int idx = static_cast<int>(tree.tokens.size());
    tree.tokens.push_back({idx, surface, tag});
    tree.nodes.push_back({idx, idx + 1, tag, {}});
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  int build(const RawNode& raw) {
    if (raw.is_atom) return new_leaf(raw.atom, "");
    pos = raw.offset;
    if (raw.kids.empty()) fail("EmptyConstituent", "constituent with no children");

    std::string label;
    size_t first = 0;
    if (raw.kids.size() >= 2 && raw.kids[0].is_atom) {
      label = raw.kids[0].atom;
      first = 1;
    }
    if (raw.kids.size() - first == 1 && raw.kids[first].is_atom) {
      // "(TAG word)" or "(word)": a leaf, tagged when labeled
      int leaf = new_leaf(raw.kids[first].atom, label);
      return leaf;
    }
    std::vector<int> children;
    for (size_t i = first; i < raw.kids.size(); ++i) children.push_back(build(raw.kids[i]));
    int start = tree.nodes[children.front()].start;
    int end = tree.nodes[children.back()].end;
    tree.nodes.push_back({start, end, label, children});
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  ConstituencyTree run() {
    skip_space();
    if (pos >= text.size() || text[pos] != '(')
      fail("NoTokens", "expected '('");
    ++pos;
    RawNode raw = parse_group();
    skip_space();
    if (pos < text.size()) fail("UnbalancedBrackets", "trailing content");
    tree.root = build(raw);
    if (tree.tokens.empty()) fail("NoTokens", "no tokens in tree");
    tree.validate();
    return std::move(tree);
  }
};

void serialize_node(const ConstituencyTree& tree, int ni, std::ostringstream& os) {
  const TreeNode& node = tree.nodes[ni];
  if (node.is_leaf()) {
    const std::string& tag = node.label;
    if (tag.empty())
      os << tree.tokens[node.start].surface;
    else
      os << '(' << tag << ' ' << tree.tokens[node.start].surface << ')';
    return;
  }
  os << '(' << (node.label.empty() ? "X" : node.label);
  for (int ci : node.children) {
    os << ' ';
    serialize_node(tree, ci, os);
  }
  os << ')';
}

// Collapses unary internal chains, then right-branches k-ary nodes.
int binarize_node(const ConstituencyTree& in, int ni, ConstituencyTree& out);

int combine_right_branching(const ConstituencyTree& in, const std::vector<int>& in_children,
                            size_t first, const std::string& label, ConstituencyTree& out) {
  if (first + 1 == in_children.size()) return binarize_node(in, in_children[first], out);
  int left = binarize_node(in, in_children[first], out);
  int right = combine_right_branching(in, in_children, first + 1, "X", out);
  int start = out.nodes[left].start;
  int end = out.nodes[right].end;
  out.nodes.push_back({start, end, label, {left, right}});
  return static_cast<int>(out.nodes.size()) - 1;
}

int binarize_node(const ConstituencyTree& in, int ni, ConstituencyTree& out) {
  const TreeNode* node = &in.nodes[ni];
  std::string label = node->label;
  while (node->children.size() == 1) {
    const TreeNode& child = in.nodes[node->children[0]];
    if (child.is_leaf()) {
      out.nodes.push_back({child.start, child.end, child.label, {}});
      return static_cast<int>(out.nodes.size()) - 1;
    }
    node = &child;  // unary collapse, keep outermost label
  }
  if (node->is_leaf()) {
    out.nodes.push_back({node->start, node->end, node->label, {}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  if (node->children.size() == 2) {
    int left = binarize_node(in, node->children[0], out);
    int right = binarize_node(in, node->children[1], out);
    out.nodes.push_back({node->start, node->end, label, {left, right}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  return combine_right_branching(in, node->children, 0, label, out);
}

void collect_spans(const ConstituencyTree& tree, int ni, SpanSet& out) {
  const TreeNode& node = tree.nodes[ni];
  out.insert({node.start, node.end});
  for (int ci : node.children) collect_spans(tree, ci, out);
}

}  // namespace

ConstituencyTree parse_bracketed(const std::string& text) {
  BracketParser parser(text);
  return parser.run();
}

std::string serialize_bracketed(const ConstituencyTree& tree) {
  std::ostringstream os;
  if (tree.nodes[tree.root].is_leaf()) {
    // a bare single-token tree still needs surrounding brackets
    const TreeNode& leaf = tree.nodes[tree.root];
    os << '(' << (leaf.label.empty() ? "X" : leaf.label) << ' '
       << tree.tokens[leaf.start].surface << ')';
  } else {
    serialize_node(tree, tree.root, os);
  }
  return os.str();
}

ConstituencyTree binarize(const ConstituencyTree& tree) {
  ConstituencyTree out;
  out.tokens = tree.tokens;
  out.root = binarize_node(tree, tree.root, out);
  return out;
}

SpanSet node_spans(const ConstituencyTree& tree) {
  SpanSet out;
  collect_spans(tree, tree.root, out);
  return out;
}

SpanSet eval_spans(const ConstituencyTree& tree, const SpanPolicy& policy) {
  SpanSet all = node_spans(tree);
  SpanSet out;
  const int n = tree.length();
  for (const Span& s : all) {
    if (s.second - s.first < 2) continue;
    if (!policy.include_root && s.first == 0 && s.second == n) continue;
    out.insert(s);
  }
  return out;
}

double unlabeled_f1(const ConstituencyTree& pred, const ConstituencyTree& ref,
                    const SpanPolicy& policy) {
  if (pred.length() != ref.length())
    throw Error("LengthMismatch", "trees cover different sentence lengths");
  SpanSet p = eval_spans(pred, policy);
  SpanSet r = eval_spans(ref, policy);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  size_t match = 0;
  for (const Span& s : p) match += r.count(s);
  if (match == 0) return 0.0;
  double precision = static_cast<double>(match) / p.size();
  double recall = static_cast<double>(match) / r.size();
  return 2.0 * precision * recall / (precision + recall);
}

double corpus_f1(const std::vector<ConstituencyTree>& preds,
                 const std::vector<ConstituencyTree>& refs,
                 const SpanPolicy& policy) {
  if (preds.empty()) throw Error("EmptyCorpus", "no sentences to score");
  if (preds.size() != refs.size())
    throw Error("AlignmentMismatch", "prediction and reference counts differ");
  double sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) sum += unlabeled_f1(preds[i], refs[i], policy);
  return sum / static_cast<double>(preds.size());
}

bool same_structure(const ConstituencyTree& a, const ConstituencyTree& b) {
  if (a.length() != b.length()) return false;
  for (int i = 0; i < a.length(); ++i)
    if (a.tokens[i].surface != b.tokens[i].surface || a.tokens[i].tag != b.tokens[i].tag)
      return false;
  return serialize_bracketed(a) == serialize_bracketed(b);
}

}  // namespace pakd
