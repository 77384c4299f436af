#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "pakd/treebank.hpp"

using namespace pakd;
using namespace pakd::testing;

TEST_CASE("parse_bracketed basic structure") {
  ConstituencyTree t = parse_bracketed("(S (NP a) (VP b))");
  CHECK(t.length() == 2);
  CHECK(t.tokens[0].surface == "a");
  CHECK(t.tokens[1].surface == "b");
  SpanSet spans = node_spans(t);
  CHECK(spans == SpanSet{{0, 2}, {0, 1}, {1, 2}});
}

TEST_CASE("parse_bracketed single token") {
  ConstituencyTree t = parse_bracketed("(X a)");
  CHECK(t.length() == 1);
  CHECK(node_spans(t) == SpanSet{{0, 1}});
}

TEST_CASE("parse_bracketed errors") {
  CHECK_THROWS_WITH_AS(parse_bracketed("((a (b)"), doctest::Contains("UnbalancedBrackets"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_bracketed("(S () a)"), doctest::Contains("EmptyConstituent"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_bracketed("   "), doctest::Contains("NoTokens"), Error);
  CHECK_THROWS_WITH_AS(parse_bracketed("(S a) junk"), doctest::Contains("UnbalancedBrackets"),
                       Error);
}

TEST_CASE("error messages carry byte offsets") {
  try {
    parse_bracketed("((a (b)");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("serialize round-trip on spec shapes") {
  for (const char* text : {"(S (NP a) (VP b))", "(X a)", "(S (NP (DT the) (NN dog)) (VP ran))",
                           "(TOP (S (NP a b c) (VP d (PP e f))))"}) {
    ConstituencyTree t = parse_bracketed(text);
    CHECK(serialize_bracketed(t) == text);
  }
}

TEST_CASE("right-branching serialization shape") {
  ConstituencyTree t = parse_bracketed("(X a (X b c))");
  CHECK(serialize_bracketed(t) == "(X a (X b c))");
  CHECK(node_spans(t) == SpanSet{{0, 3}, {0, 1}, {1, 2}, {2, 3}, {1, 3}});
}

TEST_CASE("round-trip property on random trees") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 300; ++iter) {
    int n = 1 + static_cast<int>(rng() % 9);
    ConstituencyTree t = random_kary_tree(n, rng);
    std::string s = serialize_bracketed(t);
    ConstituencyTree back = parse_bracketed(s);
    CHECK(serialize_bracketed(back) == s);
    CHECK(node_spans(back) == node_spans(t));
  }
}

TEST_CASE("binarize fixpoint on already-binary trees") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    int n = 1 + static_cast<int>(rng() % 8);
    ConstituencyTree t = random_binary_tree(n, rng);
    ConstituencyTree b = binarize(t);
    CHECK(node_spans(b) == node_spans(t));
  }
}

TEST_CASE("binarize flat nodes right-branching") {
  ConstituencyTree t3 = binarize(parse_bracketed("(S a b c)"));
  CHECK(node_spans(t3) == SpanSet{{0, 3}, {0, 1}, {1, 2}, {2, 3}, {1, 3}});
  ConstituencyTree t4 = binarize(parse_bracketed("(S a b c d)"));
  // hand-enumerated right-branching intermediates: (1,4) and (2,4)
  CHECK(node_spans(t4) ==
        SpanSet{{0, 4}, {0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 4}, {2, 4}});
}

TEST_CASE("binarize output is binary and preserves spans") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    int n = 1 + static_cast<int>(rng() % 10);
    ConstituencyTree t = random_kary_tree(n, rng);
    ConstituencyTree b = binarize(t);
    b.validate();
    for (const TreeNode& node : b.nodes)
      CHECK((node.children.empty() || node.children.size() == 2));
    SpanSet before = node_spans(t);
    SpanSet after = node_spans(b);
    for (const Span& s : before) CHECK(after.count(s) == 1);
    // recall of original spans under the binarized tree is 1
    if (n >= 3) {
      SpanSet ev = eval_spans(t);
      SpanSet bv = eval_spans(b);
      for (const Span& s : ev) CHECK(bv.count(s) == 1);
    }
  }
}

TEST_CASE("eval_spans policy") {
  ConstituencyTree t = parse_bracketed("(S (NP a) (VP b c))");
  CHECK(eval_spans(t) == SpanSet{{1, 3}});
  CHECK(eval_spans(t, {.include_root = true}) == SpanSet{{0, 3}, {1, 3}});
  ConstituencyTree two = parse_bracketed("(S (NP a) (VP b))");
  CHECK(eval_spans(two).empty());
}

TEST_CASE("eval_spans never returns width-1 spans") {
  std::mt19937_64 rng(23);
  for (int iter = 0; iter < 100; ++iter) {
    ConstituencyTree t = random_kary_tree(2 + static_cast<int>(rng() % 8), rng);
    for (const Span& s : eval_spans(t)) CHECK(s.second - s.first >= 2);
  }
}

TEST_CASE("unlabeled_f1 spec examples") {
  ConstituencyTree a = parse_bracketed("(S (A a b) (B c d))");  // spans {(0,2),(2,4)}
  CHECK(unlabeled_f1(a, a) == 1.0);
  // pred {(0,2),(2,4)} vs ref {(0,2),(0,3)}: one match, P=R=0.5
  ConstituencyTree ref = parse_bracketed("(S (A (B a b) c) d)");
  CHECK(unlabeled_f1(a, ref) == doctest::Approx(0.5).epsilon(1e-12));
  ConstituencyTree two1 = parse_bracketed("(S a b)");
  ConstituencyTree two2 = parse_bracketed("(T (X a) b)");
  CHECK(unlabeled_f1(two1, two2) == 1.0);
  CHECK_THROWS_WITH_AS(unlabeled_f1(a, two1), doctest::Contains("LengthMismatch"), Error);
}

TEST_CASE("unlabeled_f1 matches brute-force oracle") {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 500; ++iter) {
    int n = 2 + static_cast<int>(rng() % 8);
    ConstituencyTree pred = random_kary_tree(n, rng);
    ConstituencyTree ref = random_kary_tree(n, rng);
    double got = unlabeled_f1(pred, ref);
    double want = brute_force_f1(pred, ref);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK((got == 1.0) == (eval_spans(pred) == eval_spans(ref)));
    // symmetry of counts: precision(pred, ref) == recall(ref, pred) implies
    // F1 itself is symmetric
    CHECK(unlabeled_f1(ref, pred) == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("corpus_f1") {
  ConstituencyTree a = parse_bracketed("(S (A a b) (B c d))");
  ConstituencyTree b = parse_bracketed("(S a (B b c d))");
  ConstituencyTree c = parse_bracketed("(S (A a b c) d)");
  CHECK(corpus_f1({a, b}, {a, b}) == 1.0);
  // a-vs-a = 1.0, b-vs-c = 0.0 ({(1,4)} vs {(0,3)})
  CHECK(corpus_f1({a, b}, {a, c}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(corpus_f1({}, {}), doctest::Contains("EmptyCorpus"), Error);
  CHECK_THROWS_WITH_AS(corpus_f1({a}, {a, b}), doctest::Contains("AlignmentMismatch"), Error);
  // mixed corpus equals independent per-sentence recompute
  std::mt19937_64 rng(41);
  std::vector<ConstituencyTree> preds, refs;
  double sum = 0.0;
  for (int i = 0; i < 20; ++i) {
    int n = 2 + static_cast<int>(rng() % 7);
    preds.push_back(random_kary_tree(n, rng));
    refs.push_back(random_kary_tree(n, rng));
    sum += brute_force_f1(preds.back(), refs.back());
  }
  CHECK(corpus_f1(preds, refs) == doctest::Approx(sum / 20.0).epsilon(1e-12));
}
