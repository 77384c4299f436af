#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "pakd/teachersim.hpp"

using namespace pakd;
using namespace pakd::testing;

namespace {

std::vector<ConstituencyTree> golds(const Corpus& corpus) {
  std::vector<ConstituencyTree> out;
  for (const auto& ex : corpus) out.push_back(*ex.gold);
  return out;
}

std::vector<ConstituencyTree> teachers(const Corpus& corpus) {
  std::vector<ConstituencyTree> out;
  for (const auto& ex : corpus) out.push_back(*ex.teacher);
  return out;
}

}  // namespace

TEST_CASE("sample_grammar determinism and normalization") {
  GrammarConfig cfg;
  SyntheticGrammar g1 = sample_grammar(cfg);
  SyntheticGrammar g2 = sample_grammar(cfg);
  REQUIRE(g1.rules.size() == g2.rules.size());
  for (size_t a = 0; a < g1.rules.size(); ++a) {
    double total = 0.0;
    for (size_t r = 0; r < g1.rules[a].size(); ++r) {
      CHECK(g1.rules[a][r].left == g2.rules[a][r].left);
      CHECK(g1.rules[a][r].prob == g2.rules[a][r].prob);
      total += g1.rules[a][r].prob;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    double emit = 0.0;
    for (double p : g1.emission[a]) emit += p;
    CHECK(emit == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sample_grammar degenerate configs") {
  GrammarConfig cfg;
  cfg.nonterminals = 1;
  CHECK_THROWS_WITH_AS(sample_grammar(cfg), doctest::Contains("DegenerateConfig"), Error);
  cfg.nonterminals = 4;
  cfg.terminals = 5;
  CHECK_THROWS_WITH_AS(sample_grammar(cfg), doctest::Contains("DegenerateConfig"), Error);
}

TEST_CASE("sample_corpus basic invariants") {
  SyntheticGrammar g = sample_grammar(GrammarConfig{});
  Corpus corpus = sample_corpus(g, 50, 5, 15, 3);
  CHECK(corpus.size() == 50);
  for (const auto& ex : corpus) {
    CHECK(ex.gold.has_value());
    CHECK(ex.gold->length() >= 5);
    CHECK(ex.gold->length() <= 15);
    ex.gold->validate();
    // gold trees are binary by construction
    for (const TreeNode& node : ex.gold->nodes)
      CHECK((node.children.empty() || node.children.size() == 2));
    for (size_t i = 0; i < ex.tokens.size(); ++i)
      CHECK(ex.tokens[i].surface == ex.gold->tokens[i].surface);
  }
  Corpus again = sample_corpus(g, 50, 5, 15, 3);
  for (size_t i = 0; i < corpus.size(); ++i)
    CHECK(serialize_bracketed(*corpus[i].gold) == serialize_bracketed(*again[i].gold));
}

TEST_CASE("sample_corpus infeasible bounds") {
  SyntheticGrammar g = sample_grammar(GrammarConfig{});
  CHECK_THROWS_WITH_AS(sample_corpus(g, 1, 400, 500, 1),
                       doctest::Contains("LengthBoundsInfeasible"), Error);
}

TEST_CASE("corrupt eta=0 is the identity") {
  std::mt19937_64 rng(1);
  for (int iter = 0; iter < 30; ++iter) {
    ConstituencyTree t = random_binary_tree(2 + static_cast<int>(rng() % 10), rng);
    ConstituencyTree c = corrupt(t, 0.0, NoiseMode::Rotation, rng);
    CHECK(node_spans(c) == node_spans(t));
    ConstituencyTree c2 = corrupt(t, 0.0, NoiseMode::RandomReplacement, rng);
    CHECK(node_spans(c2) == node_spans(t));
  }
}

TEST_CASE("corrupt degenerate n=2 replacement unchanged") {
  std::mt19937_64 rng(2);
  ConstituencyTree t = random_binary_tree(2, rng);
  ConstituencyTree c = corrupt(t, 1.0, NoiseMode::RandomReplacement, rng);
  CHECK(node_spans(c) == node_spans(t));
}

TEST_CASE("rotation count formula") {
  // eta=0.5, n=10 -> round(0.5 * 8) = 4 rotations; each single rotation
  // changes exactly one span, so at most 4 spans differ
  std::mt19937_64 rng(3);
  ConstituencyTree t = random_binary_tree(10, rng);
  ConstituencyTree c = corrupt(t, 0.5, NoiseMode::Rotation, rng);
  SpanSet before = node_spans(t);
  SpanSet after = node_spans(c);
  int removed = 0;
  for (const Span& s : before)
    if (!after.count(s)) ++removed;
  CHECK(removed <= 4);
  CHECK(removed >= 1);
}

TEST_CASE("corrupt preserves tokens and binary validity") {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 300; ++iter) {
    int n = 2 + static_cast<int>(rng() % 12);
    ConstituencyTree t = random_binary_tree(n, rng);
    double eta = random_unit(rng);
    NoiseMode mode = rng() % 2 ? NoiseMode::Rotation : NoiseMode::RandomReplacement;
    ConstituencyTree c = corrupt(t, eta, mode, rng);
    c.validate();
    CHECK(c.length() == n);
    for (int i = 0; i < n; ++i) CHECK(c.tokens[i].surface == t.tokens[i].surface);
    for (const TreeNode& node : c.nodes)
      CHECK((node.children.empty() || node.children.size() == 2));
  }
}

TEST_CASE("mean gold F1 non-increasing in eta (statistical)") {
  SyntheticGrammar g = sample_grammar(GrammarConfig{});
  Corpus corpus = sample_corpus(g, 500, 6, 14, 9);
  std::vector<double> etas = {0.0, 0.25, 0.5, 0.75, 1.0};
  double prev = 2.0;
  std::mt19937_64 rng(5);
  for (double eta : etas) {
    double sum = 0.0;
    for (const auto& ex : corpus) {
      ConstituencyTree c = corrupt(*ex.gold, eta, NoiseMode::Rotation, rng);
      sum += unlabeled_f1(c, *ex.gold);
    }
    double mean = sum / corpus.size();
    CHECK(mean <= prev + 0.02);  // small statistical slack
    prev = mean;
  }
}

TEST_CASE("make_teacher_labels tiers") {
  SyntheticGrammar g = sample_grammar(GrammarConfig{});
  Corpus corpus = sample_corpus(g, 2000, 5, 15, 21);

  SUBCASE("single clean tier") {
    NoiseConfig noise;
    noise.tiers = {{1.0, 0.0}};
    make_teacher_labels(corpus, noise);
    CHECK(corpus_f1(teachers(corpus), golds(corpus)) == 1.0);
  }

  SUBCASE("two tiers separate by gold F1 and frequencies match weights") {
    NoiseConfig noise;
    noise.tiers = {{0.5, 0.0}, {0.5, 0.8}};
    noise.seed = 13;
    make_teacher_labels(corpus, noise);
    std::vector<ConstituencyTree> t0p, t0g, t1p, t1g;
    int tier0 = 0;
    for (const auto& ex : corpus) {
      if (*ex.noise_tier == 0) {
        ++tier0;
        t0p.push_back(*ex.teacher);
        t0g.push_back(*ex.gold);
      } else {
        t1p.push_back(*ex.teacher);
        t1g.push_back(*ex.gold);
      }
    }
    CHECK(corpus_f1(t0p, t0g) == 1.0);
    CHECK(corpus_f1(t1p, t1g) < 0.9);
    // binomial 3-sigma bound around 1000 for n=2000, p=0.5
    double sigma = std::sqrt(2000 * 0.25);
    CHECK(std::abs(tier0 - 1000.0) <= 3.0 * sigma);
  }

  SUBCASE("weights must sum to one") {
    NoiseConfig noise;
    noise.tiers = {{0.5, 0.0}, {0.4, 0.5}};
    CHECK_THROWS_WITH_AS(make_teacher_labels(corpus, noise),
                         doctest::Contains("DegenerateConfig"), Error);
  }

  SUBCASE("gold required") {
    Corpus bare;
    AnnotatedExample ex;
    ex.id = "x";
    ex.tokens = make_tokens(3);
    bare.push_back(ex);
    NoiseConfig noise;
    CHECK_THROWS_WITH_AS(make_teacher_labels(bare, noise), doctest::Contains("MissingGold"),
                         Error);
  }
}

TEST_CASE("jsonl round trip") {
  SyntheticGrammar g = sample_grammar(GrammarConfig{});
  Corpus corpus = sample_corpus(g, 20, 4, 12, 31);
  NoiseConfig noise;
  noise.tiers = {{0.5, 0.0}, {0.5, 0.6}};
  make_teacher_labels(corpus, noise);

  std::string path = "test_corpus.tmp.jsonl";
  write_jsonl(corpus, path, R"({"config_hash":"abc"})");
  Corpus back = ingest_jsonl(path);
  REQUIRE(back.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(back[i].id == corpus[i].id);
    CHECK(serialize_bracketed(*back[i].gold) == serialize_bracketed(*corpus[i].gold));
    CHECK(serialize_bracketed(*back[i].teacher) == serialize_bracketed(*corpus[i].teacher));
    CHECK(*back[i].noise_tier == *corpus[i].noise_tier);
  }
  std::remove(path.c_str());
}

TEST_CASE("ingest_jsonl errors carry line numbers") {
  std::string path = "test_bad.tmp.jsonl";
  {
    std::ofstream out(path);
    out << R"x({"id":"a","tokens":["x","y"],"gold":"(S x y)"})x" << "\n";
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(ingest_jsonl(path), doctest::Contains("line 2"), Error);
  {
    std::ofstream out(path);
    out << R"x({"id":"a","tokens":["x","y"],"gold":"(S x z)"})x" << "\n";
  }
  CHECK_THROWS_WITH_AS(ingest_jsonl(path), doctest::Contains("TokenMismatch"), Error);
  std::remove(path.c_str());
}
