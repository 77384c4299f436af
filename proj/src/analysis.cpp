#include "pakd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pakd/error.hpp"
#include "pakd/student.hpp"

namespace pakd {

namespace {

void require_field(bool present, const char* name, const std::string& id) {
  if (!present) throw Error("MissingField", "example '" + id + "' lacks " + name);
}

// Nonzero odd multiplier keeps derived seeds distinct per purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return seed * 0x9e3779b97f4a7c15ull + salt;
}

double pct_delta_positive(const StudentModel& model, const Corpus& corpus) {
  int better = 0;
  for (const auto& ex : corpus) {
    ConstituencyTree pred = decode(model, ex.tokens);
    double d = unlabeled_f1(pred, *ex.gold) - unlabeled_f1(*ex.teacher, *ex.gold);
    if (d > 0.0) ++better;
  }
  return corpus.empty() ? 0.0 : static_cast<double>(better) / corpus.size();
}

}  // namespace

double delta(const AnnotatedExample& example) {
  require_field(example.gold.has_value(), "gold", example.id);
  require_field(example.teacher.has_value(), "teacher", example.id);
  require_field(example.student.has_value(), "student", example.id);
  return unlabeled_f1(*example.student, *example.gold) -
         unlabeled_f1(*example.teacher, *example.gold);
}

std::vector<BucketRow> bucket_analysis(const Corpus& corpus, int n_buckets) {
  if (corpus.empty()) throw Error("EmptyCorpus", "bucket_analysis needs at least one example");
  if (n_buckets < 1) throw Error("DegenerateConfig", "n_buckets must be positive");
  struct Item {
    const AnnotatedExample* ex;
    double convergence;
  };
  std::vector<Item> items;
  bool have_gold = true;
  for (const auto& ex : corpus) {
    require_field(ex.teacher.has_value(), "teacher", ex.id);
    require_field(ex.student.has_value(), "student", ex.id);
    have_gold = have_gold && ex.gold.has_value();
    items.push_back({&ex, unlabeled_f1(*ex.student, *ex.teacher)});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.convergence != b.convergence) return a.convergence > b.convergence;
    return a.ex->id < b.ex->id;
  });

  int n = static_cast<int>(items.size());
  int n_eff = std::min(n_buckets, n);
  int base = n / n_eff, rem = n % n_eff;
  std::vector<BucketRow> rows;
  int pos = 0;
  for (int b = 0; b < n_eff; ++b) {
    int size = base + (b < rem ? 1 : 0);
    BucketRow row;
    row.bucket = b;
    row.count = size;
    row.convergence_max = items[pos].convergence;
    row.convergence_min = items[pos + size - 1].convergence;
    double conv = 0.0, tg = 0.0, sg = 0.0;
    int better = 0;
    for (int i = pos; i < pos + size; ++i) {
      const AnnotatedExample& ex = *items[i].ex;
      conv += items[i].convergence;
      if (have_gold) {
        double t = unlabeled_f1(*ex.teacher, *ex.gold);
        double s = unlabeled_f1(*ex.student, *ex.gold);
        tg += t;
        sg += s;
        if (s > t) ++better;
      }
    }
    row.mean_convergence = conv / size;
    if (have_gold) {
      row.teacher_gold_f1 = tg / size;
      row.student_gold_f1 = sg / size;
      row.pct_student_better = static_cast<double>(better) / size;
    }
    rows.push_back(row);
    pos += size;
  }
  return rows;
}

DisparityCurve disparity_experiment(const Corpus& corpus, int epochs, std::uint64_t seed) {
  if (corpus.empty()) throw Error("EmptyCorpus", "disparity_experiment needs examples");
  if (epochs < 1) throw Error("DegenerateConfig", "epochs must be positive");
  struct Item {
    const AnnotatedExample* ex;
    double gold_f1;
  };
  std::vector<Item> items;
  for (const auto& ex : corpus) {
    if (!ex.gold.has_value())
      throw Error("MissingGold", "example '" + ex.id + "' lacks a gold tree");
    require_field(ex.teacher.has_value(), "teacher", ex.id);
    items.push_back({&ex, unlabeled_f1(*ex.teacher, *ex.gold)});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.gold_f1 != b.gold_f1) return a.gold_f1 > b.gold_f1;
    return a.ex->id < b.ex->id;
  });
  int n_high = (static_cast<int>(items.size()) + 1) / 2;

  auto cohort_curve = [&](int begin, int end, std::uint64_t cohort_seed) {
    std::vector<TrainExample> exs;
    for (int i = begin; i < end; ++i) {
      const AnnotatedExample& ex = *items[i].ex;
      exs.push_back({ex.id, ex.tokens, binarize(*ex.teacher)});
    }
    TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = cohort_seed;
    TrainResult result = train(exs, tc);
    std::vector<double> sums(epochs + 1, 0.0);
    std::vector<int> counts(epochs + 1, 0);
    for (const TraceRecord& rec : result.trace) {
      sums[rec.epoch] += rec.f1_vs_target;
      counts[rec.epoch] += 1;
    }
    std::vector<double> curve;
    for (int e = 1; e <= epochs; ++e) curve.push_back(sums[e] / std::max(1, counts[e]));
    return curve;
  };

  DisparityCurve out;
  out.high = cohort_curve(0, n_high, seed);
  out.low = cohort_curve(n_high, static_cast<int>(items.size()), seed);
  return out;
}

std::vector<SizeSweepRow> size_sweep(const SyntheticGrammar& grammar,
                                     const std::vector<int>& sizes, const NoiseConfig& noise,
                                     const SweepConfig& config) {
  if (sizes.size() < 2) throw Error("SizesInvalid", "need at least two sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i)
    if (sizes[i] >= sizes[i + 1]) throw Error("SizesInvalid", "sizes must be strictly ascending");
  if (sizes.front() < 1) throw Error("SizesInvalid", "sizes must be positive");

  std::vector<SizeSweepRow> rows;
  for (int size : sizes) {
    Corpus corpus = sample_corpus(grammar, size, config.min_len, config.max_len,
                                  derive_seed(config.seed, 0x53495a45), "z");
    make_teacher_labels(corpus, noise);
    std::vector<TrainExample> exs = to_train_examples(corpus, /*use_teacher=*/true);
    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.seed = config.seed;
    double sum_pct = 0.0;
    int checkpoints = 0;
    train(exs, tc, [&](int, const StudentModel& snapshot) {
      sum_pct += pct_delta_positive(snapshot, corpus);
      ++checkpoints;
    });
    rows.push_back({size, checkpoints ? sum_pct / checkpoints : 0.0});
  }
  return rows;
}

SftComparison sft_comparison(const SyntheticGrammar& grammar,
                             const std::vector<int>& labeled_sizes, int pakd_labeled,
                             int unlabeled_pool, int test_size, const SweepConfig& config) {
  if (labeled_sizes.empty()) throw Error("SizesInvalid", "need at least one labeled size");
  for (size_t i = 0; i + 1 < labeled_sizes.size(); ++i)
    if (labeled_sizes[i] >= labeled_sizes[i + 1])
      throw Error("SizesInvalid", "labeled sizes must be strictly ascending");
  if (pakd_labeled < 1 || labeled_sizes.front() < 1)
    throw Error("SizesInvalid", "label budgets must be positive");

  int max_labeled = std::max(labeled_sizes.back(), pakd_labeled);
  Corpus labeled = sample_corpus(grammar, max_labeled, config.min_len, config.max_len,
                                 derive_seed(config.seed, 0x4c414245), "l");
  Corpus pool = sample_corpus(grammar, unlabeled_pool, config.min_len, config.max_len,
                              derive_seed(config.seed, 0x504f4f4c), "u");
  Corpus test = sample_corpus(grammar, test_size, config.min_len, config.max_len,
                              derive_seed(config.seed, 0x54455354), "t");

  auto supervised_on = [&](int k) {
    Corpus subset(labeled.begin(), labeled.begin() + k);
    PipelineConfig pc;
    pc.kind = PipelineKind::Supervised;
    pc.final_epochs = config.epochs;
    pc.seed = config.seed;
    return run_supervised(subset, &test, pc);
  };

  // One PA-KD configuration: a weak supervised teacher annotates the pool.
  PipelineResult teacher = supervised_on(pakd_labeled);
  Corpus annotated = pool;
  std::vector<ConstituencyTree> teacher_labels = decode_corpus(teacher.model, annotated);
  for (size_t i = 0; i < annotated.size(); ++i) annotated[i].teacher = teacher_labels[i];
  PipelineConfig pc;
  pc.kind = PipelineKind::PaKd;
  pc.seed = config.seed;
  double pakd_f1 = run_pa_kd(annotated, &test, pc).report["test_f1"];

  SftComparison out;
  out.pakd_labeled = pakd_labeled;
  for (int k : labeled_sizes) {
    double sft_f1 = supervised_on(k).report["test_f1"];
    out.rows.push_back({k, sft_f1, pakd_f1});
    if (out.crossover < 0 && sft_f1 >= pakd_f1) out.crossover = k;
  }
  return out;
}

}  // namespace pakd
