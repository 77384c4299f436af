#ifndef PAKD_ANALYSIS_HPP
#define PAKD_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "pakd/distill.hpp"
#include "pakd/teachersim.hpp"

namespace pakd {

// Denoising margin: gold F1 of the student prediction minus gold F1 of the
// teacher label for the same sentence. Positive means the student denoised.
double delta(const AnnotatedExample& example);

struct BucketRow {
  int bucket = 0;  // 0 = most converged
  int count = 0;
  double convergence_min = 0.0;
  double convergence_max = 0.0;
  double mean_convergence = 0.0;  // mean s(student, teacher)
  // Gold-dependent columns; absent when the corpus carries no gold trees.
  std::optional<double> teacher_gold_f1;
  std::optional<double> student_gold_f1;
  std::optional<double> pct_student_better;  // fraction with delta strictly > 0
};

// Ranks examples by student-teacher convergence (descending, ties by id) and
// splits them into n_buckets groups whose sizes differ by at most one.
std::vector<BucketRow> bucket_analysis(const Corpus& corpus, int n_buckets = 20);

struct DisparityCurve {
  // Per-epoch (1-based) mean F1(student prediction, teacher label), each
  // cohort measured on its own training half.
  std::vector<double> high;
  std::vector<double> low;
};

// Median split by teacher-label gold F1 (ties by id); trains one fresh
// student per half on that half's teacher labels.
DisparityCurve disparity_experiment(const Corpus& corpus, int epochs, std::uint64_t seed);

struct SweepConfig {
  int epochs = 20;
  std::uint64_t seed = 1;
  int min_len = 3;
  int max_len = 12;
};

struct SizeSweepRow {
  int size = 0;
  // pct_student_better over the full training set, averaged across the
  // epoch-end checkpoints of epochs 1..E (epoch 0 excluded).
  double mean_pct_student_better = 0.0;
};

std::vector<SizeSweepRow> size_sweep(const SyntheticGrammar& grammar,
                                     const std::vector<int>& sizes, const NoiseConfig& noise,
                                     const SweepConfig& config);

struct SftRow {
  int labeled_size = 0;
  double sft_f1 = 0.0;
  double pakd_f1 = 0.0;  // constant across rows: one PA-KD configuration
};

struct SftComparison {
  std::vector<SftRow> rows;
  int pakd_labeled = 0;
  int crossover = -1;  // smallest labeled size with SFT F1 >= PA-KD F1, or -1
};

// SFT = supervised training on k gold sentences. The PA-KD line distills a
// supervised teacher built from pakd_labeled gold sentences over a fresh
// unlabeled pool, so both lines share the same label budget currency.
SftComparison sft_comparison(const SyntheticGrammar& grammar,
                             const std::vector<int>& labeled_sizes, int pakd_labeled,
                             int unlabeled_pool, int test_size, const SweepConfig& config);

}  // namespace pakd

#endif
