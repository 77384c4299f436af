#ifndef PAKD_DISTILL_HPP
#define PAKD_DISTILL_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pakd/student.hpp"
#include "pakd/teachersim.hpp"

namespace pakd {

// Convergence split: T_high holds every example whose student-teacher F1 is
// at or above the threshold score of the top r%, so threshold ties all enter
// the high side.
struct PartitionResult {
  std::vector<std::string> high;
  std::vector<std::string> low;
  double threshold = 0.0;
  std::map<std::string, double> scores;  // per-example s(teacher, student)
  double r_percent = 50.0;
};

enum class PipelineKind { Slkd, SelectiveKd, PaKd, Sd, SdHc, Supervised };

struct PipelineConfig {
  PipelineKind kind = PipelineKind::Slkd;
  int s0_epochs = 2;
  int peer_epochs = 20;
  int final_epochs = 20;
  int sd_gen_epochs = 4;  // short budget for the self-label generator
  double r_percent = 50.0;
  std::uint64_t seed = 1;
  int beta = 0;
  std::vector<TrainExample> labeled_examples;  // replicated when beta > 0
};

struct PipelineResult {
  StudentModel model;
  nlohmann::json report;
};

const char* pipeline_name(PipelineKind kind);
PipelineKind pipeline_from_name(const std::string& name);

// Core ranking over (id, score) pairs; ties at the threshold all enter high.
PartitionResult partition_scores(const std::vector<std::pair<std::string, double>>& scores,
                                 double r_percent);

// student_preds aligned with corpus; every example needs a teacher label.
PartitionResult partition_by_convergence(const Corpus& corpus,
                                         const std::vector<ConstituencyTree>& student_preds,
                                         double r_percent);

// test may be null; when present the report carries test_f1 vs test gold.
PipelineResult run_slkd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config);
PipelineResult run_selective_kd(const Corpus& corpus, const Corpus* test,
                                const PipelineConfig& config);
PipelineResult run_pa_kd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config);
PipelineResult run_sd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config);
PipelineResult run_sd_hc(const Corpus& corpus, const Corpus* test, const PipelineConfig& config);
PipelineResult run_supervised(const Corpus& labeled, const Corpus* test,
                              const PipelineConfig& config);

PipelineResult run_pipeline(const Corpus& corpus, const Corpus* test,
                            const PipelineConfig& config);

// Shared helpers used by analysis and the CLI as well.
std::vector<ConstituencyTree> decode_corpus(const StudentModel& model, const Corpus& corpus);
double test_f1(const StudentModel& model, const Corpus& test);
std::vector<TrainExample> to_train_examples(const Corpus& corpus, bool use_teacher);

}  // namespace pakd

#endif
