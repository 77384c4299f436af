#ifndef PAKD_STUDENT_HPP
#define PAKD_STUDENT_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pakd/treebank.hpp"

namespace pakd {

// Sparse feature counts keyed by template-expanded strings.
using FeatureVector = std::map<std::string, int>;

struct Hyperparams {
  int epochs = 20;
  bool shuffle = true;
  std::string feature_version = "v1";
};

// Linear span-scoring parser state. Prediction always uses the averaged
// weights; the raw weights only drive online training updates.
struct StudentModel {
  std::map<std::string, double> raw_weights;
  std::map<std::string, double> averaged_weights;
  std::uint64_t updates_seen = 0;
  int epochs_trained = 0;
  std::uint64_t seed = 0;
  Hyperparams hyperparams;
};

struct TraceRecord {
  std::string example_id;
  int epoch = 0;  // 1-based; recorded at epoch end
  double f1_vs_target = 0.0;
};

using TrainTrace = std::vector<TraceRecord>;

struct TrainExample {
  std::string id;
  std::vector<Token> tokens;
  ConstituencyTree target;
};

struct TrainConfig {
  int epochs = 20;
  std::uint64_t seed = 1;
  // Non-negative integer: labeled examples are appended to every epoch's
  // stream beta times.
  int beta = 0;
  std::vector<TrainExample> labeled_examples;
};

struct TrainResult {
  StudentModel model;
  TrainTrace trace;
};

// Called at the end of each epoch (1-based) with a snapshot whose averaged
// weights reflect all steps so far.
using EpochCallback = std::function<void(int epoch, const StudentModel& snapshot)>;

FeatureVector extract_features(const std::vector<Token>& tokens, Span span);

// Exact chart argmax over all binary trees under the averaged weights.
// Ties break toward the smaller split point at every cell.
ConstituencyTree decode(const StudentModel& model, const std::vector<Token>& tokens);

struct TwoBest {
  ConstituencyTree best;
  std::optional<ConstituencyTree> second;
  double margin = 0.0;  // +infinity when the tree is forced
};

TwoBest decode_2best(const StudentModel& model, const std::vector<Token>& tokens);

// Length-normalized 2-best margin; +infinity for forced trees (n <= 2).
double confidence(const StudentModel& model, const std::vector<Token>& tokens);

TrainResult train(const std::vector<TrainExample>& examples, const TrainConfig& config,
                  const EpochCallback& epoch_callback = nullptr);

void save_model(const StudentModel& model, const std::string& path);
StudentModel load_model(const std::string& path);

}  // namespace pakd

#endif
