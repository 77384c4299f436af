#ifndef PAKD_CONFIG_HPP
#define PAKD_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pakd/distill.hpp"
#include "pakd/teachersim.hpp"

namespace pakd {

struct CorpusConfig {
  int unlabeled = 5000;
  int labeled = 250;
  int test = 1000;
  int min_len = 3;
  int max_len = 12;
  std::uint64_t pool_seed = 7;
  std::uint64_t labeled_seed = 777;
  std::uint64_t test_seed = 7777;
};

// Teacher-label source for cmd_annotate: tiered structural noise, or a weak
// supervised model trained on the first labeled_k gold sentences.
struct AnnotateConfig {
  std::string source = "noise";  // "noise" | "supervised"
  int labeled_k = 250;
};

struct AnalysisConfig {
  std::vector<std::string> selections;
  int n_buckets = 20;
  std::vector<int> sizes = {250, 500, 1000, 2000, 4000};
  std::vector<int> labeled_sizes = {250, 500, 1000};
  int pakd_labeled = 250;
  int epochs = 20;
};

// Fully determines every output; serialized into each output's header.
struct RunConfig {
  GrammarConfig grammar;
  CorpusConfig corpus;
  NoiseConfig noise;
  PipelineConfig pipeline;
  AnnotateConfig annotate;
  AnalysisConfig analysis;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};  // bench fan-out
  std::uint64_t seed = 1;
  std::string out = "out";
};

// The corpus preset every directional acceptance run uses: two-tier rotation
// noise (half clean, half eta = 0.6) over a 5000-sentence pool.
RunConfig standard_benchmark_config();

// Overrides the standard preset field by field; unknown keys anywhere in the
// document are rejected with ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

nlohmann::json run_config_json(const RunConfig& config);

// FNV-1a 64-bit over the canonical JSON serialization, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Hash over only the corpus-determining sections (grammar, corpus, noise,
// annotate), so training-side overrides don't invalidate generated data.
std::string data_config_hash(const RunConfig& config);

// Temp-file-plus-rename write in the target's directory.
void write_text_atomic(const std::string& path, const std::string& content);

// config_hash recorded in a JSONL file's header line, if any.
std::optional<std::string> jsonl_header_hash(const std::string& path);

}  // namespace pakd

#endif
