#include "pakd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pakd {

using nlohmann::json;

namespace {

// Stage seeds are derived so that degenerate reductions line up exactly:
// the final student always trains with config.seed, which makes
// selective(r=100) coincide with slkd and pa-kd's empty-low fallback
// coincide with selective.
constexpr std::uint64_t kS0SeedSalt = 0x53304b44u;    // initial student S0
constexpr std::uint64_t kPeerSeedSalt = 0x50454552u;  // peer student S1

TrainConfig base_train_config(const PipelineConfig& config, int epochs, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = seed;
  tc.beta = config.beta;
  tc.labeled_examples = config.labeled_examples;
  return tc;
}

double teacher_gold_f1(const Corpus& corpus) {
  std::vector<ConstituencyTree> t, g;
  for (const auto& ex : corpus) {
    if (!ex.gold || !ex.teacher) return std::numeric_limits<double>::quiet_NaN();
    t.push_back(*ex.teacher);
    g.push_back(*ex.gold);
  }
  return corpus_f1(t, g);
}

json config_json(const PipelineConfig& config) {
  return json{{"pipeline", pipeline_name(config.kind)},
              {"s0_epochs", config.s0_epochs},
              {"peer_epochs", config.peer_epochs},
              {"final_epochs", config.final_epochs},
              {"sd_gen_epochs", config.sd_gen_epochs},
              {"r_percent", config.r_percent},
              {"seed", config.seed},
              {"beta", config.beta}};
}

json start_report(const PipelineConfig& config, const Corpus& corpus) {
  json report;
  report["pipeline"] = pipeline_name(config.kind);
  report["config"] = config_json(config);
  report["train_size"] = corpus.size();
  double tg = teacher_gold_f1(corpus);
  if (!std::isnan(tg)) report["teacher_gold_f1"] = tg;
  report["stages"] = json::array();
  return report;
}

void finish_report(json& report, const StudentModel& model, const Corpus* test) {
  report["updates_seen"] = model.updates_seen;
  if (test) report["test_f1"] = test_f1(model, *test);
}

Corpus subset_by_ids(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  Corpus out;
  for (const auto& ex : corpus)
    if (wanted.count(ex.id)) out.push_back(ex);
  return out;
}

json partition_stats(const PartitionResult& part, const Corpus& corpus) {
  json stats;
  stats["threshold"] = part.threshold;
  stats["high_count"] = part.high.size();
  stats["low_count"] = part.low.size();
  stats["r_percent"] = part.r_percent;
  // mean gold F1 of teacher labels per side, when gold is available
  auto side_gold_f1 = [&](const std::vector<std::string>& ids) -> json {
    Corpus side = subset_by_ids(corpus, ids);
    if (side.empty()) return nullptr;
    double f1 = teacher_gold_f1(side);
    if (std::isnan(f1)) return nullptr;
    return f1;
  };
  stats["high_teacher_gold_f1"] = side_gold_f1(part.high);
  stats["low_teacher_gold_f1"] = side_gold_f1(part.low);
  return stats;
}

}  // namespace

const char* pipeline_name(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::Slkd: return "slkd";
    case PipelineKind::SelectiveKd: return "selective";
    case PipelineKind::PaKd: return "pa-kd";
    case PipelineKind::Sd: return "sd";
    case PipelineKind::SdHc: return "sd-hc";
    case PipelineKind::Supervised: return "supervised";
  }
  return "?";
}

PipelineKind pipeline_from_name(const std::string& name) {
  if (name == "slkd") return PipelineKind::Slkd;
  if (name == "selective") return PipelineKind::SelectiveKd;
  if (name == "pa-kd") return PipelineKind::PaKd;
  if (name == "sd") return PipelineKind::Sd;
  if (name == "sd-hc") return PipelineKind::SdHc;
  if (name == "supervised") return PipelineKind::Supervised;
  throw Error("ConfigError", "unknown pipeline '" + name + "'");
}

std::vector<TrainExample> to_train_examples(const Corpus& corpus, bool use_teacher) {
  std::vector<TrainExample> out;
  for (const auto& ex : corpus) {
    const auto& target = use_teacher ? ex.teacher : ex.gold;
    if (!target)
      throw Error(use_teacher ? "MissingTeacher" : "MissingGold",
                  "example " + ex.id + " lacks the training label");
    out.push_back({ex.id, ex.tokens, *target});
  }
  return out;
}

std::vector<ConstituencyTree> decode_corpus(const StudentModel& model, const Corpus& corpus) {
  std::vector<ConstituencyTree> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back(decode(model, ex.tokens));
  return out;
}

double test_f1(const StudentModel& model, const Corpus& test) {
  std::vector<ConstituencyTree> preds, refs;
  for (const auto& ex : test) {
    if (!ex.gold) throw Error("MissingGold", "test example " + ex.id + " has no gold tree");
    preds.push_back(decode(model, ex.tokens));
    refs.push_back(*ex.gold);
  }
  return corpus_f1(preds, refs);
}

PartitionResult partition_scores(const std::vector<std::pair<std::string, double>>& scores,
                                 double r_percent) {
  if (scores.empty()) throw Error("EmptyCorpus", "cannot partition an empty corpus");
  if (r_percent <= 0.0 || r_percent > 100.0)
    throw Error("ConfigError", "r_percent must be in (0, 100]");

  PartitionResult part;
  part.r_percent = r_percent;
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [id, s] : scores) {
    part.scores[id] = s;
    ranked.push_back({s, id});
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const size_t n = ranked.size();
  size_t rank = static_cast<size_t>(std::ceil(r_percent / 100.0 * static_cast<double>(n)));
  rank = std::min(std::max<size_t>(rank, 1), n);
  part.threshold = ranked[rank - 1].first;
  for (const auto& [id, s] : scores) {
    if (s >= part.threshold)
      part.high.push_back(id);
    else
      part.low.push_back(id);
  }
  return part;
}

PartitionResult partition_by_convergence(const Corpus& corpus,
                                         const std::vector<ConstituencyTree>& student_preds,
                                         double r_percent) {
  if (corpus.empty()) throw Error("EmptyCorpus", "cannot partition an empty corpus");
  if (student_preds.size() != corpus.size())
    throw Error("MissingPrediction", "student predictions not aligned with corpus");
  std::vector<std::pair<std::string, double>> scores;
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].teacher)
      throw Error("MissingTeacher", "example " + corpus[i].id + " has no teacher label");
    scores.push_back({corpus[i].id, unlabeled_f1(*corpus[i].teacher, student_preds[i])});
  }
  return partition_scores(scores, r_percent);
}

PipelineResult run_slkd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config) {
  json report = start_report(config, corpus);
  TrainResult res =
      train(to_train_examples(corpus, true), base_train_config(config, config.final_epochs, config.seed));
  report["stages"].push_back({{"name", "final"}, {"epochs", config.final_epochs}});
  PipelineResult out{std::move(res.model), std::move(report)};
  finish_report(out.report, out.model, test);
  return out;
}

PipelineResult run_selective_kd(const Corpus& corpus, const Corpus* test,
                                const PipelineConfig& config) {
  json report = start_report(config, corpus);
  TrainResult s0 = train(to_train_examples(corpus, true),
                         base_train_config(config, config.s0_epochs, config.seed ^ kS0SeedSalt));
  PartitionResult part =
      partition_by_convergence(corpus, decode_corpus(s0.model, corpus), config.r_percent);
  report["partition"] = partition_stats(part, corpus);
  report["stages"].push_back({{"name", "s0"}, {"epochs", config.s0_epochs}});

  Corpus high = subset_by_ids(corpus, part.high);
  TrainResult fin = train(to_train_examples(high, true),
                          base_train_config(config, config.final_epochs, config.seed));
  report["stages"].push_back(
      {{"name", "final"}, {"epochs", config.final_epochs}, {"train_size", high.size()}});
  PipelineResult out{std::move(fin.model), std::move(report)};
  finish_report(out.report, out.model, test);
  return out;
}

PipelineResult run_pa_kd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config) {
  json report = start_report(config, corpus);
  TrainResult s0 = train(to_train_examples(corpus, true),
                         base_train_config(config, config.s0_epochs, config.seed ^ kS0SeedSalt));
  PartitionResult part =
      partition_by_convergence(corpus, decode_corpus(s0.model, corpus), config.r_percent);
  report["partition"] = partition_stats(part, corpus);
  report["stages"].push_back({{"name", "s0"}, {"epochs", config.s0_epochs}});

  Corpus high = subset_by_ids(corpus, part.high);
  if (part.low.empty()) {
    // nothing left to re-annotate: fall back to selective KD on T_high
    report["warning"] = "PartitionEmptyLow: r leaves nothing to re-annotate; "
                        "degenerating to selective KD";
    TrainResult fin = train(to_train_examples(high, true),
                            base_train_config(config, config.final_epochs, config.seed));
    report["stages"].push_back(
        {{"name", "final"}, {"epochs", config.final_epochs}, {"train_size", high.size()}});
    PipelineResult out{std::move(fin.model), std::move(report)};
    finish_report(out.report, out.model, test);
    return out;
  }

  TrainResult s1 = train(to_train_examples(high, true),
                         base_train_config(config, config.peer_epochs, config.seed ^ kPeerSeedSalt));
  report["stages"].push_back(
      {{"name", "peer"}, {"epochs", config.peer_epochs}, {"train_size", high.size()}});

  // peer re-annotation of the low side; T_high passes through untouched
  Corpus low = subset_by_ids(corpus, part.low);
  std::vector<TrainExample> final_examples = to_train_examples(high, true);
  std::vector<ConstituencyTree> peer_trees, replaced_teacher, low_gold;
  for (const auto& ex : low) {
    ConstituencyTree peer = decode(s1.model, ex.tokens);
    final_examples.push_back({ex.id, ex.tokens, peer});
    peer_trees.push_back(std::move(peer));
    replaced_teacher.push_back(*ex.teacher);
    if (ex.gold) low_gold.push_back(*ex.gold);
  }
  if (low_gold.size() == low.size()) {
    report["peer_gold_f1"] = corpus_f1(peer_trees, low_gold);
    report["replaced_teacher_gold_f1"] = corpus_f1(replaced_teacher, low_gold);
  }

  TrainResult fin =
      train(final_examples, base_train_config(config, config.final_epochs, config.seed));
  report["stages"].push_back({{"name", "final"},
                              {"epochs", config.final_epochs},
                              {"train_size", final_examples.size()}});
  PipelineResult out{std::move(fin.model), std::move(report)};
  finish_report(out.report, out.model, test);
  return out;
}

namespace {

PipelineResult run_sd_impl(const Corpus& corpus, const Corpus* test, const PipelineConfig& config,
                           bool high_confidence_only) {
  json report = start_report(config, corpus);
  // short-budget base student generates the self-labels
  TrainResult base = train(to_train_examples(corpus, true),
                           base_train_config(config, config.sd_gen_epochs, config.seed ^ kS0SeedSalt));
  report["stages"].push_back({{"name", "base"}, {"epochs", config.sd_gen_epochs}});

  std::vector<TrainExample> self_labeled;
  if (high_confidence_only) {
    std::vector<double> confidences;
    double finite_sum = 0.0;
    size_t finite_count = 0;
    for (const auto& ex : corpus) {
      double c = confidence(base.model, ex.tokens);
      confidences.push_back(c);
      if (std::isfinite(c)) {
        finite_sum += c;
        ++finite_count;
      }
    }
    double mean = finite_count > 0 ? finite_sum / static_cast<double>(finite_count) : 0.0;
    for (size_t i = 0; i < corpus.size(); ++i) {
      // forced trees carry the +inf sentinel and always count as confident
      if (confidences[i] > mean)
        self_labeled.push_back(
            {corpus[i].id, corpus[i].tokens, decode(base.model, corpus[i].tokens)});
    }
    if (self_labeled.empty())
      throw Error("AllFiltered", "no self-labels above mean confidence");
    report["kept_self_labels"] = self_labeled.size();
    report["mean_confidence"] = mean;
  } else {
    for (const auto& ex : corpus)
      self_labeled.push_back({ex.id, ex.tokens, decode(base.model, ex.tokens)});
  }

  TrainResult fin =
      train(self_labeled, base_train_config(config, config.final_epochs, config.seed));
  report["stages"].push_back({{"name", "final"},
                              {"epochs", config.final_epochs},
                              {"train_size", self_labeled.size()}});
  PipelineResult out{std::move(fin.model), std::move(report)};
  finish_report(out.report, out.model, test);
  return out;
}

}  // namespace

PipelineResult run_sd(const Corpus& corpus, const Corpus* test, const PipelineConfig& config) {
  return run_sd_impl(corpus, test, config, false);
}

PipelineResult run_sd_hc(const Corpus& corpus, const Corpus* test, const PipelineConfig& config) {
  return run_sd_impl(corpus, test, config, true);
}

PipelineResult run_supervised(const Corpus& labeled, const Corpus* test,
                              const PipelineConfig& config) {
  json report = start_report(config, labeled);
  TrainResult res = train(to_train_examples(labeled, false),
                          base_train_config(config, config.final_epochs, config.seed));
  report["stages"].push_back({{"name", "final"}, {"epochs", config.final_epochs}});
  PipelineResult out{std::move(res.model), std::move(report)};
  finish_report(out.report, out.model, test);
  return out;
}

PipelineResult run_pipeline(const Corpus& corpus, const Corpus* test,
                            const PipelineConfig& config) {
  switch (config.kind) {
    case PipelineKind::Slkd: return run_slkd(corpus, test, config);
    case PipelineKind::SelectiveKd: return run_selective_kd(corpus, test, config);
    case PipelineKind::PaKd: return run_pa_kd(corpus, test, config);
    case PipelineKind::Sd: return run_sd(corpus, test, config);
    case PipelineKind::SdHc: return run_sd_hc(corpus, test, config);
    case PipelineKind::Supervised: return run_supervised(corpus, test, config);
  }
  throw Error("ConfigError", "unknown pipeline kind");
}

}  // namespace pakd
