// Command-line front end: corpus generation, teacher annotation, the
// distillation pipelines, the analysis suite, and the multi-seed benchmark.
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pakd/analysis.hpp"
#include "pakd/config.hpp"
#include "pakd/distill.hpp"
#include "pakd/error.hpp"
#include "pakd/student.hpp"
#include "pakd/teachersim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pakd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CliOptions {
  std::string config_path;
  std::string out;
  std::string pipeline;
  std::string format = "csv";
  std::string selection;  // analyze dispatch
  std::optional<std::uint64_t> seed;
  std::optional<double> r_percent;
  std::optional<int> epochs;
};

RunConfig effective_config(const CliOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? standard_benchmark_config()
                                           : load_run_config(opts.config_path);
  if (!opts.out.empty()) cfg.out = opts.out;
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.pipeline.seed = *opts.seed;
  }
  if (!opts.pipeline.empty()) cfg.pipeline.kind = pipeline_from_name(opts.pipeline);
  if (opts.r_percent) {
    if (*opts.r_percent <= 0.0 || *opts.r_percent > 100.0)
      throw Error("ConfigError", "--r-percent must be in (0, 100]");
    cfg.pipeline.r_percent = *opts.r_percent;
  }
  if (opts.epochs) {
    if (*opts.epochs < 1) throw Error("ConfigError", "--epochs must be positive");
    cfg.pipeline.final_epochs = *opts.epochs;
    cfg.analysis.epochs = *opts.epochs;
  }
  if (opts.format != "csv" && opts.format != "json" && opts.format != "svg")
    throw Error("ConfigError", "--format must be csv, json, or svg");
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

// Shortest round-trip decimal form, so report bodies are byte-stable.
std::string fmt(double v) { return json(v).dump(); }

void check_data_hash(const RunConfig& cfg, const std::string& path) {
  std::optional<std::string> found = jsonl_header_hash(path);
  if (found && *found != data_config_hash(cfg))
    throw Error("ConfigHashMismatch", "'" + path + "' was generated under hash " + *found +
                                          " but the active config hashes to " +
                                          data_config_hash(cfg));
}

void write_jsonl_atomic(const Corpus& corpus, const std::string& path,
                        const std::string& header_json) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::string tmp = path + ".tmp";
  write_jsonl(corpus, tmp, header_json);
  fs::rename(tmp, target);
}

std::string jsonl_header(const RunConfig& cfg) {
  return json{{"config_hash", data_config_hash(cfg)}}.dump();
}

struct Corpora {
  SyntheticGrammar grammar;
  Corpus pool;
  Corpus labeled;
  Corpus test;
};

Corpora build_corpora(const RunConfig& cfg) {
  Corpora c;
  c.grammar = sample_grammar(cfg.grammar);
  c.pool = sample_corpus(c.grammar, cfg.corpus.unlabeled, cfg.corpus.min_len, cfg.corpus.max_len,
                         cfg.corpus.pool_seed, "u");
  c.labeled = sample_corpus(c.grammar, cfg.corpus.labeled, cfg.corpus.min_len,
                            cfg.corpus.max_len, cfg.corpus.labeled_seed, "l");
  c.test = sample_corpus(c.grammar, cfg.corpus.test, cfg.corpus.min_len, cfg.corpus.max_len,
                         cfg.corpus.test_seed, "t");
  return c;
}

void annotate_pool(const RunConfig& cfg, Corpus& pool, const Corpus& labeled) {
  if (cfg.annotate.source == "noise") {
    make_teacher_labels(pool, cfg.noise);
    return;
  }
  int k = std::min<int>(cfg.annotate.labeled_k, static_cast<int>(labeled.size()));
  if (k < 1) throw Error("ConfigError", "annotate.labeled_k leaves no training data");
  Corpus subset(labeled.begin(), labeled.begin() + k);
  PipelineConfig pc = cfg.pipeline;
  pc.kind = PipelineKind::Supervised;
  PipelineResult teacher = run_supervised(subset, nullptr, pc);
  std::vector<ConstituencyTree> labels = decode_corpus(teacher.model, pool);
  for (size_t i = 0; i < pool.size(); ++i) pool[i].teacher = labels[i];
}

int cmd_gen(const CliOptions& opts) {
  RunConfig cfg = effective_config(opts);
  Corpora c = build_corpora(cfg);
  std::string header = jsonl_header(cfg);
  write_jsonl_atomic(c.pool, out_path(cfg, "corpus.jsonl"), header);
  write_jsonl_atomic(c.labeled, out_path(cfg, "labeled.jsonl"), header);
  write_jsonl_atomic(c.test, out_path(cfg, "test.jsonl"), header);
  std::cout << "wrote " << c.pool.size() << " pool, " << c.labeled.size() << " labeled, "
            << c.test.size() << " test sentences under " << cfg.out << "\n";
  return 0;
}

int cmd_annotate(const CliOptions& opts) {
  RunConfig cfg = effective_config(opts);
  std::string pool_path = out_path(cfg, "corpus.jsonl");
  check_data_hash(cfg, pool_path);
  Corpus pool = ingest_jsonl(pool_path);
  Corpus labeled;
  if (cfg.annotate.source == "supervised") {
    std::string labeled_path = out_path(cfg, "labeled.jsonl");
    check_data_hash(cfg, labeled_path);
    labeled = ingest_jsonl(labeled_path);
  }
  annotate_pool(cfg, pool, labeled);
  write_jsonl_atomic(pool, out_path(cfg, "annotated.jsonl"), jsonl_header(cfg));
  std::cout << "annotated " << pool.size() << " sentences (" << cfg.annotate.source << ")\n";
  return 0;
}

int cmd_distill(const CliOptions& opts) {
  RunConfig cfg = effective_config(opts);
  std::string annotated_path = out_path(cfg, "annotated.jsonl");
  check_data_hash(cfg, annotated_path);
  Corpus corpus = ingest_jsonl(annotated_path);
  std::string test_path = out_path(cfg, "test.jsonl");
  Corpus test;
  bool have_test = fs::exists(test_path);
  if (have_test) {
    check_data_hash(cfg, test_path);
    test = ingest_jsonl(test_path);
  }

  PipelineConfig pc = cfg.pipeline;
  if (pc.beta > 0) {
    std::string labeled_path = out_path(cfg, "labeled.jsonl");
    check_data_hash(cfg, labeled_path);
    pc.labeled_examples = to_train_examples(ingest_jsonl(labeled_path), false);
  }
  PipelineResult res = run_pipeline(corpus, have_test ? &test : nullptr, pc);

  std::string model_path = out_path(cfg, "model.txt");
  save_model(res.model, model_path + ".tmp");
  fs::rename(model_path + ".tmp", model_path);
  write_text_atomic(out_path(cfg, "model.json"),
                    json{{"config_hash", config_hash(cfg)},
                         {"data_hash", data_config_hash(cfg)},
                         {"model", "model.txt"}}
                            .dump(2) +
                        "\n");
  json report = res.report;
  report["config_hash"] = config_hash(cfg);
  report["run_config"] = run_config_json(cfg);
  write_text_atomic(out_path(cfg, "report.json"), report.dump(2) + "\n");
  std::cout << "pipeline " << pipeline_name(pc.kind);
  if (res.report.contains("test_f1")) std::cout << " test_f1 " << fmt(res.report["test_f1"]);
  std::cout << "\n";
  return 0;
}

// --- analyze output writers ---------------------------------------------

std::string csv_escape(const std::string& cell) { return cell; }

std::string table_csv(const RunConfig& cfg, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows,
                      const std::vector<std::string>& extra_comments = {}) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash(cfg) << "\n";
  for (const auto& c : extra_comments) out << "# " << c << "\n";
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(row[i]);
    out << "\n";
  }
  return out.str();
}

std::string table_json(const RunConfig& cfg, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows, json extra = json::object()) {
  json doc;
  doc["config_hash"] = config_hash(cfg);
  doc["columns"] = header;
  doc["rows"] = json::array();
  for (const auto& row : rows) doc["rows"].push_back(row);
  for (auto& [k, v] : extra.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

// Minimal static line chart: one polyline per numeric column after the first.
std::string table_svg(const RunConfig& cfg, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  const int width = 640, height = 400, margin = 40;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<!-- config_hash=" << config_hash(cfg) << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!rows.empty() && header.size() >= 2) {
    double lo = 1e300, hi = -1e300;
    std::vector<std::vector<double>> series(header.size() - 1);
    for (const auto& row : rows)
      for (size_t c = 1; c < row.size(); ++c) {
        double v = row[c].empty() ? 0.0 : std::strtod(row[c].c_str(), nullptr);
        series[c - 1].push_back(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (hi <= lo) hi = lo + 1.0;
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    for (size_t s = 0; s < series.size(); ++s) {
      out << "<polyline fill=\"none\" stroke=\"" << colors[s % 6] << "\" points=\"";
      for (size_t i = 0; i < series[s].size(); ++i) {
        double x = margin + (width - 2.0 * margin) * (series[s].size() < 2
                                                          ? 0.5
                                                          : static_cast<double>(i) /
                                                                (series[s].size() - 1));
        double y = height - margin - (height - 2.0 * margin) * (series[s][i] - lo) / (hi - lo);
        out << fmt(x) << "," << fmt(y) << " ";
      }
      out << "\"/>\n";
      out << "<text x=\"" << margin << "\" y=\"" << margin + 16 * s << "\" fill=\""
          << colors[s % 6] << "\" font-size=\"12\">" << header[s + 1] << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

void emit_table(const RunConfig& cfg, const std::string& format, const std::string& stem,
                const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows,
                const std::vector<std::string>& comments = {}, json extra = json::object()) {
  std::string path = out_path(cfg, stem + "." + format);
  if (format == "csv")
    write_text_atomic(path, table_csv(cfg, header, rows, comments));
  else if (format == "json")
    write_text_atomic(path, table_json(cfg, header, rows, extra));
  else
    write_text_atomic(path, table_svg(cfg, header, rows));
  std::cout << "wrote " << path << "\n";
}

Corpus annotated_with_predictions(const RunConfig& cfg) {
  std::string annotated_path = out_path(cfg, "annotated.jsonl");
  check_data_hash(cfg, annotated_path);
  Corpus corpus = ingest_jsonl(annotated_path);
  StudentModel model = load_model(out_path(cfg, "model.txt"));
  for (auto& ex : corpus) ex.student = decode(model, ex.tokens);
  return corpus;
}

int run_analysis(const RunConfig& cfg, const std::string& selection, const std::string& format) {
  if (selection == "buckets") {
    Corpus corpus = annotated_with_predictions(cfg);
    std::vector<std::vector<std::string>> rows;
    for (const BucketRow& row : bucket_analysis(corpus, cfg.analysis.n_buckets)) {
      auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
      rows.push_back({std::to_string(row.bucket), std::to_string(row.count),
                      fmt(row.convergence_min), fmt(row.convergence_max),
                      fmt(row.mean_convergence), opt(row.teacher_gold_f1),
                      opt(row.student_gold_f1), opt(row.pct_student_better)});
    }
    emit_table(cfg, format, "buckets",
               {"bucket", "count", "convergence_min", "convergence_max", "mean_convergence",
                "teacher_gold_f1", "student_gold_f1", "pct_student_better"},
               rows);
  } else if (selection == "delta") {
    Corpus corpus = annotated_with_predictions(cfg);
    std::vector<std::vector<std::string>> rows;
    for (const auto& ex : corpus) rows.push_back({ex.id, fmt(delta(ex))});
    emit_table(cfg, format, "delta", {"id", "delta"}, rows);
  } else if (selection == "disparity") {
    std::string annotated_path = out_path(cfg, "annotated.jsonl");
    check_data_hash(cfg, annotated_path);
    Corpus corpus = ingest_jsonl(annotated_path);
    DisparityCurve curve = disparity_experiment(corpus, cfg.analysis.epochs, cfg.seed);
    std::vector<std::vector<std::string>> rows;
    for (size_t e = 0; e < curve.high.size(); ++e)
      rows.push_back({std::to_string(e + 1), fmt(curve.high[e]), fmt(curve.low[e])});
    emit_table(cfg, format, "disparity", {"epoch", "high", "low"}, rows);
  } else if (selection == "size-sweep") {
    SyntheticGrammar grammar = sample_grammar(cfg.grammar);
    SweepConfig sc{cfg.analysis.epochs, cfg.seed, cfg.corpus.min_len, cfg.corpus.max_len};
    std::vector<std::vector<std::string>> rows;
    for (const SizeSweepRow& row : size_sweep(grammar, cfg.analysis.sizes, cfg.noise, sc))
      rows.push_back({std::to_string(row.size), fmt(row.mean_pct_student_better)});
    emit_table(cfg, format, "size_sweep", {"size", "mean_pct_student_better"}, rows);
  } else if (selection == "sft-sweep") {
    SyntheticGrammar grammar = sample_grammar(cfg.grammar);
    SweepConfig sc{cfg.analysis.epochs, cfg.seed, cfg.corpus.min_len, cfg.corpus.max_len};
    SftComparison cmp = sft_comparison(grammar, cfg.analysis.labeled_sizes,
                                       cfg.analysis.pakd_labeled, cfg.corpus.unlabeled,
                                       cfg.corpus.test, sc);
    std::vector<std::vector<std::string>> rows;
    for (const SftRow& row : cmp.rows)
      rows.push_back({std::to_string(row.labeled_size), fmt(row.sft_f1), fmt(row.pakd_f1)});
    emit_table(cfg, format, "sft_sweep", {"labeled_size", "sft_f1", "pakd_f1"}, rows,
               {"pakd_labeled=" + std::to_string(cmp.pakd_labeled),
                "crossover=" + std::to_string(cmp.crossover)},
               json{{"pakd_labeled", cmp.pakd_labeled}, {"crossover", cmp.crossover}});
  } else {
    throw Error("ConfigError", "unknown analysis '" + selection +
                                   "' (expected buckets|delta|disparity|size-sweep|sft-sweep)");
  }
  return 0;
}

int cmd_analyze(const CliOptions& opts) {
  RunConfig cfg = effective_config(opts);
  std::vector<std::string> selections;
  if (!opts.selection.empty())
    selections.push_back(opts.selection);
  else
    selections = cfg.analysis.selections;
  if (selections.empty())
    throw Error("ConfigError", "no analysis selected: pass a selection argument or set "
                               "analysis.selections in the config");
  for (const std::string& sel : selections) run_analysis(cfg, sel, opts.format);
  return 0;
}

// --- bench ---------------------------------------------------------------

std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("PAKD_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

int cmd_bench(const CliOptions& opts) {
  RunConfig cfg = effective_config(opts);
  Corpora c = build_corpora(cfg);
  annotate_pool(cfg, c.pool, c.labeled);

  const std::vector<PipelineKind> kinds = {PipelineKind::PaKd, PipelineKind::SelectiveKd,
                                           PipelineKind::Slkd, PipelineKind::SdHc,
                                           PipelineKind::Sd, PipelineKind::Supervised};
  std::vector<std::vector<double>> scores(kinds.size(),
                                          std::vector<double>(cfg.seeds.size(), 0.0));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      try {
        for (size_t k = 0; k < kinds.size(); ++k) {
          PipelineConfig pc = cfg.pipeline;
          pc.kind = kinds[k];
          pc.seed = cfg.seeds[i];
          const Corpus& train_set = kinds[k] == PipelineKind::Supervised ? c.labeled : c.pool;
          PipelineResult res = run_pipeline(train_set, &c.test, pc);
          scores[k][i] = res.report["test_f1"];
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < worker_count(cfg.seeds.size()); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  json doc;
  doc["config_hash"] = config_hash(cfg);
  doc["run_config"] = run_config_json(cfg);
  doc["seeds"] = cfg.seeds;
  doc["rows"] = json::array();
  std::vector<std::vector<std::string>> csv_rows;
  for (size_t k = 0; k < kinds.size(); ++k) {
    std::vector<double> v = scores[k];
    double med = median(v);
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    doc["rows"].push_back({{"pipeline", pipeline_name(kinds[k])},
                           {"median", med},
                           {"min", lo},
                           {"max", hi},
                           {"scores", v}});
    std::string scores_cell;
    for (size_t i = 0; i < v.size(); ++i) scores_cell += (i ? ";" : "") + fmt(v[i]);
    csv_rows.push_back({pipeline_name(kinds[k]), fmt(med), fmt(lo), fmt(hi), scores_cell});
  }
  write_text_atomic(out_path(cfg, "bench.json"), doc.dump(2) + "\n");
  write_text_atomic(out_path(cfg, "bench.csv"),
                    table_csv(cfg, {"pipeline", "median", "min", "max", "scores"}, csv_rows));
  for (const auto& row : csv_rows)
    std::cout << row[0] << " median " << row[1] << " [" << row[2] << ", " << row[3] << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale lab for knowledge distillation from noisy teachers in "
               "constituency parsing"};
  app.require_subcommand(1);
  CliOptions opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON run config (overrides the preset)");
    sub->add_option("--seed", opts.seed, "seed override for config.seed and pipeline.seed");
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--pipeline", opts.pipeline,
                    "pipeline: slkd|selective|pa-kd|sd|sd-hc|supervised");
    sub->add_option("--r-percent", opts.r_percent, "convergence partition percentage (0, 100]");
    sub->add_option("--epochs", opts.epochs, "final-stage / analysis epochs override");
    sub->add_option("--format", opts.format, "output format: csv|json|svg");
    return sub;
  };

  CLI::App* gen = add_common(app.add_subcommand("gen", "generate corpora"));
  CLI::App* annotate =
      add_common(app.add_subcommand("annotate", "attach teacher labels to the pool"));
  CLI::App* distill = add_common(app.add_subcommand("distill", "run one pipeline"));
  CLI::App* analyze = add_common(app.add_subcommand("analyze", "run analyses"));
  analyze->add_option("selection", opts.selection,
                      "buckets|delta|disparity|size-sweep|sft-sweep");
  CLI::App* bench =
      add_common(app.add_subcommand("bench", "run all pipelines across the configured seeds"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(opts);
    if (annotate->parsed()) return cmd_annotate(opts);
    if (distill->parsed()) return cmd_distill(opts);
    if (analyze->parsed()) return cmd_analyze(opts);
    if (bench->parsed()) return cmd_bench(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == "ConfigError" ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
