#include "pakd/student.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>

namespace pakd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string length_bucket(int width) {
  if (width <= 5) return std::to_string(width);
  if (width <= 10) return "6-10";
  return "11+";
}

void append_features(const std::vector<Token>& tokens, Span span,
                     const std::function<void(std::string)>& emit) {
  const int n = static_cast<int>(tokens.size());
  const int i = span.first;
  const int j = span.second;
  const std::string& first = tokens[i].surface;
  const std::string& last = tokens[j - 1].surface;
  const std::string left = i > 0 ? tokens[i - 1].surface : "<s>";
  const std::string right = j < n ? tokens[j].surface : "</s>";
  emit("v1:fi=" + first);
  emit("v1:li=" + last);
  emit("v1:ol=" + left);
  emit("v1:or=" + right);
  emit("v1:len=" + length_bucket(j - i));
  emit("v1:fi_li=" + first + "|" + last);
  emit("v1:ol_or=" + left + "|" + right);
}

// Exact CKY over precomputed span scores; ties prefer the smaller split.
struct Chart {
  int n = 0;
  std::vector<std::vector<double>> best;
  std::vector<std::vector<int>> split;

  Chart(int n_, const std::function<double(int, int)>& span_score) : n(n_) {
    best.assign(n + 1, std::vector<double>(n + 1, 0.0));
    split.assign(n + 1, std::vector<int>(n + 1, -1));
    for (int width = 2; width <= n; ++width) {
      for (int i = 0; i + width <= n; ++i) {
        int j = i + width;
        double bestv = -kInf;
        int bestk = -1;
        for (int k = i + 1; k < j; ++k) {
          double v = best[i][k] + best[k][j];
          if (v > bestv) {
            bestv = v;
            bestk = k;
          }
        }
        best[i][j] = bestv + span_score(i, j);
        split[i][j] = bestk;
      }
    }
  }

  void chosen_spans(int i, int j, std::vector<Span>& out) const {
    if (j - i < 2) return;
    out.push_back({i, j});
    int k = split[i][j];
    chosen_spans(i, k, out);
    chosen_spans(k, j, out);
  }
};

int build_tree_node(const Chart& chart, const std::vector<Token>& tokens, int i, int j,
                    ConstituencyTree& out) {
  if (j - i == 1) {
    out.nodes.push_back({i, j, tokens[i].tag, {}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  int k = chart.split[i][j];
  int left = build_tree_node(chart, tokens, i, k, out);
  int right = build_tree_node(chart, tokens, k, j, out);
  out.nodes.push_back({i, j, "X", {left, right}});
  return static_cast<int>(out.nodes.size()) - 1;
}

ConstituencyTree tree_from_chart(const Chart& chart, const std::vector<Token>& tokens) {
  ConstituencyTree out;
  out.tokens = tokens;
  out.root = build_tree_node(chart, tokens, 0, chart.n, out);
  return out;
}

double weight_of(const std::map<std::string, double>& weights, const std::string& key) {
  auto it = weights.find(key);
  return it == weights.end() ? 0.0 : it->second;
}

std::function<double(int, int)> scorer_for(const StudentModel& model,
                                           const std::vector<Token>& tokens) {
  const auto* weights = &model.averaged_weights;
  return [weights, &tokens](int i, int j) {
    double total = 0.0;
    append_features(tokens, {i, j}, [&](std::string key) { total += weight_of(*weights, key); });
    return total;
  };
}

// ---- 2-best chart -------------------------------------------------------

struct KBestEntry {
  double score = 0.0;
  int k = -1;   // split point; -1 for leaves
  int li = 0;   // index into left child cell's entry list
  int ri = 0;
};

struct KBestChart {
  int n = 0;
  std::vector<std::vector<std::vector<KBestEntry>>> cells;

  KBestChart(int n_, const std::function<double(int, int)>& span_score) : n(n_) {
    cells.assign(n + 1, std::vector<std::vector<KBestEntry>>(n + 1));
    for (int i = 0; i < n; ++i) cells[i][i + 1] = {KBestEntry{}};
    for (int width = 2; width <= n; ++width) {
      for (int i = 0; i + width <= n; ++i) {
        int j = i + width;
        std::vector<KBestEntry> cands;
        for (int k = i + 1; k < j; ++k)
          for (int li = 0; li < static_cast<int>(cells[i][k].size()); ++li)
            for (int ri = 0; ri < static_cast<int>(cells[k][j].size()); ++ri)
              cands.push_back({cells[i][k][li].score + cells[k][j][ri].score, k, li, ri});
        std::stable_sort(cands.begin(), cands.end(),
                         [](const KBestEntry& a, const KBestEntry& b) { return a.score > b.score; });
        if (cands.size() > 2) cands.resize(2);
        double s = span_score(i, j);
        for (KBestEntry& e : cands) e.score += s;
        cells[i][j] = std::move(cands);
      }
    }
  }

  int build(const std::vector<Token>& tokens, int i, int j, int which,
            ConstituencyTree& out) const {
    if (j - i == 1) {
      out.nodes.push_back({i, j, tokens[i].tag, {}});
      return static_cast<int>(out.nodes.size()) - 1;
    }
    const KBestEntry& e = cells[i][j][which];
    int left = build(tokens, i, e.k, e.li, out);
    int right = build(tokens, e.k, j, e.ri, out);
    out.nodes.push_back({i, j, "X", {left, right}});
    return static_cast<int>(out.nodes.size()) - 1;
  }

  ConstituencyTree tree(const std::vector<Token>& tokens, int which) const {
    ConstituencyTree out;
    out.tokens = tokens;
    out.root = build(tokens, 0, n, which, out);
    return out;
  }
};

// ---- interned training --------------------------------------------------

struct Interner {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> names;

  int intern(const std::string& key) {
    auto [it, inserted] = ids.try_emplace(key, static_cast<int>(names.size()));
    if (inserted) names.push_back(key);
    return it->second;
  }
};

using SparseFeats = std::vector<std::pair<int, int>>;  // (feature id, count)

struct CompiledExample {
  const TrainExample* src = nullptr;
  int n = 0;
  std::vector<std::vector<SparseFeats>> span_feats;  // [i][j] for j-i >= 2
  std::set<Span> target_scored;                      // width >= 2 spans incl. root
  std::set<Span> target_eval;                        // width >= 2 spans excl. root
};

SparseFeats compile_span(Interner& interner, const std::vector<Token>& tokens, Span span) {
  std::unordered_map<int, int> counts;
  append_features(tokens, span, [&](std::string key) { counts[interner.intern(key)] += 1; });
  SparseFeats out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

CompiledExample compile_example(Interner& interner, const TrainExample& ex) {
  CompiledExample ce;
  ce.src = &ex;
  ce.n = static_cast<int>(ex.tokens.size());
  if (ce.n == 0) throw Error("EmptySentence", "training example with no tokens");
  ConstituencyTree target = binarize(ex.target);
  if (target.length() != ce.n)
    throw Error("LengthMismatch", "target tree length differs from tokens for example " + ex.id);
  ce.span_feats.assign(ce.n + 1, std::vector<SparseFeats>(ce.n + 1));
  for (int width = 2; width <= ce.n; ++width)
    for (int i = 0; i + width <= ce.n; ++i)
      ce.span_feats[i][i + width] = compile_span(interner, ex.tokens, {i, i + width});
  for (const Span& s : node_spans(target)) {
    if (s.second - s.first < 2) continue;
    ce.target_scored.insert(s);
    if (!(s.first == 0 && s.second == ce.n)) ce.target_eval.insert(s);
  }
  return ce;
}

double f1_from_sets(const std::set<Span>& p, const std::set<Span>& r) {
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  size_t match = 0;
  for (const Span& s : p) match += r.count(s);
  if (match == 0) return 0.0;
  double precision = static_cast<double>(match) / p.size();
  double recall = static_cast<double>(match) / r.size();
  return 2.0 * precision * recall / (precision + recall);
}

// Chosen width>=2 spans under the current dense weights.
std::vector<Span> decode_compiled(const CompiledExample& ce, const std::vector<double>& w) {
  Chart chart(ce.n, [&](int i, int j) {
    double total = 0.0;
    for (auto [id, cnt] : ce.span_feats[i][j])
      if (id < static_cast<int>(w.size())) total += w[id] * cnt;
    return total;
  });
  std::vector<Span> chosen;
  chart.chosen_spans(0, ce.n, chosen);
  return chosen;
}

// Deterministic Fisher-Yates; avoids implementation-defined std::shuffle.
void deterministic_shuffle(std::vector<int>& order, std::mt19937_64& rng) {
  for (size_t i = order.size(); i > 1; --i) {
    size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
}

StudentModel snapshot_model(const Interner& interner, const std::vector<double>& w,
                            const std::vector<double>& u, std::uint64_t steps,
                            std::uint64_t updates, int epochs_trained, const TrainConfig& cfg) {
  StudentModel model;
  model.updates_seen = updates;
  model.epochs_trained = epochs_trained;
  model.seed = cfg.seed;
  model.hyperparams.epochs = cfg.epochs;
  for (size_t id = 0; id < w.size(); ++id) {
    double raw = w[id];
    double avg = steps > 0 ? raw - u[id] / static_cast<double>(steps) : raw;
    if (raw != 0.0) model.raw_weights[interner.names[id]] = raw;
    if (avg != 0.0) model.averaged_weights[interner.names[id]] = avg;
  }
  return model;
}

}  // namespace

FeatureVector extract_features(const std::vector<Token>& tokens, Span span) {
  const int n = static_cast<int>(tokens.size());
  if (span.first < 0 || span.second > n || span.first >= span.second)
    throw Error("SpanOutOfRange", "span outside the sentence");
  FeatureVector fv;
  append_features(tokens, span, [&](std::string key) { fv[key] += 1; });
  return fv;
}

ConstituencyTree decode(const StudentModel& model, const std::vector<Token>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) throw Error("EmptySentence", "cannot decode an empty sentence");
  Chart chart(n, scorer_for(model, tokens));
  return tree_from_chart(chart, tokens);
}

TwoBest decode_2best(const StudentModel& model, const std::vector<Token>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) throw Error("EmptySentence", "cannot decode an empty sentence");
  TwoBest out;
  if (n <= 2) {
    Chart chart(n, scorer_for(model, tokens));
    out.best = tree_from_chart(chart, tokens);
    out.margin = kInf;
    return out;
  }
  KBestChart chart(n, scorer_for(model, tokens));
  out.best = chart.tree(tokens, 0);
  const auto& root = chart.cells[0][n];
  if (root.size() >= 2) {
    out.second = chart.tree(tokens, 1);
    out.margin = root[0].score - root[1].score;
  } else {
    out.margin = kInf;
  }
  return out;
}

double confidence(const StudentModel& model, const std::vector<Token>& tokens) {
  TwoBest tb = decode_2best(model, tokens);
  if (!tb.second) return kInf;
  size_t spans = eval_spans(tb.best).size();
  return tb.margin / static_cast<double>(std::max<size_t>(1, spans));
}

TrainResult train(const std::vector<TrainExample>& examples, const TrainConfig& config,
                  const EpochCallback& epoch_callback) {
  if (examples.empty()) throw Error("EmptyTrainingSet", "no training examples");
  if (config.beta < 0) throw Error("NonIntegerBeta", "beta must be a non-negative integer");

  Interner interner;
  std::vector<CompiledExample> compiled;
  compiled.reserve(examples.size());
  for (const TrainExample& ex : examples) compiled.push_back(compile_example(interner, ex));

  std::vector<CompiledExample> labeled;
  for (const TrainExample& ex : config.labeled_examples)
    labeled.push_back(compile_example(interner, ex));

  // Epoch stream: all examples plus beta replications of the labeled set.
  std::vector<const CompiledExample*> stream;
  for (const CompiledExample& ce : compiled) stream.push_back(&ce);
  for (int rep = 0; rep < config.beta; ++rep)
    for (const CompiledExample& ce : labeled) stream.push_back(&ce);

  std::vector<double> w(interner.names.size(), 0.0);
  std::vector<double> u(interner.names.size(), 0.0);
  std::uint64_t steps = 0;
  std::uint64_t updates = 0;

  std::mt19937_64 rng(config.seed);
  std::vector<int> order(stream.size());
  TrainTrace trace;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    deterministic_shuffle(order, rng);
    for (int idx : order) {
      const CompiledExample& ce = *stream[idx];
      ++steps;
      std::vector<Span> chosen = decode_compiled(ce, w);
      std::set<Span> pred(chosen.begin(), chosen.end());
      if (pred == ce.target_scored) continue;
      ++updates;
      double t = static_cast<double>(steps - 1);
      auto apply = [&](const Span& s, double sign) {
        for (auto [id, cnt] : ce.span_feats[s.first][s.second]) {
          w[id] += sign * cnt;
          u[id] += sign * cnt * t;
        }
      };
      for (const Span& s : ce.target_scored)
        if (!pred.count(s)) apply(s, +1.0);
      for (const Span& s : pred)
        if (!ce.target_scored.count(s)) apply(s, -1.0);
    }

    // epoch-end trace: current raw-weight decode vs the training target
    for (const CompiledExample& ce : compiled) {
      std::vector<Span> chosen = decode_compiled(ce, w);
      std::set<Span> pred;
      for (const Span& s : chosen)
        if (!(s.first == 0 && s.second == ce.n)) pred.insert(s);
      trace.push_back({ce.src->id, epoch, f1_from_sets(pred, ce.target_eval)});
    }

    if (epoch_callback) {
      StudentModel snap = snapshot_model(interner, w, u, steps, updates, epoch, config);
      epoch_callback(epoch, snap);
    }
  }

  TrainResult result;
  result.model = snapshot_model(interner, w, u, steps, updates, config.epochs, config);
  result.trace = std::move(trace);
  return result;
}

void save_model(const StudentModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open " + path + " for writing");
  char buf[64];
  out << "pakd-model/1\n";
  out << "seed " << model.seed << "\n";
  out << "epochs_trained " << model.epochs_trained << "\n";
  out << "updates_seen " << model.updates_seen << "\n";
  out << "hyper_epochs " << model.hyperparams.epochs << "\n";
  out << "hyper_shuffle " << (model.hyperparams.shuffle ? 1 : 0) << "\n";
  out << "feature_version " << model.hyperparams.feature_version << "\n";
  auto dump = [&](const char* section, const std::map<std::string, double>& weights) {
    out << section << " " << weights.size() << "\n";
    for (const auto& [key, value] : weights) {
      std::snprintf(buf, sizeof(buf), "%a", value);
      out << buf << " " << key << "\n";
    }
  };
  dump("raw", model.raw_weights);
  dump("avg", model.averaged_weights);
}

StudentModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "pakd-model/1")
    throw Error("VersionMismatch", "unsupported model format in " + path);
  StudentModel model;
  auto read_kv = [&](const char* key) -> std::string {
    if (!std::getline(in, line)) throw Error("CorruptModel", "truncated model file " + path);
    size_t sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key)
      throw Error("CorruptModel", "expected '" + std::string(key) + "' in " + path);
    return line.substr(sp + 1);
  };
  model.seed = std::strtoull(read_kv("seed").c_str(), nullptr, 10);
  model.epochs_trained = std::atoi(read_kv("epochs_trained").c_str());
  model.updates_seen = std::strtoull(read_kv("updates_seen").c_str(), nullptr, 10);
  model.hyperparams.epochs = std::atoi(read_kv("hyper_epochs").c_str());
  model.hyperparams.shuffle = read_kv("hyper_shuffle") == "1";
  model.hyperparams.feature_version = read_kv("feature_version");
  auto read_section = [&](const char* name, std::map<std::string, double>& weights) {
    size_t count = std::strtoull(read_kv(name).c_str(), nullptr, 10);
    for (size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) throw Error("CorruptModel", "truncated weights in " + path);
      size_t sp = line.find(' ');
      if (sp == std::string::npos) throw Error("CorruptModel", "malformed weight line in " + path);
      char* end = nullptr;
      double value = std::strtod(line.c_str(), &end);
      weights[line.substr(sp + 1)] = value;
    }
  };
  read_section("raw", model.raw_weights);
  read_section("avg", model.averaged_weights);
  return model;
}

}  // namespace pakd
