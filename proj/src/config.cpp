#include "pakd/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pakd/error.hpp"

namespace pakd {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& scope) {
  if (!obj.is_object()) throw Error("ConfigError", scope + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw Error("ConfigError", "unknown key '" + key + "' in " + scope);
}

template <typename T>
void read_field(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

const char* noise_mode_name(NoiseMode mode) {
  return mode == NoiseMode::Rotation ? "rotation" : "random-replacement";
}

NoiseMode noise_mode_from_name(const std::string& name) {
  if (name == "rotation") return NoiseMode::Rotation;
  if (name == "random-replacement") return NoiseMode::RandomReplacement;
  throw Error("ConfigError", "unknown noise mode '" + name + "'");
}

void parse_grammar(const json& obj, GrammarConfig& g) {
  reject_unknown(obj, {"nonterminals", "terminals", "seed", "expansion_prob",
                       "rules_per_nonterminal", "max_depth"}, "grammar");
  read_field(obj, "nonterminals", g.nonterminals);
  read_field(obj, "terminals", g.terminals);
  read_field(obj, "seed", g.seed);
  read_field(obj, "expansion_prob", g.expansion_prob);
  read_field(obj, "rules_per_nonterminal", g.rules_per_nonterminal);
  read_field(obj, "max_depth", g.max_depth);
}

void parse_corpus(const json& obj, CorpusConfig& c) {
  reject_unknown(obj, {"unlabeled", "labeled", "test", "min_len", "max_len", "pool_seed",
                       "labeled_seed", "test_seed"}, "corpus");
  read_field(obj, "unlabeled", c.unlabeled);
  read_field(obj, "labeled", c.labeled);
  read_field(obj, "test", c.test);
  read_field(obj, "min_len", c.min_len);
  read_field(obj, "max_len", c.max_len);
  read_field(obj, "pool_seed", c.pool_seed);
  read_field(obj, "labeled_seed", c.labeled_seed);
  read_field(obj, "test_seed", c.test_seed);
}

void parse_noise(const json& obj, NoiseConfig& n) {
  reject_unknown(obj, {"tiers", "mode", "seed"}, "noise");
  if (obj.contains("mode")) n.mode = noise_mode_from_name(obj.at("mode").get<std::string>());
  read_field(obj, "seed", n.seed);
  if (obj.contains("tiers")) {
    n.tiers.clear();
    for (const auto& tier : obj.at("tiers")) {
      reject_unknown(tier, {"weight", "eta"}, "noise.tiers[]");
      NoiseTier t;
      read_field(tier, "weight", t.weight);
      read_field(tier, "eta", t.eta);
      n.tiers.push_back(t);
    }
  }
}

void parse_pipeline(const json& obj, PipelineConfig& p) {
  reject_unknown(obj, {"kind", "s0_epochs", "peer_epochs", "final_epochs", "sd_gen_epochs",
                       "r_percent", "seed", "beta"}, "pipeline");
  if (obj.contains("kind")) p.kind = pipeline_from_name(obj.at("kind").get<std::string>());
  read_field(obj, "s0_epochs", p.s0_epochs);
  read_field(obj, "peer_epochs", p.peer_epochs);
  read_field(obj, "final_epochs", p.final_epochs);
  read_field(obj, "sd_gen_epochs", p.sd_gen_epochs);
  read_field(obj, "r_percent", p.r_percent);
  read_field(obj, "seed", p.seed);
  read_field(obj, "beta", p.beta);
}

void parse_annotate(const json& obj, AnnotateConfig& a) {
  reject_unknown(obj, {"source", "labeled_k"}, "annotate");
  read_field(obj, "source", a.source);
  read_field(obj, "labeled_k", a.labeled_k);
  if (a.source != "noise" && a.source != "supervised")
    throw Error("ConfigError", "annotate.source must be 'noise' or 'supervised'");
}

void parse_analysis(const json& obj, AnalysisConfig& a) {
  reject_unknown(obj, {"selections", "n_buckets", "sizes", "labeled_sizes", "pakd_labeled",
                       "epochs"}, "analysis");
  read_field(obj, "selections", a.selections);
  read_field(obj, "n_buckets", a.n_buckets);
  read_field(obj, "sizes", a.sizes);
  read_field(obj, "labeled_sizes", a.labeled_sizes);
  read_field(obj, "pakd_labeled", a.pakd_labeled);
  read_field(obj, "epochs", a.epochs);
}

}  // namespace

RunConfig standard_benchmark_config() {
  RunConfig cfg;
  cfg.grammar.nonterminals = 10;
  cfg.grammar.terminals = 160;
  cfg.grammar.seed = 7;
  cfg.grammar.expansion_prob = 0.75;
  cfg.grammar.rules_per_nonterminal = 1;
  cfg.grammar.max_depth = 9;
  cfg.noise.tiers = {{0.5, 0.0}, {0.5, 0.6}};
  cfg.noise.mode = NoiseMode::Rotation;
  cfg.noise.seed = 11;
  cfg.pipeline.kind = PipelineKind::PaKd;
  return cfg;
}

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg = standard_benchmark_config();
  reject_unknown(doc, {"grammar", "corpus", "noise", "pipeline", "annotate", "analysis",
                       "seeds", "seed", "out"}, "config");
  if (doc.contains("grammar")) parse_grammar(doc.at("grammar"), cfg.grammar);
  if (doc.contains("corpus")) parse_corpus(doc.at("corpus"), cfg.corpus);
  if (doc.contains("noise")) parse_noise(doc.at("noise"), cfg.noise);
  if (doc.contains("pipeline")) parse_pipeline(doc.at("pipeline"), cfg.pipeline);
  if (doc.contains("annotate")) parse_annotate(doc.at("annotate"), cfg.annotate);
  if (doc.contains("analysis")) parse_analysis(doc.at("analysis"), cfg.analysis);
  read_field(doc, "seeds", cfg.seeds);
  read_field(doc, "seed", cfg.seed);
  read_field(doc, "out", cfg.out);
  if (cfg.corpus.min_len < 1 || cfg.corpus.max_len < cfg.corpus.min_len)
    throw Error("ConfigError", "corpus length bounds must satisfy 1 <= min_len <= max_len");
  if (cfg.seeds.empty()) throw Error("ConfigError", "seeds must be non-empty");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("ConfigError", "invalid JSON in '" + path + "': " + e.what());
  }
  return parse_run_config(doc);
}

json run_config_json(const RunConfig& cfg) {
  json tiers = json::array();
  for (const auto& t : cfg.noise.tiers) tiers.push_back({{"weight", t.weight}, {"eta", t.eta}});
  return json{
      {"grammar",
       {{"nonterminals", cfg.grammar.nonterminals},
        {"terminals", cfg.grammar.terminals},
        {"seed", cfg.grammar.seed},
        {"expansion_prob", cfg.grammar.expansion_prob},
        {"rules_per_nonterminal", cfg.grammar.rules_per_nonterminal},
        {"max_depth", cfg.grammar.max_depth}}},
      {"corpus",
       {{"unlabeled", cfg.corpus.unlabeled},
        {"labeled", cfg.corpus.labeled},
        {"test", cfg.corpus.test},
        {"min_len", cfg.corpus.min_len},
        {"max_len", cfg.corpus.max_len},
        {"pool_seed", cfg.corpus.pool_seed},
        {"labeled_seed", cfg.corpus.labeled_seed},
        {"test_seed", cfg.corpus.test_seed}}},
      {"noise", {{"tiers", tiers}, {"mode", noise_mode_name(cfg.noise.mode)}, {"seed", cfg.noise.seed}}},
      {"pipeline",
       {{"kind", pipeline_name(cfg.pipeline.kind)},
        {"s0_epochs", cfg.pipeline.s0_epochs},
        {"peer_epochs", cfg.pipeline.peer_epochs},
        {"final_epochs", cfg.pipeline.final_epochs},
        {"sd_gen_epochs", cfg.pipeline.sd_gen_epochs},
        {"r_percent", cfg.pipeline.r_percent},
        {"seed", cfg.pipeline.seed},
        {"beta", cfg.pipeline.beta}}},
      {"annotate", {{"source", cfg.annotate.source}, {"labeled_k", cfg.annotate.labeled_k}}},
      {"analysis",
       {{"selections", cfg.analysis.selections},
        {"n_buckets", cfg.analysis.n_buckets},
        {"sizes", cfg.analysis.sizes},
        {"labeled_sizes", cfg.analysis.labeled_sizes},
        {"pakd_labeled", cfg.analysis.pakd_labeled},
        {"epochs", cfg.analysis.epochs}}},
      {"seeds", cfg.seeds},
      {"seed", cfg.seed},
      {"out", cfg.out}};
}

namespace {

std::string fnv1a_hex(const std::string& body) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : body) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(run_config_json(cfg).dump()); }

std::string data_config_hash(const RunConfig& cfg) {
  json full = run_config_json(cfg);
  json data{{"grammar", full.at("grammar")},
            {"corpus", full.at("corpus")},
            {"noise", full.at("noise")},
            {"annotate", full.at("annotate")}};
  return fnv1a_hex(data.dump());
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IoError", "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("IoError", "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error("IoError", "cannot rename into '" + path + "': " + ec.message());
}

std::optional<std::string> jsonl_header_hash(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (!rec.is_object() || !rec.contains("_header")) return std::nullopt;
  const json& header = rec.at("_header");
  if (header.is_object() && header.contains("config_hash"))
    return header.at("config_hash").get<std::string>();
  return std::nullopt;
}

}  // namespace pakd
