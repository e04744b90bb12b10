#include "protoverb/cli.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "protoverb/checkpoint.hpp"
#include "protoverb/corpus.hpp"
#include "protoverb/diagnostics.hpp"
#include "protoverb/hierarchy.hpp"
#include "protoverb/io_util.hpp"
#include "protoverb/metrics.hpp"
#include "protoverb/synth.hpp"
#include "protoverb/trainer.hpp"
#include "protoverb/xlingual.hpp"

namespace protoverb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kEnvPrefix = "PROTOVERB_";

// Collects outputs as temp files; nothing lands under its final name until
// commit(). Uncommitted temps are removed on unwind.
class OutputStager {
 public:
  explicit OutputStager(fs::path out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  ~OutputStager() {
    for (const auto& [tmp, final_path] : pending_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  void stage(const std::string& relative_name, std::string_view content) {
    fs::path final_path = out_dir_ / relative_name;
    fs::create_directories(final_path.parent_path());
    fs::path tmp = final_path;
    tmp += ".staged";
    write_file_atomic(tmp, content);
    pending_.emplace_back(tmp, final_path);
    names_.push_back(relative_name);
  }

  std::vector<std::string> commit() {
    for (const auto& [tmp, final_path] : pending_) {
      fs::rename(tmp, final_path);
    }
    pending_.clear();
    return names_;
  }

  const fs::path& dir() const { return out_dir_; }

 private:
  fs::path out_dir_;
  std::vector<std::pair<fs::path, fs::path>> pending_;
  std::vector<std::string> names_;
};

std::string upper_snake(const std::string& key) {
  std::string out;
  for (char c : key) {
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

// Environment overrides sit between the config file and explicit flags.
void apply_env_overrides(std::map<std::string, std::string>& kv,
                         const std::vector<std::string>& keys) {
  for (const std::string& key : keys) {
    const std::string var = kEnvPrefix + upper_snake(key);
    if (const char* value = std::getenv(var.c_str())) {
      kv[key] = value;
    }
  }
}

const std::vector<std::string> kTrainKeys = {
    "tau",     "learning_rate", "batch_size", "max_epochs",
    "patience", "d_p",          "d_h",        "vocab_buckets",
    "seed",    "ins_ins",       "pro_pro",    "label_info",
    "beta1",   "beta2",         "epsilon",    "threads"};

const std::vector<std::string> kAlignKeys = {
    "tau_align", "steps", "learning_rate", "update_mode",
    "seed",      "beta1", "beta2",         "epsilon"};

struct ManifestInfo {
  std::string command;
  uint64_t seed = 42;
  json inputs = json::object();
  json config = json::object();
};

json config_echo(const std::string& config_text) {
  json out = json::object();
  for (const auto& [key, value] : parse_config_text(config_text)) {
    out[key] = value;
  }
  return out;
}

void write_manifest(OutputStager& stager, const ManifestInfo& info,
                    const std::vector<std::string>& outputs,
                    double duration_seconds) {
  json manifest;
  manifest["command"] = info.command;
  manifest["version"] = kToolVersion;
  manifest["seed"] = info.seed;
  manifest["inputs"] = info.inputs;
  manifest["config"] = info.config;
  manifest["outputs"] = outputs;
  manifest["duration_seconds"] = parse_double(fixed4(duration_seconds));
  for (const std::string& name : outputs) {
    if (!fs::exists(stager.dir() / name)) {
      throw std::runtime_error("manifest names a missing output: " + name);
    }
  }
  write_file_atomic(stager.dir() / "manifest.json", manifest.dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

TemplateSet load_templates(const std::vector<std::string>& paths) {
  TemplateSet templates;
  for (const std::string& p : paths) {
    templates.add(load_template(p));
  }
  return templates;
}

std::vector<const Instance*> split_or_throw(
    const std::vector<Instance>& corpus, const std::string& split) {
  auto subset = instances_in_split(corpus, parse_split(split));
  if (subset.empty()) {
    throw std::runtime_error("corpus has no instances in split '" + split +
                             "'");
  }
  return subset;
}

int cmd_gen_synth(const std::string& spec_path, uint64_t seed,
                  const std::string& out_dir) {
  Stopwatch watch;
  SynthSpec spec = spec_path.empty()
                       ? SynthSpec{}
                       : SynthSpec::from_config(parse_config_file(spec_path));
  SynthOutput data = gen_synthetic(spec, seed);

  OutputStager stager(out_dir);
  stager.stage("hierarchy.tsv", data.hierarchy.to_text());
  stager.stage("corpus.jsonl", corpus_to_jsonl(data.instances));
  for (const std::string& lang : spec.languages) {
    stager.stage("template_" + lang + ".txt",
                 template_to_text(default_template(lang)));
  }
  auto outputs = stager.commit();

  ManifestInfo info;
  info.command = "gen-synth";
  info.seed = seed;
  if (!spec_path.empty()) info.inputs["spec"] = spec_path;
  info.config = config_echo(spec.to_text());
  write_manifest(stager, info, outputs, watch.seconds());
  return 0;
}

struct TrainFlags {
  std::optional<double> tau;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<int> max_epochs;
  std::optional<int> patience;
  std::optional<int> d_p;
  std::optional<int> d_h;
  std::optional<long> vocab_buckets;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  bool no_ins_ins = false;
  bool no_pro_pro = false;
  bool no_label_info = false;
};

TrainConfig resolve_train_config(const std::string& config_path,
                                 const TrainFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = parse_config_file(config_path);
  apply_env_overrides(kv, kTrainKeys);
  if (flags.tau) kv["tau"] = format_double(*flags.tau);
  if (flags.learning_rate) {
    kv["learning_rate"] = format_double(*flags.learning_rate);
  }
  if (flags.batch_size) kv["batch_size"] = std::to_string(*flags.batch_size);
  if (flags.max_epochs) kv["max_epochs"] = std::to_string(*flags.max_epochs);
  if (flags.patience) kv["patience"] = std::to_string(*flags.patience);
  if (flags.d_p) kv["d_p"] = std::to_string(*flags.d_p);
  if (flags.d_h) kv["d_h"] = std::to_string(*flags.d_h);
  if (flags.vocab_buckets) {
    kv["vocab_buckets"] = std::to_string(*flags.vocab_buckets);
  }
  if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
  if (flags.threads) kv["threads"] = std::to_string(*flags.threads);
  if (flags.no_ins_ins) kv["ins_ins"] = "false";
  if (flags.no_pro_pro) kv["pro_pro"] = "false";
  if (flags.no_label_info) kv["label_info"] = "false";
  return TrainConfig::from_config(kv);
}

int cmd_train(const std::string& config_path, const TrainFlags& flags,
              const std::string& corpus_path, const std::string& hierarchy_path,
              const std::vector<std::string>& template_paths,
              const std::string& embeddings_path, const std::string& out_dir) {
  Stopwatch watch;
  TrainConfig cfg = resolve_train_config(config_path, flags);
  SenseHierarchy h = SenseHierarchy::load(hierarchy_path);
  auto corpus = load_corpus(corpus_path, h);
  TemplateSet templates = load_templates(template_paths);

  std::optional<ExternalEmbeddings> ext;
  if (!embeddings_path.empty()) {
    ext = ExternalEmbeddings::load(embeddings_path, cfg.d_h);
  }

  FitResult result = fit(cfg, corpus, h, templates, ext ? &*ext : nullptr);

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.hierarchy = std::move(h);
  ckpt.templates = std::move(templates);
  ckpt.model = std::move(result.best);
  ckpt.history = std::move(result.history);

  OutputStager stager(out_dir);
  for (const auto& [name, content] : checkpoint_files(ckpt)) {
    stager.stage(name, content);
  }
  auto outputs = stager.commit();

  ManifestInfo info;
  info.command = "train";
  info.seed = cfg.seed;
  info.inputs["corpus"] = corpus_path;
  info.inputs["hierarchy"] = hierarchy_path;
  info.inputs["templates"] = template_paths;
  if (!config_path.empty()) info.inputs["config"] = config_path;
  if (!embeddings_path.empty()) info.inputs["embeddings"] = embeddings_path;
  info.config = config_echo(cfg.to_text());
  write_manifest(stager, info, outputs, watch.seconds());
  return 0;
}

int cmd_eval(const std::string& ckpt_dir, const std::string& corpus_path,
             int level, const std::string& split,
             const std::string& embeddings_path, int threads,
             const std::string& out_dir) {
  Stopwatch watch;
  Checkpoint ckpt = load_checkpoint(ckpt_dir);
  auto corpus = load_corpus(corpus_path, ckpt.hierarchy);
  auto subset = split_or_throw(corpus, split);

  std::optional<ExternalEmbeddings> ext;
  if (!embeddings_path.empty()) {
    ext = ExternalEmbeddings::load(embeddings_path, ckpt.config.d_h);
  }

  auto encoded = encode_instances(ckpt.model, subset, ckpt.hierarchy,
                                  ckpt.templates, ckpt.config.label_info,
                                  ext ? &*ext : nullptr, threads);
  MetricsReport report =
      evaluate(encoded, ckpt.model.protos, ckpt.hierarchy, level);

  OutputStager stager(out_dir);
  stager.stage("metrics_l" + std::to_string(level) + ".json",
               report_to_json(report));
  auto outputs = stager.commit();

  ManifestInfo info;
  info.command = "eval";
  info.seed = ckpt.config.seed;
  info.inputs["checkpoint"] = ckpt_dir;
  info.inputs["corpus"] = corpus_path;
  info.inputs["level"] = level;
  info.inputs["split"] = split;
  if (!embeddings_path.empty()) info.inputs["embeddings"] = embeddings_path;
  info.config = config_echo(ckpt.config.to_text());
  write_manifest(stager, info, outputs, watch.seconds());
  return 0;
}

int cmd_analyze(const std::string& ckpt_dir, const std::string& corpus_path,
                int k, int level_flag, const std::string& split, int threads,
                const std::string& out_dir) {
  Stopwatch watch;
  Checkpoint ckpt = load_checkpoint(ckpt_dir);
  auto corpus = load_corpus(corpus_path, ckpt.hierarchy);
  auto subset = split_or_throw(corpus, split);

  const int level =
      level_flag > 0 ? level_flag : deepest_evaluated_level(ckpt.hierarchy);
  auto encoded =
      encode_instances(ckpt.model, subset, ckpt.hierarchy, ckpt.templates,
                       ckpt.config.label_info, nullptr, threads);
  DiagnosticsReport report =
      run_diagnostics(encoded, ckpt.model.protos, ckpt.hierarchy, level, k);

  OutputStager stager(out_dir);
  stager.stage("avg_distance.csv", avg_distance_csv(report));
  stager.stage("neighbors.csv", neighbors_csv(report));
  auto outputs = stager.commit();

  ManifestInfo info;
  info.command = "analyze";
  info.seed = ckpt.config.seed;
  info.inputs["checkpoint"] = ckpt_dir;
  info.inputs["corpus"] = corpus_path;
  info.inputs["level"] = level;
  info.inputs["k"] = k;
  info.inputs["split"] = split;
  info.config = config_echo(ckpt.config.to_text());
  write_manifest(stager, info, outputs, watch.seconds());
  return 0;
}

struct AlignFlags {
  std::optional<double> tau_align;
  std::optional<int> steps;
  std::optional<double> learning_rate;
  std::optional<std::string> update_mode;
  std::optional<uint64_t> seed;
};

AlignmentConfig resolve_align_config(const std::string& config_path,
                                     const AlignFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = parse_config_file(config_path);
  apply_env_overrides(kv, kAlignKeys);
  if (flags.tau_align) kv["tau_align"] = format_double(*flags.tau_align);
  if (flags.steps) kv["steps"] = std::to_string(*flags.steps);
  if (flags.learning_rate) {
    kv["learning_rate"] = format_double(*flags.learning_rate);
  }
  if (flags.update_mode) kv["update_mode"] = *flags.update_mode;
  if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
  return AlignmentConfig::from_config(kv);
}

int cmd_align(const std::string& src_dir, const std::string& tgt_dir,
              const std::string& config_path, const AlignFlags& flags,
              int level, const std::string& out_dir) {
  Stopwatch watch;
  AlignmentConfig cfg = resolve_align_config(config_path, flags);
  Checkpoint src = load_checkpoint(src_dir);
  Checkpoint tgt = load_checkpoint(tgt_dir);

  ClassCorrespondence corr =
      build_correspondence(src.hierarchy, tgt.hierarchy, level);
  AlignResult result =
      align(src.model.protos, tgt.model.protos, corr, level, cfg);

  OutputStager stager(out_dir);
  Checkpoint aligned_tgt = tgt;
  aligned_tgt.model.protos = result.tgt;
  for (const auto& [name, content] : checkpoint_files(aligned_tgt)) {
    stager.stage("target/" + name, content);
  }
  if (cfg.update_mode == UpdateMode::kBoth) {
    Checkpoint aligned_src = src;
    aligned_src.model.protos = result.src;
    for (const auto& [name, content] : checkpoint_files(aligned_src)) {
      stager.stage("source/" + name, content);
    }
  }
  std::string history;
  for (size_t i = 0; i < result.loss_history.size(); ++i) {
    json rec;
    rec["step"] = i + 1;
    rec["loss"] = result.loss_history[i];
    history += rec.dump();
    history.push_back('\n');
  }
  stager.stage("history.jsonl", history);
  auto outputs = stager.commit();

  ManifestInfo info;
  info.command = "align";
  info.seed = cfg.seed;
  info.inputs["source"] = src_dir;
  info.inputs["target"] = tgt_dir;
  info.inputs["level"] = level;
  if (!config_path.empty()) info.inputs["config"] = config_path;
  info.config = config_echo(cfg.to_text());
  write_manifest(stager, info, outputs, watch.seconds());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Hierarchical prototype verbalizer for discourse relations"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic corpus");
  std::string gen_spec;
  uint64_t gen_seed = 42;
  std::string gen_out;
  gen->add_option("--spec", gen_spec, "Synthetic spec file (key = value)");
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train encoder and prototypes");
  std::string train_config, train_corpus, train_hierarchy, train_embeddings,
      train_out;
  std::vector<std::string> train_templates;
  TrainFlags tf;
  double tf_tau = 0, tf_lr = 0;
  int tf_bs = 0, tf_epochs = 0, tf_patience = 0, tf_dp = 0, tf_dh = 0,
      tf_threads = 0;
  long tf_vocab = 0;
  uint64_t tf_seed = 0;
  train->add_option("--config", train_config, "Config file (key = value)");
  train->add_option("--corpus", train_corpus, "Corpus JSONL")->required();
  train->add_option("--hierarchy", train_hierarchy, "Hierarchy TSV")
      ->required();
  train->add_option("--template", train_templates, "Template file(s)")
      ->required();
  train->add_option("--external-embeddings", train_embeddings,
                    "Embedding records to use instead of the token encoder");
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  auto* o_tau = train->add_option("--tau", tf_tau, "Loss temperature");
  auto* o_lr = train->add_option("--learning-rate", tf_lr, "Learning rate");
  auto* o_bs = train->add_option("--batch-size", tf_bs, "Batch size");
  auto* o_ep = train->add_option("--max-epochs", tf_epochs, "Epoch cap");
  auto* o_pa = train->add_option("--patience", tf_patience, "Early stopping");
  auto* o_dp = train->add_option("--d-p", tf_dp, "Prototype dimension");
  auto* o_dh = train->add_option("--d-h", tf_dh, "Hidden dimension");
  auto* o_vb = train->add_option("--vocab-buckets", tf_vocab, "Hash buckets");
  auto* o_sd = train->add_option("--seed", tf_seed, "Seed");
  auto* o_th = train->add_option("--threads", tf_threads, "Thread cap");
  train->add_flag("--no-ins-ins", tf.no_ins_ins,
                  "Disable the instance-instance loss");
  train->add_flag("--no-pro-pro", tf.no_pro_pro,
                  "Disable the prototype-prototype loss");
  train->add_flag("--no-label-info", tf.no_label_info,
                  "Render prompts without label inventories");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt, eval_corpus, eval_split = "test", eval_embeddings,
                                      eval_out;
  int eval_level = 1, eval_threads = 1;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")
      ->required();
  eval_cmd->add_option("--corpus", eval_corpus, "Corpus JSONL")->required();
  eval_cmd->add_option("--level", eval_level, "Hierarchy level")->required();
  eval_cmd->add_option("--split", eval_split, "Corpus split")->capture_default_str();
  eval_cmd->add_option("--external-embeddings", eval_embeddings,
                       "Embedding records");
  eval_cmd->add_option("--threads", eval_threads, "Thread cap")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Prototype diagnostics");
  std::string an_ckpt, an_corpus, an_split = "test", an_out;
  int an_k = 10, an_level = 0, an_threads = 1;
  analyze->add_option("--checkpoint", an_ckpt, "Checkpoint directory")
      ->required();
  analyze->add_option("--corpus", an_corpus, "Corpus JSONL")->required();
  analyze->add_option("--k", an_k, "Neighbors per prototype")->capture_default_str();
  analyze->add_option("--level", an_level,
                      "Hierarchy level (default: deepest evaluated)");
  analyze->add_option("--split", an_split, "Corpus split")->capture_default_str();
  analyze->add_option("--threads", an_threads, "Thread cap")->capture_default_str();
  analyze->add_option("--out", an_out, "Output directory")->required();

  // align
  auto* align_cmd =
      app.add_subcommand("align", "Align prototype sets across languages");
  std::string al_src, al_tgt, al_config, al_out;
  int al_level = 1;
  AlignFlags af;
  double af_tau = 0, af_lr = 0;
  int af_steps = 0;
  std::string af_mode;
  uint64_t af_seed = 0;
  align_cmd->add_option("--src", al_src, "Source checkpoint")->required();
  align_cmd->add_option("--tgt", al_tgt, "Target checkpoint")->required();
  align_cmd->add_option("--config", al_config, "Config file (key = value)");
  align_cmd->add_option("--level", al_level, "Level to align")->capture_default_str();
  auto* a_tau = align_cmd->add_option("--tau-align", af_tau, "Temperature");
  auto* a_st = align_cmd->add_option("--steps", af_steps, "Update steps");
  auto* a_lr =
      align_cmd->add_option("--learning-rate", af_lr, "Learning rate");
  auto* a_um = align_cmd->add_option("--update-mode", af_mode,
                                     "target_only or both");
  auto* a_sd = align_cmd->add_option("--seed", af_seed, "Seed");
  align_cmd->add_option("--out", al_out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_synth(gen_spec, gen_seed, gen_out);
    }
    if (train->parsed()) {
      if (o_tau->count()) tf.tau = tf_tau;
      if (o_lr->count()) tf.learning_rate = tf_lr;
      if (o_bs->count()) tf.batch_size = tf_bs;
      if (o_ep->count()) tf.max_epochs = tf_epochs;
      if (o_pa->count()) tf.patience = tf_patience;
      if (o_dp->count()) tf.d_p = tf_dp;
      if (o_dh->count()) tf.d_h = tf_dh;
      if (o_vb->count()) tf.vocab_buckets = tf_vocab;
      if (o_sd->count()) tf.seed = tf_seed;
      if (o_th->count()) tf.threads = tf_threads;
      return cmd_train(train_config, tf, train_corpus, train_hierarchy,
                       train_templates, train_embeddings, train_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_ckpt, eval_corpus, eval_level, eval_split,
                      eval_embeddings, eval_threads, eval_out);
    }
    if (analyze->parsed()) {
      return cmd_analyze(an_ckpt, an_corpus, an_k, an_level, an_split,
                         an_threads, an_out);
    }
    if (align_cmd->parsed()) {
      if (a_tau->count()) af.tau_align = af_tau;
      if (a_st->count()) af.steps = af_steps;
      if (a_lr->count()) af.learning_rate = af_lr;
      if (a_um->count()) af.update_mode = af_mode;
      if (a_sd->count()) af.seed = af_seed;
      return cmd_align(al_src, al_tgt, al_config, af, al_level, al_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}

}  // namespace protoverb
