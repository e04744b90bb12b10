#include "protoverb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "protoverb/io_util.hpp"
#include "protoverb/parallel.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

using nlohmann::json;

void TrainConfig::validate() const {
  if (tau <= 0.0) throw std::runtime_error("config: tau must be positive");
  if (batch_size < 2) throw std::runtime_error("config: batch_size must be >= 2");
  if (max_epochs < 0) throw std::runtime_error("config: max_epochs must be >= 0");
  if (patience < 0) throw std::runtime_error("config: patience must be >= 0");
  if (patience > max_epochs) {
    throw std::runtime_error("config: patience must be <= max_epochs");
  }
  if (d_p < 2) throw std::runtime_error("config: d_p must be >= 2");
  if (d_h < 1) throw std::runtime_error("config: d_h must be >= 1");
  if (vocab_buckets < 1) {
    throw std::runtime_error("config: vocab_buckets must be >= 1");
  }
  if (learning_rate < 0.0) {
    throw std::runtime_error("config: learning_rate must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::runtime_error("config: beta1/beta2 must be in [0, 1)");
  }
  if (epsilon <= 0.0) throw std::runtime_error("config: epsilon must be positive");
  if (threads < 1) throw std::runtime_error("config: threads must be >= 1");
}

TrainConfig TrainConfig::from_config(
    const std::map<std::string, std::string>& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "tau") {
      cfg.tau = parse_double(value);
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_double(value);
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(parse_long(value, key));
    } else if (key == "max_epochs") {
      cfg.max_epochs = static_cast<int>(parse_long(value, key));
    } else if (key == "patience") {
      cfg.patience = static_cast<int>(parse_long(value, key));
    } else if (key == "d_p") {
      cfg.d_p = static_cast<int>(parse_long(value, key));
    } else if (key == "d_h") {
      cfg.d_h = static_cast<int>(parse_long(value, key));
    } else if (key == "vocab_buckets") {
      cfg.vocab_buckets = static_cast<uint32_t>(parse_long(value, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<uint64_t>(parse_long(value, key));
    } else if (key == "ins_ins") {
      cfg.ins_ins = parse_bool(value, key);
    } else if (key == "pro_pro") {
      cfg.pro_pro = parse_bool(value, key);
    } else if (key == "label_info") {
      cfg.label_info = parse_bool(value, key);
    } else if (key == "beta1") {
      cfg.beta1 = parse_double(value);
    } else if (key == "beta2") {
      cfg.beta2 = parse_double(value);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(value);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_long(value, key));
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string TrainConfig::to_text() const {
  std::string out;
  out += "tau = " + format_double(tau) + "\n";
  out += "learning_rate = " + format_double(learning_rate) + "\n";
  out += "batch_size = " + std::to_string(batch_size) + "\n";
  out += "max_epochs = " + std::to_string(max_epochs) + "\n";
  out += "patience = " + std::to_string(patience) + "\n";
  out += "d_p = " + std::to_string(d_p) + "\n";
  out += "d_h = " + std::to_string(d_h) + "\n";
  out += "vocab_buckets = " + std::to_string(vocab_buckets) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  out += std::string("ins_ins = ") + (ins_ins ? "true" : "false") + "\n";
  out += std::string("pro_pro = ") + (pro_pro ? "true" : "false") + "\n";
  out += std::string("label_info = ") + (label_info ? "true" : "false") + "\n";
  out += "beta1 = " + format_double(beta1) + "\n";
  out += "beta2 = " + format_double(beta2) + "\n";
  out += "epsilon = " + format_double(epsilon) + "\n";
  out += "threads = " + std::to_string(threads) + "\n";
  return out;
}

TrainState TrainState::init(const TrainConfig& cfg, const SenseHierarchy& h) {
  cfg.validate();
  TrainState s;
  EncoderConfig enc_cfg;
  enc_cfg.vocab_buckets = cfg.vocab_buckets;
  enc_cfg.d_h = cfg.d_h;
  enc_cfg.d_p = cfg.d_p;
  s.model.enc = EncoderParams::init(enc_cfg, cfg.seed);
  s.model.protos = PrototypeSet::init(h, cfg.d_p, cfg.seed + 1);
  s.opt_tokens = {Matrix(s.model.enc.token_table.rows(),
                         s.model.enc.token_table.cols()),
                  Matrix(s.model.enc.token_table.rows(),
                         s.model.enc.token_table.cols())};
  s.opt_projection = {
      Matrix(s.model.enc.projection.rows(), s.model.enc.projection.cols()),
      Matrix(s.model.enc.projection.rows(), s.model.enc.projection.cols())};
  for (int level = 1; level <= h.depth(); ++level) {
    const Matrix& p = s.model.protos.at_level(level);
    s.opt_protos.emplace(level, AdamMoments{Matrix(p.rows(), p.cols()),
                                            Matrix(p.rows(), p.cols())});
  }
  s.scratch = EncoderGrads::zeros_like(s.model.enc);
  return s;
}

PreparedExample prepare_example(const TrainingExample& ex,
                                const SenseHierarchy& h,
                                uint32_t vocab_buckets) {
  PreparedExample out;
  out.instance_id = ex.instance_id;
  out.tokens = tokenize(ex.prompt.text, vocab_buckets);
  for (NodeId id : h.resolve_path(ex.path)) {
    out.level_rows.push_back(h.row_index(id));
  }
  return out;
}

std::vector<std::vector<size_t>> make_batches(size_t n_examples,
                                              int batch_size, uint64_t seed,
                                              int epoch) {
  if (n_examples < 2) {
    throw std::runtime_error("need at least 2 training examples, got " +
                             std::to_string(n_examples));
  }
  if (batch_size < 2) {
    throw std::invalid_argument("batch size must be >= 2");
  }
  std::vector<size_t> order(n_examples);
  for (size_t i = 0; i < n_examples; ++i) order[i] = i;
  Rng rng(seed ^ static_cast<uint64_t>(epoch));
  rng.shuffle(order);

  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n_examples;
       start += static_cast<size_t>(batch_size)) {
    const size_t end =
        std::min(n_examples, start + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<ptrdiff_t>(start),
                         order.begin() + static_cast<ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

void adam_update(Matrix& param, const Matrix& grad, AdamMoments& mom,
                 int64_t step, const TrainConfig& cfg) {
  if (!param.same_shape(grad) || !param.same_shape(mom.m) ||
      !param.same_shape(mom.v)) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  auto& p = param.data();
  const auto& g = grad.data();
  auto& m = mom.m.data();
  auto& v = mom.v.data();
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

namespace {

struct ForwardPass {
  Vec h;
  Vec v;
  bool external = false;
};

ForwardPass forward_example(const ModelState& model, const PreparedExample& ex,
                            const ExternalEmbeddings* ext) {
  ForwardPass fp;
  if (ext != nullptr && ext->has(ex.instance_id)) {
    fp.h = ext->hidden(ex.instance_id);
    fp.v = project_hidden(model.enc, as_span(fp.h));
    fp.external = true;
    return fp;
  }
  EncodeResult enc = encode(model.enc, ex.tokens);
  fp.h = std::move(enc.h);
  fp.v = std::move(enc.v);
  return fp;
}

void check_finite_breakdown(const LossBreakdown& loss) {
  struct Term {
    const char* name;
    double value;
  };
  for (const Term& t : {Term{"ins_ins", loss.ins_ins},
                        Term{"ins_pro", loss.ins_pro},
                        Term{"pro_pro", loss.pro_pro}}) {
    if (!std::isfinite(t.value)) {
      throw std::runtime_error(std::string("non-finite loss in term ") +
                               t.name);
    }
  }
}

}  // namespace

LossBreakdown train_step(TrainState& state,
                         const std::vector<const PreparedExample*>& batch,
                         const TrainConfig& cfg, const SenseHierarchy& h,
                         const ExternalEmbeddings* ext) {
  if (batch.empty()) {
    throw std::invalid_argument("train_step: empty batch");
  }
  // Forward.
  std::vector<ForwardPass> passes(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    passes[i] = forward_example(state.model, *batch[i], ext);
  }
  Batch b;
  b.tau = cfg.tau;
  b.vecs.reserve(batch.size());
  b.paths.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    b.vecs.push_back(passes[i].v);
    b.paths.push_back(batch[i]->level_rows);
  }

  LossToggles toggles{cfg.ins_ins, cfg.pro_pro};
  LossBreakdown loss = total_loss(b, state.model.protos, h, toggles);
  check_finite_breakdown(loss);

  // Backward into encoder parameter space.
  state.scratch.reset();
  for (size_t i = 0; i < batch.size(); ++i) {
    if (passes[i].external) {
      project_hidden_backward(state.model.enc, as_span(passes[i].h),
                              as_span(loss.d_vecs[i]), state.scratch);
    } else {
      encode_backward(state.model.enc, batch[i]->tokens, as_span(passes[i].h),
                      as_span(loss.d_vecs[i]), state.scratch);
    }
  }

  // One shared optimizer step for every parameter block.
  ++state.step;
  adam_update(state.model.enc.token_table, state.scratch.d_token_table,
              state.opt_tokens, state.step, cfg);
  adam_update(state.model.enc.projection, state.scratch.d_projection,
              state.opt_projection, state.step, cfg);
  for (auto& [level, grad] : loss.d_protos) {
    adam_update(state.model.protos.at_level(level), grad,
                state.opt_protos.at(level), state.step, cfg);
  }
  return loss;
}

int deepest_evaluated_level(const SenseHierarchy& h) {
  return std::min(2, h.depth());
}

std::vector<EncodedInstance> encode_instances(
    const ModelState& model, const std::vector<const Instance*>& instances,
    const SenseHierarchy& h, const TemplateSet& templates, bool label_info,
    const ExternalEmbeddings* ext, int threads) {
  std::vector<EncodedInstance> out(instances.size());
  parallel_for(instances.size(), threads, [&](size_t i) {
    const Instance& inst = *instances[i];
    EncodedInstance enc;
    enc.id = inst.id;
    enc.sense_paths = inst.sense_paths;
    if (ext != nullptr && ext->has(inst.id)) {
      enc.v = project_hidden(model.enc, as_span(ext->hidden(inst.id)));
    } else {
      const Template& t = templates.for_language(inst.language);
      RenderedPrompt prompt = render(t, inst, h, label_info);
      auto tokens = tokenize(prompt.text, model.enc.vocab_buckets);
      enc.v = encode(model.enc, tokens).v;
    }
    out[i] = std::move(enc);
  });
  return out;
}

FitResult fit(const TrainConfig& cfg, const std::vector<Instance>& corpus,
              const SenseHierarchy& h, const TemplateSet& templates,
              const ExternalEmbeddings* ext) {
  cfg.validate();
  std::vector<Instance> train_instances;
  std::vector<const Instance*> dev_instances;
  for (const Instance& inst : corpus) {
    if (inst.split == Split::kTrain) train_instances.push_back(inst);
    if (inst.split == Split::kDev) dev_instances.push_back(&inst);
  }
  if (train_instances.empty()) {
    throw std::runtime_error("fit: train split is empty");
  }
  if (dev_instances.empty()) {
    throw std::runtime_error("fit: dev split is empty");
  }

  auto examples =
      expand_multilabel(train_instances, templates, h, cfg.label_info);
  std::vector<PreparedExample> prepared;
  prepared.reserve(examples.size());
  for (const TrainingExample& ex : examples) {
    prepared.push_back(prepare_example(ex, h, cfg.vocab_buckets));
  }

  TrainState state = TrainState::init(cfg, h);
  FitResult result;
  result.best = state.model;

  const int monitor_level = deepest_evaluated_level(h);
  double best_f1 = -1.0;
  double best_acc = -1.0;
  int epochs_without_improvement = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    state.epoch = epoch;
    auto batches =
        make_batches(prepared.size(), cfg.batch_size, cfg.seed, epoch);
    EpochRecord record;
    record.epoch = epoch;
    for (const auto& batch_indices : batches) {
      std::vector<const PreparedExample*> batch;
      batch.reserve(batch_indices.size());
      for (size_t idx : batch_indices) batch.push_back(&prepared[idx]);
      LossBreakdown loss = train_step(state, batch, cfg, h, ext);
      record.ins_ins += loss.ins_ins;
      record.ins_pro += loss.ins_pro;
      record.pro_pro += loss.pro_pro;
      record.total += loss.total;
    }
    const double inv_batches = 1.0 / static_cast<double>(batches.size());
    record.ins_ins *= inv_batches;
    record.ins_pro *= inv_batches;
    record.pro_pro *= inv_batches;
    record.total *= inv_batches;

    auto dev_encoded =
        encode_instances(state.model, dev_instances, h, templates,
                         cfg.label_info, ext, cfg.threads);
    for (int level = 1; level <= monitor_level; ++level) {
      MetricsReport rep = evaluate(dev_encoded, state.model.protos, h, level);
      record.dev[level] = DevMetrics{rep.accuracy, rep.macro_f1};
    }
    result.history.push_back(record);

    const DevMetrics& monitored = record.dev.at(monitor_level);
    const bool improved = monitored.macro_f1 > best_f1 ||
                          (monitored.macro_f1 == best_f1 &&
                           monitored.accuracy > best_acc);
    if (improved) {
      best_f1 = monitored.macro_f1;
      best_acc = monitored.accuracy;
      result.best = state.model;
      result.best_epoch = epoch;
      result.best_macro_f1 = best_f1;
      result.best_accuracy = best_acc;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= cfg.patience) break;
    }
  }
  return result;
}

std::string history_to_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const EpochRecord& r : history) {
    json rec;
    rec["epoch"] = r.epoch;
    // Raw-precision loss values keep "disabled term is exactly zero"
    // checkable from the file.
    rec["ins_ins"] = r.ins_ins;
    rec["ins_pro"] = r.ins_pro;
    rec["pro_pro"] = r.pro_pro;
    rec["total"] = r.total;
    json dev = json::object();
    for (const auto& [level, m] : r.dev) {
      json entry;
      entry["accuracy"] = m.accuracy;
      entry["macro_f1"] = m.macro_f1;
      dev[std::to_string(level)] = entry;
    }
    rec["dev"] = dev;
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace protoverb
