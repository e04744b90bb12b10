#ifndef PROTOVERB_TRAINER_HPP
#define PROTOVERB_TRAINER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protoverb/corpus.hpp"
#include "protoverb/encoder.hpp"
#include "protoverb/hierarchy.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/metrics.hpp"
#include "protoverb/prototypes.hpp"

namespace protoverb {

struct TrainConfig {
  double tau = 0.1;
  double learning_rate = 5e-5;
  int batch_size = 196;
  int max_epochs = 10;
  int patience = 5;
  int d_p = 128;
  int d_h = 64;
  uint32_t vocab_buckets = 1u << 15;
  uint64_t seed = 42;
  bool ins_ins = true;
  bool pro_pro = true;
  bool label_info = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int threads = 1;

  void validate() const;
  static TrainConfig from_config(const std::map<std::string, std::string>& kv);
  std::string to_text() const;
};

struct ModelState {
  EncoderParams enc;
  PrototypeSet protos;
};

struct AdamMoments {
  Matrix m;
  Matrix v;
};

struct TrainState {
  ModelState model;
  AdamMoments opt_tokens;
  AdamMoments opt_projection;
  std::map<int, AdamMoments> opt_protos;  // per level
  int64_t step = 0;
  int epoch = 0;
  EncoderGrads scratch;

  static TrainState init(const TrainConfig& cfg, const SenseHierarchy& h);
};

// One pre-tokenized training example.
struct PreparedExample {
  std::string instance_id;
  std::vector<uint32_t> tokens;
  std::vector<int> level_rows;  // gold row per level from level 1 down
};

PreparedExample prepare_example(const TrainingExample& ex,
                                const SenseHierarchy& h,
                                uint32_t vocab_buckets);

// Epoch-dependent deterministic shuffle; a final batch shorter than 2 is
// merged into the previous one.
std::vector<std::vector<size_t>> make_batches(size_t n_examples,
                                              int batch_size, uint64_t seed,
                                              int epoch);

void adam_update(Matrix& param, const Matrix& grad, AdamMoments& mom,
                 int64_t step, const TrainConfig& cfg);

// Forward, total loss, backward, one optimizer step.
LossBreakdown train_step(TrainState& state,
                         const std::vector<const PreparedExample*>& batch,
                         const TrainConfig& cfg, const SenseHierarchy& h,
                         const ExternalEmbeddings* ext = nullptr);

struct DevMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double ins_ins = 0.0;
  double ins_pro = 0.0;
  double pro_pro = 0.0;
  double total = 0.0;
  std::map<int, DevMetrics> dev;  // level -> metrics
};

struct FitResult {
  ModelState best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 when training never ran
  double best_macro_f1 = 0.0;
  double best_accuracy = 0.0;
};

// Train on the train split, monitor dev macro-F1 at the deepest evaluated
// level (<= 2) with accuracy as tie-breaker, early-stop on `patience`.
FitResult fit(const TrainConfig& cfg, const std::vector<Instance>& corpus,
              const SenseHierarchy& h, const TemplateSet& templates,
              const ExternalEmbeddings* ext = nullptr);

// Render + tokenize + encode a set of instances against a model snapshot.
std::vector<EncodedInstance> encode_instances(
    const ModelState& model, const std::vector<const Instance*>& instances,
    const SenseHierarchy& h, const TemplateSet& templates, bool label_info,
    const ExternalEmbeddings* ext = nullptr, int threads = 1);

int deepest_evaluated_level(const SenseHierarchy& h);

std::string history_to_jsonl(const std::vector<EpochRecord>& history);

}  // namespace protoverb

#endif
