#ifndef PROTOVERB_METRICS_HPP
#define PROTOVERB_METRICS_HPP

#include <map>
#include <string>
#include <vector>

#include "protoverb/hierarchy.hpp"
#include "protoverb/linalg.hpp"
#include "protoverb/prototypes.hpp"

namespace protoverb {

struct Prediction {
  int level = 0;
  Vec probs;       // softmax over similarities, temperature 1
  int argmax = 0;  // row index; ties resolve to the lowest index
  NodeId node = -1;
};

// Softmax over cosine similarities to the prototypes at `level`.
Prediction predict(std::span<const double> v, const PrototypeSet& ps,
                   const SenseHierarchy& h, int level);

// An instance reduced to what evaluation needs: its vector and gold paths.
struct EncodedInstance {
  std::string id;
  Vec v;
  std::vector<std::string> sense_paths;
};

struct MetricsReport {
  int level = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, double> per_class_f1;  // keyed by node name
  Matrix confusion;                            // gold row x predicted column
  size_t instance_count = 0;
};

// Multi-gold scoring: a prediction is correct when it matches any gold label
// at `level`. A correct prediction is credited to the matched gold class; an
// incorrect one is charged against the first-listed gold class.
MetricsReport evaluate(const std::vector<EncodedInstance>& instances,
                       const PrototypeSet& ps, const SenseHierarchy& h,
                       int level);

// Unweighted mean over classes of 2PR/(P+R); F1 = 0 when P+R = 0.
double macro_f1(const Matrix& confusion);
std::vector<double> per_class_f1(const Matrix& confusion);

// Gold rows at `level` for each sense path deep enough to reach it,
// de-duplicated, in path order. Throws if none reach the level.
std::vector<int> gold_rows_at_level(const std::vector<std::string>& paths,
                                    const SenseHierarchy& h, int level);

std::string report_to_json(const MetricsReport& r);

}  // namespace protoverb

#endif
