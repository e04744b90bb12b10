#ifndef PROTOVERB_DIAGNOSTICS_HPP
#define PROTOVERB_DIAGNOSTICS_HPP

#include <map>
#include <string>
#include <vector>

#include "protoverb/hierarchy.hpp"
#include "protoverb/metrics.hpp"
#include "protoverb/prototypes.hpp"

namespace protoverb {

struct DiagnosticsReport {
  int level = 0;
  int k = 0;
  // Classes with no test examples are absent from the map, not zero.
  std::map<std::string, double> avg_cos_distance;
  // prototype name -> gold label name -> (possibly fractional) neighbor count.
  std::map<std::string, std::map<std::string, double>> neighbor_dist;
};

// Mean over a class's test examples of (1 - cos(v, prototype)). An instance
// with several gold labels at the level counts toward each of them.
std::map<std::string, double> avg_cos_distance(
    const std::vector<EncodedInstance>& test_set, const PrototypeSet& ps,
    const SenseHierarchy& h, int level);

// For each prototype, the k most similar test examples (ties by instance
// order); neighbors with several gold labels credit each label 1/|golds|.
std::map<std::string, std::map<std::string, double>> topk_neighbors(
    const std::vector<EncodedInstance>& test_set, const PrototypeSet& ps,
    const SenseHierarchy& h, int level, int k);

DiagnosticsReport run_diagnostics(const std::vector<EncodedInstance>& test_set,
                                  const PrototypeSet& ps,
                                  const SenseHierarchy& h, int level, int k);

std::string avg_distance_csv(const DiagnosticsReport& r);
std::string neighbors_csv(const DiagnosticsReport& r);

}  // namespace protoverb

#endif
