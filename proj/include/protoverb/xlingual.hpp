#ifndef PROTOVERB_XLINGUAL_HPP
#define PROTOVERB_XLINGUAL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "protoverb/corpus.hpp"
#include "protoverb/hierarchy.hpp"
#include "protoverb/linalg.hpp"
#include "protoverb/prototypes.hpp"

namespace protoverb {

enum class UpdateMode { kTargetOnly, kBoth };

UpdateMode parse_update_mode(const std::string& text);
std::string update_mode_name(UpdateMode mode);

struct AlignmentConfig {
  double tau_align = 0.1;
  int steps = 200;
  double learning_rate = 0.05;
  UpdateMode update_mode = UpdateMode::kTargetOnly;
  uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  static AlignmentConfig from_config(
      const std::map<std::string, std::string>& kv);
  std::string to_text() const;
};

// Total bijection between source and target rows at one level:
// target_row_of[src_row] = tgt_row.
struct ClassCorrespondence {
  int level = 1;
  std::vector<int> target_row_of;
};

// Matches classes by node name at `level`; the class sets must be equal.
ClassCorrespondence build_correspondence(const SenseHierarchy& src,
                                         const SenseHierarchy& tgt, int level);

struct AlignmentLoss {
  double loss = 0.0;
  Matrix d_src;
  Matrix d_tgt;
};

// Symmetric class-wise contrast: each source prototype against all target
// prototypes with its corresponding one as positive, plus the mirrored
// target-to-source term; averaged over 2M pairs of directions.
AlignmentLoss alignment_loss(const PrototypeSet& src, const PrototypeSet& tgt,
                             const ClassCorrespondence& corr, int level,
                             double tau_align);

struct AlignResult {
  PrototypeSet src;
  PrototypeSet tgt;
  std::vector<double> loss_history;
};

AlignResult align(const PrototypeSet& src, const PrototypeSet& tgt,
                  const ClassCorrespondence& corr, int level,
                  const AlignmentConfig& cfg);

// Language-specific template lookup; never falls back to another language.
const Template& select_template(const TemplateSet& templates,
                                const std::string& language);

}  // namespace protoverb

#endif
