#ifndef PROTOVERB_LOSSES_HPP
#define PROTOVERB_LOSSES_HPP

#include <map>
#include <vector>

#include "protoverb/hierarchy.hpp"
#include "protoverb/linalg.hpp"
#include "protoverb/prototypes.hpp"

namespace protoverb {

// A mini-batch of instance vectors with their per-level class rows.
// paths[i][l-1] is the row index of instance i's gold class at level l;
// the vector's length is the depth the instance's sense path covers.
struct Batch {
  std::vector<Vec> vecs;
  std::vector<std::vector<int>> paths;
  double tau = 0.1;

  size_t size() const { return vecs.size(); }
  bool covers_level(size_t i, int level) const {
    return paths[i].size() >= static_cast<size_t>(level);
  }
  int label_at(size_t i, int level) const {
    return paths[i][static_cast<size_t>(level - 1)];
  }
};

struct LossToggles {
  bool ins_ins = true;
  bool pro_pro = true;
};

struct InsInsResult {
  double loss = 0.0;
  std::vector<Vec> d_vecs;
  int active_anchors = 0;
};

struct InsProResult {
  double loss = 0.0;
  std::vector<Vec> d_vecs;
  std::map<int, Matrix> d_protos;  // level -> gradient matrix
};

struct ProProResult {
  double loss = 0.0;
  std::map<int, Matrix> d_protos;
};

struct LossBreakdown {
  double ins_ins = 0.0;
  double ins_pro = 0.0;
  double pro_pro = 0.0;
  double total = 0.0;
  std::vector<Vec> d_vecs;
  std::map<int, Matrix> d_protos;
};

// Instance-instance contrast at one level: for each anchor, the other
// same-class instances are positives against a denominator over every other
// instance. Anchors without positives are skipped and the prefactor counts
// only the anchors that remain.
InsInsResult loss_ins_ins(const Batch& b, int level);

// Mean over levels 2 and 3 of loss_ins_ins on the sub-batch of instances
// that cover the level (levels with fewer than 2 such instances are skipped).
InsInsResult loss_ins_ins_multilevel(const Batch& b);

// Instance-prototype contrast: per instance and per covered level, softmax
// over that level's prototypes with the gold row as positive; averaged over
// the instance's levels, then over the batch.
InsProResult loss_ins_pro(const Batch& b, const PrototypeSet& ps);

// Prototype-prototype contrast: every node at level >= 2 is a child whose
// positive is its father's prototype, against all prototypes at the father's
// level; averaged over the children.
ProProResult loss_pro_pro(const PrototypeSet& ps, const SenseHierarchy& h,
                          double tau);

LossBreakdown total_loss(const Batch& b, const PrototypeSet& ps,
                         const SenseHierarchy& h, const LossToggles& toggles);

}  // namespace protoverb

#endif
