#ifndef PROTOVERB_SYNTH_HPP
#define PROTOVERB_SYNTH_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "protoverb/corpus.hpp"
#include "protoverb/hierarchy.hpp"

namespace protoverb {

// Desk-scale corpus generator: each leaf class owns a disjoint signature
// vocabulary, mixed with shared noise tokens. Splits are 80/10/10 per leaf.
struct SynthSpec {
  int roots = 3;
  int children_per_root = 2;   // 0 -> depth-1 hierarchy
  int level3_per_child = 0;    // 0 -> no third level
  int vocab_per_leaf = 50;
  int instances_per_leaf = 50;
  int tokens_per_arg = 8;
  int noise_vocab = 30;
  double noise_rate = 0.1;
  std::vector<std::string> languages = {"en"};
  // Optional confound: instances of `overlap_from` draw this share of their
  // signature slots from `overlap_to`'s vocabulary.
  std::string overlap_from;
  std::string overlap_to;
  double overlap_rate = 0.0;

  static SynthSpec from_config(const std::map<std::string, std::string>& kv);
  void validate() const;
  std::string to_text() const;
};

struct SynthOutput {
  SenseHierarchy hierarchy;
  std::vector<Instance> instances;
};

SynthOutput gen_synthetic(const SynthSpec& spec, uint64_t seed);

// A generic pattern usable with generated corpora, one per language.
Template default_template(const std::string& language);

}  // namespace protoverb

#endif
