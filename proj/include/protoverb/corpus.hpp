#ifndef PROTOVERB_CORPUS_HPP
#define PROTOVERB_CORPUS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "protoverb/hierarchy.hpp"

namespace protoverb {

enum class Split { kTrain, kDev, kTest };

Split parse_split(const std::string& text);
std::string split_name(Split s);

struct Instance {
  std::string id;
  std::string arg1;
  std::string arg2;
  std::vector<std::string> sense_paths;  // non-empty, pairwise distinct
  std::string language;
  Split split = Split::kTrain;
};

struct RenderedPrompt {
  std::string text;
  size_t mask_offset = 0;  // byte index of the mask token in `text`
};

struct TrainingExample {
  std::string instance_id;
  std::string path;  // one of the source instance's sense_paths
  RenderedPrompt prompt;
};

// Placeholders: {L1_LABELS} {L2_LABELS} {ARG1} {ARG2} {MASK}.
// {MASK}, {ARG1} and {ARG2} are required; every placeholder that appears
// must appear exactly once.
struct Template {
  std::string language;
  std::string pattern;
};

Template parse_template(std::string_view text);
Template load_template(const std::filesystem::path& path);
std::string template_to_text(const Template& t);

// One template per language.
class TemplateSet {
 public:
  void add(Template t);
  bool has(const std::string& language) const;
  const Template& for_language(const std::string& language) const;
  const std::map<std::string, Template>& all() const { return templates_; }

 private:
  std::map<std::string, Template> templates_;
};

// Corpus records: one JSON object per line with fields
// id / arg1 / arg2 / senses / lang / split.
std::vector<Instance> parse_corpus(std::string_view text,
                                   const SenseHierarchy& h);
std::vector<Instance> load_corpus(const std::filesystem::path& path,
                                  const SenseHierarchy& h);
std::string corpus_to_jsonl(const std::vector<Instance>& instances);

std::vector<const Instance*> instances_in_split(
    const std::vector<Instance>& instances, Split split);

RenderedPrompt render(const Template& t, const Instance& inst,
                      const SenseHierarchy& h, bool include_label_info);

// One training example per (instance, sense path) pair, in instance order
// then path order.
std::vector<TrainingExample> expand_multilabel(
    const std::vector<Instance>& instances, const TemplateSet& templates,
    const SenseHierarchy& h, bool include_label_info);

}  // namespace protoverb

#endif
