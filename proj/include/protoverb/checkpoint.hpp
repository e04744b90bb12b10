#ifndef PROTOVERB_CHECKPOINT_HPP
#define PROTOVERB_CHECKPOINT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "protoverb/corpus.hpp"
#include "protoverb/hierarchy.hpp"
#include "protoverb/trainer.hpp"

namespace protoverb {

struct Checkpoint {
  TrainConfig config;
  SenseHierarchy hierarchy;
  TemplateSet templates;
  ModelState model;
  std::vector<EpochRecord> history;
};

// Relative file name -> content for a checkpoint directory. The caller
// decides how the files reach disk (direct write or staged-and-renamed).
std::map<std::string, std::string> checkpoint_files(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace protoverb

#endif
