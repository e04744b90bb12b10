#include "protoverb/checkpoint.hpp"

#include <stdexcept>

#include "protoverb/io_util.hpp"

namespace protoverb {

namespace fs = std::filesystem;

std::map<std::string, std::string> checkpoint_files(const Checkpoint& ckpt) {
  std::map<std::string, std::string> files;
  files["config.cfg"] = ckpt.config.to_text();
  files["hierarchy.tsv"] = ckpt.hierarchy.to_text();
  for (const auto& [lang, t] : ckpt.templates.all()) {
    files["template_" + lang + ".txt"] = template_to_text(t);
  }
  files["encoder.txt"] = ckpt.model.enc.to_text();
  files["prototypes.txt"] = ckpt.model.protos.to_text();
  files["history.jsonl"] = history_to_jsonl(ckpt.history);
  return files;
}

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir);
  for (const auto& [name, content] : checkpoint_files(ckpt)) {
    write_file_atomic(dir / name, content);
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("checkpoint directory not found: " +
                             dir.string());
  }
  Checkpoint ckpt;
  ckpt.config = TrainConfig::from_config(parse_config_file(dir / "config.cfg"));
  ckpt.hierarchy = SenseHierarchy::load(dir / "hierarchy.tsv");
  ckpt.model.enc = EncoderParams::parse(read_file(dir / "encoder.txt"));
  ckpt.model.protos = PrototypeSet::parse(read_file(dir / "prototypes.txt"));
  ckpt.model.protos.check_matches(ckpt.hierarchy);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("template_", 0) == 0 &&
        entry.path().extension() == ".txt") {
      ckpt.templates.add(load_template(entry.path()));
    }
  }
  if (ckpt.templates.all().empty()) {
    throw std::runtime_error("checkpoint has no template files: " +
                             dir.string());
  }
  if (ckpt.model.enc.d_p() != ckpt.model.protos.dim()) {
    throw std::runtime_error(
        "checkpoint: encoder and prototype dimensions disagree");
  }
  return ckpt;
}

}  // namespace protoverb
