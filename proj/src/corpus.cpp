#include "protoverb/corpus.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "protoverb/io_util.hpp"

namespace protoverb {

using nlohmann::json;

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "dev") return Split::kDev;
  if (text == "test") return Split::kTest;
  throw std::runtime_error("unknown split '" + text +
                           "' (expected train, dev or test)");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

namespace {

const char* const kPlaceholders[] = {"{L1_LABELS}", "{L2_LABELS}", "{ARG1}",
                                     "{ARG2}", "{MASK}"};

size_t count_occurrences(std::string_view text, std::string_view needle) {
  size_t count = 0;
  size_t pos = text.find(needle);
  while (pos != std::string_view::npos) {
    ++count;
    pos = text.find(needle, pos + needle.size());
  }
  return count;
}

void validate_pattern(const std::string& pattern) {
  for (const char* ph : kPlaceholders) {
    size_t n = count_occurrences(pattern, ph);
    if (n > 1) {
      throw std::runtime_error("template: placeholder " + std::string(ph) +
                               " appears " + std::to_string(n) +
                               " times, expected at most once");
    }
  }
  for (const char* ph : {"{MASK}", "{ARG1}", "{ARG2}"}) {
    if (count_occurrences(pattern, ph) == 0) {
      throw std::runtime_error("template: missing required placeholder " +
                               std::string(ph));
    }
  }
}

std::string label_inventory(const SenseHierarchy& h, int level) {
  if (!h.has_level(level)) return "";
  std::string out;
  for (NodeId id : h.nodes_at(level)) {
    if (!out.empty()) out += ", ";
    out += h.node(id).name;
  }
  return out;
}

std::string get_string_field(const json& rec, const char* field, int lineno) {
  if (!rec.contains(field)) {
    throw std::runtime_error("corpus line " + std::to_string(lineno) +
                             ": missing field '" + field + "'");
  }
  if (!rec[field].is_string()) {
    throw std::runtime_error("corpus line " + std::to_string(lineno) +
                             ": field '" + field + "' must be a string");
  }
  return rec[field].get<std::string>();
}

}  // namespace

Template parse_template(std::string_view text) {
  size_t eol = text.find('\n');
  std::string first(eol == std::string_view::npos ? text : text.substr(0, eol));
  if (!first.empty() && first.back() == '\r') first.pop_back();
  const std::string prefix = "lang:";
  std::string head = trim(first);
  if (head.compare(0, prefix.size(), prefix) != 0) {
    throw std::runtime_error("template: first line must be 'lang: <tag>'");
  }
  Template t;
  t.language = trim(head.substr(prefix.size()));
  if (t.language.empty()) {
    throw std::runtime_error("template: empty language tag");
  }
  t.pattern = eol == std::string_view::npos ? std::string()
                                            : std::string(text.substr(eol + 1));
  if (!t.pattern.empty() && t.pattern.back() == '\n') t.pattern.pop_back();
  validate_pattern(t.pattern);
  return t;
}

Template load_template(const std::filesystem::path& path) {
  try {
    return parse_template(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string template_to_text(const Template& t) {
  return "lang: " + t.language + "\n" + t.pattern + "\n";
}

void TemplateSet::add(Template t) {
  if (templates_.count(t.language)) {
    throw std::runtime_error("duplicate template for language '" + t.language +
                             "'");
  }
  templates_.emplace(t.language, std::move(t));
}

bool TemplateSet::has(const std::string& language) const {
  return templates_.count(language) > 0;
}

const Template& TemplateSet::for_language(const std::string& language) const {
  auto it = templates_.find(language);
  if (it == templates_.end()) {
    throw std::runtime_error("no template registered for language '" +
                             language + "'");
  }
  return it->second;
}

std::vector<Instance> parse_corpus(std::string_view text,
                                   const SenseHierarchy& h) {
  std::vector<Instance> out;
  std::set<std::string> seen_ids;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty()) continue;

    json rec;
    try {
      rec = json::parse(stripped);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": invalid JSON: " + e.what());
    }
    Instance inst;
    inst.id = get_string_field(rec, "id", lineno);
    inst.arg1 = get_string_field(rec, "arg1", lineno);
    inst.arg2 = get_string_field(rec, "arg2", lineno);
    inst.language = get_string_field(rec, "lang", lineno);
    inst.split = parse_split(get_string_field(rec, "split", lineno));

    if (inst.id.empty()) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": empty id");
    }
    if (!seen_ids.insert(inst.id).second) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": duplicate instance id '" + inst.id + "'");
    }
    if (trim(inst.arg1).empty() || trim(inst.arg2).empty()) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": empty argument text");
    }
    if (inst.language.empty()) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": empty lang");
    }
    if (!rec.contains("senses") || !rec["senses"].is_array() ||
        rec["senses"].empty()) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": 'senses' must be a non-empty array");
    }
    std::set<std::string> distinct;
    for (const auto& s : rec["senses"]) {
      if (!s.is_string()) {
        throw std::runtime_error("corpus line " + std::to_string(lineno) +
                                 ": sense paths must be strings");
      }
      std::string path = s.get<std::string>();
      try {
        h.resolve_path(path);
      } catch (const std::exception& e) {
        throw std::runtime_error("corpus line " + std::to_string(lineno) +
                                 ": " + e.what());
      }
      if (!distinct.insert(path).second) {
        throw std::runtime_error("corpus line " + std::to_string(lineno) +
                                 ": duplicate sense path '" + path + "'");
      }
      inst.sense_paths.push_back(std::move(path));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> load_corpus(const std::filesystem::path& path,
                                  const SenseHierarchy& h) {
  return parse_corpus(read_file(path), h);
}

std::string corpus_to_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const Instance& inst : instances) {
    json rec;
    rec["id"] = inst.id;
    rec["arg1"] = inst.arg1;
    rec["arg2"] = inst.arg2;
    rec["senses"] = inst.sense_paths;
    rec["lang"] = inst.language;
    rec["split"] = split_name(inst.split);
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<const Instance*> instances_in_split(
    const std::vector<Instance>& instances, Split split) {
  std::vector<const Instance*> out;
  for (const Instance& inst : instances) {
    if (inst.split == split) out.push_back(&inst);
  }
  return out;
}

RenderedPrompt render(const Template& t, const Instance& inst,
                      const SenseHierarchy& h, bool include_label_info) {
  if (t.language != inst.language) {
    throw std::runtime_error("template language '" + t.language +
                             "' does not match instance language '" +
                             inst.language + "' (instance " + inst.id + ")");
  }
  const std::string l1 = include_label_info ? label_inventory(h, 1) : "";
  const std::string l2 = include_label_info ? label_inventory(h, 2) : "";

  RenderedPrompt out;
  bool mask_seen = false;
  const std::string& p = t.pattern;
  size_t pos = 0;
  while (pos < p.size()) {
    size_t open = p.find('{', pos);
    if (open == std::string::npos) {
      out.text.append(p, pos, std::string::npos);
      break;
    }
    out.text.append(p, pos, open - pos);
    size_t close = p.find('}', open);
    if (close == std::string::npos) {
      out.text.append(p, open, std::string::npos);
      break;
    }
    std::string name = p.substr(open + 1, close - open - 1);
    if (name == "L1_LABELS") {
      out.text += l1;
    } else if (name == "L2_LABELS") {
      out.text += l2;
    } else if (name == "ARG1") {
      out.text += inst.arg1;
    } else if (name == "ARG2") {
      out.text += inst.arg2;
    } else if (name == "MASK") {
      out.mask_offset = out.text.size();
      out.text += "[MASK]";
      mask_seen = true;
    } else {
      // Unknown brace groups are ordinary text.
      out.text.append(p, open, close - open + 1);
    }
    pos = close + 1;
  }
  if (!mask_seen) {
    throw std::runtime_error("template pattern lost its {MASK} placeholder");
  }
  return out;
}

std::vector<TrainingExample> expand_multilabel(
    const std::vector<Instance>& instances, const TemplateSet& templates,
    const SenseHierarchy& h, bool include_label_info) {
  std::vector<TrainingExample> out;
  for (const Instance& inst : instances) {
    const Template& t = templates.for_language(inst.language);
    RenderedPrompt prompt = render(t, inst, h, include_label_info);
    for (const std::string& path : inst.sense_paths) {
      TrainingExample ex;
      ex.instance_id = inst.id;
      ex.path = path;
      ex.prompt = prompt;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace protoverb
