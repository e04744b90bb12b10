#include "protoverb/synth.hpp"

#include <stdexcept>

#include "protoverb/io_util.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

SynthSpec SynthSpec::from_config(
    const std::map<std::string, std::string>& kv) {
  SynthSpec spec;
  for (const auto& [key, value] : kv) {
    if (key == "roots") {
      spec.roots = static_cast<int>(parse_long(value, key));
    } else if (key == "children_per_root") {
      spec.children_per_root = static_cast<int>(parse_long(value, key));
    } else if (key == "level3_per_child") {
      spec.level3_per_child = static_cast<int>(parse_long(value, key));
    } else if (key == "vocab_per_leaf") {
      spec.vocab_per_leaf = static_cast<int>(parse_long(value, key));
    } else if (key == "instances_per_leaf") {
      spec.instances_per_leaf = static_cast<int>(parse_long(value, key));
    } else if (key == "tokens_per_arg") {
      spec.tokens_per_arg = static_cast<int>(parse_long(value, key));
    } else if (key == "noise_vocab") {
      spec.noise_vocab = static_cast<int>(parse_long(value, key));
    } else if (key == "noise_rate") {
      spec.noise_rate = parse_double(value);
    } else if (key == "languages") {
      spec.languages.clear();
      for (const std::string& lang : split(value, ',')) {
        std::string tag = trim(lang);
        if (!tag.empty()) spec.languages.push_back(tag);
      }
    } else if (key == "overlap_from") {
      spec.overlap_from = value;
    } else if (key == "overlap_to") {
      spec.overlap_to = value;
    } else if (key == "overlap_rate") {
      spec.overlap_rate = parse_double(value);
    } else {
      throw std::runtime_error("synth spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

void SynthSpec::validate() const {
  if (roots < 1) throw std::runtime_error("synth spec: roots must be >= 1");
  if (children_per_root < 0 || level3_per_child < 0) {
    throw std::runtime_error("synth spec: negative branching");
  }
  if (level3_per_child > 0 && children_per_root == 0) {
    throw std::runtime_error("synth spec: level 3 requires level 2");
  }
  if (vocab_per_leaf < 1) {
    throw std::runtime_error("synth spec: vocab_per_leaf must be >= 1");
  }
  if (instances_per_leaf < 1) {
    throw std::runtime_error("synth spec: zero instances per leaf");
  }
  if (tokens_per_arg < 1) {
    throw std::runtime_error("synth spec: tokens_per_arg must be >= 1");
  }
  if (noise_vocab < 1) {
    throw std::runtime_error("synth spec: noise_vocab must be >= 1");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
    throw std::runtime_error("synth spec: noise rate must be in [0, 1)");
  }
  if (!(overlap_rate >= 0.0 && overlap_rate < 1.0)) {
    throw std::runtime_error("synth spec: overlap rate must be in [0, 1)");
  }
  if (overlap_from.empty() != overlap_to.empty()) {
    throw std::runtime_error(
        "synth spec: overlap_from and overlap_to come as a pair");
  }
  if (languages.empty()) {
    throw std::runtime_error("synth spec: at least one language");
  }
}

std::string SynthSpec::to_text() const {
  std::string out;
  out += "roots = " + std::to_string(roots) + "\n";
  out += "children_per_root = " + std::to_string(children_per_root) + "\n";
  out += "level3_per_child = " + std::to_string(level3_per_child) + "\n";
  out += "vocab_per_leaf = " + std::to_string(vocab_per_leaf) + "\n";
  out += "instances_per_leaf = " + std::to_string(instances_per_leaf) + "\n";
  out += "tokens_per_arg = " + std::to_string(tokens_per_arg) + "\n";
  out += "noise_vocab = " + std::to_string(noise_vocab) + "\n";
  out += "noise_rate = " + format_double(noise_rate) + "\n";
  std::string langs;
  for (const std::string& lang : languages) {
    if (!langs.empty()) langs += ",";
    langs += lang;
  }
  out += "languages = " + langs + "\n";
  if (!overlap_from.empty()) {
    out += "overlap_from = " + overlap_from + "\n";
    out += "overlap_to = " + overlap_to + "\n";
    out += "overlap_rate = " + format_double(overlap_rate) + "\n";
  }
  return out;
}

namespace {

std::string build_hierarchy_text(const SynthSpec& spec) {
  std::string text;
  for (int r = 0; r < spec.roots; ++r) {
    const std::string root = "Cat" + std::to_string(r);
    text += "1\t" + root + "\t\n";
    for (int c = 0; c < spec.children_per_root; ++c) {
      const std::string child = root + "Sub" + std::to_string(c);
      text += "2\t" + child + "\t" + root + "\n";
      for (int g = 0; g < spec.level3_per_child; ++g) {
        const std::string leaf = child + "Leaf" + std::to_string(g);
        text += "3\t" + leaf + "\t" + root + "." + child + "\n";
      }
    }
  }
  return text;
}

// Leaves = deepest-level nodes, hierarchy order.
std::vector<NodeId> leaves_of(const SenseHierarchy& h) {
  return h.nodes_at(h.depth());
}

std::string signature_token(const std::string& lang, size_t leaf_index,
                            int token) {
  return lang + "c" + std::to_string(leaf_index) + "w" + std::to_string(token);
}

std::string noise_token(const std::string& lang, int token) {
  return lang + "noise" + std::to_string(token);
}

}  // namespace

SynthOutput gen_synthetic(const SynthSpec& spec, uint64_t seed) {
  spec.validate();
  SynthOutput out;
  out.hierarchy = SenseHierarchy::parse(build_hierarchy_text(spec));
  const SenseHierarchy& h = out.hierarchy;

  const std::vector<NodeId> leaves = leaves_of(h);
  size_t overlap_from_idx = leaves.size();
  size_t overlap_to_idx = leaves.size();
  if (!spec.overlap_from.empty()) {
    auto find_leaf = [&](const std::string& path) -> size_t {
      auto chain = h.resolve_path(path);
      for (size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i] == chain.back()) return i;
      }
      throw std::runtime_error("synth spec: '" + path + "' is not a leaf");
    };
    overlap_from_idx = find_leaf(spec.overlap_from);
    overlap_to_idx = find_leaf(spec.overlap_to);
    if (overlap_from_idx == overlap_to_idx) {
      throw std::runtime_error("synth spec: overlap pair must be distinct");
    }
  }

  const int n = spec.instances_per_leaf;
  const int n_train = (n * 8) / 10;
  const int n_dev = n / 10;

  Rng rng(seed);
  for (const std::string& lang : spec.languages) {
    for (size_t li = 0; li < leaves.size(); ++li) {
      const std::string path = h.render_path(leaves[li]);
      std::string path_tag = path;
      for (char& ch : path_tag) {
        if (ch == '.') ch = '-';
      }
      for (int i = 0; i < n; ++i) {
        Instance inst;
        inst.id = lang + "-" + path_tag + "-" + std::to_string(i);
        inst.language = lang;
        inst.sense_paths = {path};
        inst.split = i < n_train           ? Split::kTrain
                     : i < n_train + n_dev ? Split::kDev
                                           : Split::kTest;
        auto gen_arg = [&]() {
          std::string arg;
          for (int t = 0; t < spec.tokens_per_arg; ++t) {
            if (t > 0) arg.push_back(' ');
            if (rng.uniform() < spec.noise_rate) {
              arg += noise_token(
                  lang, static_cast<int>(rng.bounded(
                            static_cast<uint64_t>(spec.noise_vocab))));
              continue;
            }
            size_t source_leaf = li;
            if (li == overlap_from_idx && rng.uniform() < spec.overlap_rate) {
              source_leaf = overlap_to_idx;
            }
            arg += signature_token(
                lang, source_leaf,
                static_cast<int>(
                    rng.bounded(static_cast<uint64_t>(spec.vocab_per_leaf))));
          }
          return arg;
        };
        inst.arg1 = gen_arg();
        inst.arg2 = gen_arg();
        out.instances.push_back(std::move(inst));
      }
    }
  }
  return out;
}

Template default_template(const std::string& language) {
  Template t;
  t.language = language;
  t.pattern = "{L1_LABELS}. {L2_LABELS}. {ARG1} {MASK} {ARG2}";
  return t;
}

}  // namespace protoverb
