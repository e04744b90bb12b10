#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "protoverb/encoder.hpp"
#include "protoverb/io_util.hpp"
#include "protoverb/synth.hpp"

using namespace protoverb;

namespace {

std::set<std::string> surface_tokens(const std::vector<Instance>& instances) {
  std::set<std::string> out;
  for (const Instance& inst : instances) {
    for (const std::string& text : {inst.arg1, inst.arg2}) {
      std::string token;
      for (char c : text) {
        if (c == ' ') {
          if (!token.empty()) out.insert(token);
          token.clear();
        } else {
          token.push_back(c);
        }
      }
      if (!token.empty()) out.insert(token);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("deterministic under (spec, seed)") {
  SynthSpec spec;
  spec.roots = 3;
  spec.children_per_root = 2;
  spec.instances_per_leaf = 50;
  spec.noise_rate = 0.1;
  SynthOutput a = gen_synthetic(spec, 7);
  SynthOutput b = gen_synthetic(spec, 7);
  CHECK(corpus_to_jsonl(a.instances) == corpus_to_jsonl(b.instances));
  CHECK(a.hierarchy.to_text() == b.hierarchy.to_text());

  SynthOutput c = gen_synthetic(spec, 8);
  CHECK(corpus_to_jsonl(a.instances) != corpus_to_jsonl(c.instances));
}

TEST_CASE("hierarchy shape follows the spec") {
  SynthSpec spec;
  spec.roots = 3;
  spec.children_per_root = 2;
  SynthOutput out = gen_synthetic(spec, 1);
  CHECK(out.hierarchy.count_at(1) == 3);
  CHECK(out.hierarchy.count_at(2) == 6);
  CHECK(out.hierarchy.depth() == 2);
}

TEST_CASE("output passes corpus validation") {
  SynthSpec spec;
  SynthOutput out = gen_synthetic(spec, 42);
  auto parsed = parse_corpus(corpus_to_jsonl(out.instances), out.hierarchy);
  CHECK(parsed.size() == out.instances.size());
}

TEST_CASE("split sizes are 80/10/10 per leaf") {
  SynthSpec spec;
  spec.instances_per_leaf = 50;
  SynthOutput out = gen_synthetic(spec, 42);
  size_t train = 0, dev = 0, test = 0;
  for (const Instance& inst : out.instances) {
    if (inst.split == Split::kTrain) ++train;
    if (inst.split == Split::kDev) ++dev;
    if (inst.split == Split::kTest) ++test;
  }
  const size_t leaves = out.hierarchy.count_at(2);
  CHECK(train == 40 * leaves);
  CHECK(dev == 5 * leaves);
  CHECK(test == 5 * leaves);
}

TEST_CASE("zero noise keeps every token in the leaf signature") {
  SynthSpec spec;
  spec.roots = 2;
  spec.children_per_root = 2;
  spec.instances_per_leaf = 10;
  spec.noise_rate = 0.0;
  SynthOutput out = gen_synthetic(spec, 3);
  for (const Instance& inst : out.instances) {
    // With zero noise, arg tokens all carry the leaf's class index.
    auto chain = out.hierarchy.resolve_path(inst.sense_paths[0]);
    const auto& leaves = out.hierarchy.nodes_at(2);
    size_t leaf_index = 0;
    for (size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i] == chain.back()) leaf_index = i;
    }
    const std::string expected = "enc" + std::to_string(leaf_index) + "w";
    for (const std::string& token :
         surface_tokens(std::vector<Instance>{inst})) {
      CHECK(token.rfind(expected, 0) == 0);
    }
  }
}

TEST_CASE("two languages share structure with disjoint vocabularies") {
  SynthSpec spec;
  spec.roots = 2;
  spec.children_per_root = 2;
  spec.instances_per_leaf = 10;
  spec.languages = {"en", "de"};
  SynthOutput out = gen_synthetic(spec, 11);

  std::vector<Instance> en, de;
  for (const Instance& inst : out.instances) {
    (inst.language == "en" ? en : de).push_back(inst);
  }
  CHECK(en.size() == de.size());

  auto en_tokens = surface_tokens(en);
  auto de_tokens = surface_tokens(de);
  for (const std::string& t : en_tokens) {
    CHECK(de_tokens.count(t) == 0);
  }
  // Same class structure: identical sense path multiset.
  std::multiset<std::string> en_paths, de_paths;
  for (const Instance& i : en) en_paths.insert(i.sense_paths[0]);
  for (const Instance& i : de) de_paths.insert(i.sense_paths[0]);
  CHECK(en_paths == de_paths);
}

TEST_CASE("overlap mixes the confounder's vocabulary in") {
  SynthSpec spec;
  spec.roots = 2;
  spec.children_per_root = 2;
  spec.instances_per_leaf = 20;
  spec.noise_rate = 0.0;
  spec.overlap_from = "Cat0.Cat0Sub0";
  spec.overlap_to = "Cat1.Cat1Sub0";
  spec.overlap_rate = 0.5;
  SynthOutput out = gen_synthetic(spec, 5);

  size_t own = 0, borrowed = 0;
  for (const Instance& inst : out.instances) {
    if (inst.sense_paths[0] != "Cat0.Cat0Sub0") continue;
    for (const std::string& token :
         surface_tokens(std::vector<Instance>{inst})) {
      if (token.rfind("enc0w", 0) == 0) ++own;
      if (token.rfind("enc2w", 0) == 0) ++borrowed;  // Cat1Sub0 is leaf 2
    }
  }
  CHECK(own > 0);
  CHECK(borrowed > 0);
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  SUBCASE("noise rate at 1 is rejected") {
    spec.noise_rate = 1.0;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("noise rate"),
                         std::runtime_error);
  }
  SUBCASE("zero instances per leaf") {
    spec.instances_per_leaf = 0;
    CHECK_THROWS(spec.validate());
  }
  SUBCASE("config round-trip") {
    spec.roots = 4;
    spec.languages = {"en", "de"};
    spec.overlap_from = "Cat0.Cat0Sub0";
    spec.overlap_to = "Cat1.Cat1Sub1";
    spec.overlap_rate = 0.25;
    SynthSpec again = SynthSpec::from_config(parse_config_text(spec.to_text()));
    CHECK(again.roots == 4);
    CHECK(again.languages == spec.languages);
    CHECK(again.overlap_rate == 0.25);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS(SynthSpec::from_config({{"bogus", "1"}}));
  }
}
