#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "protoverb/corpus.hpp"
#include "support/fixtures.hpp"

using namespace protoverb;
using protoverb::testing::pdtb2_hierarchy;

namespace {

std::string record(const std::string& id, const std::string& senses,
                   const std::string& split = "train",
                   const std::string& lang = "en") {
  return "{\"id\":\"" + id +
         "\",\"arg1\":\"junk bonds recovered\",\"arg2\":\"gold rose\","
         "\"senses\":[" +
         senses + "],\"lang\":\"" + lang + "\",\"split\":\"" + split + "\"}\n";
}

Template basic_template() {
  return parse_template(
      "lang: en\n{L1_LABELS}. {L2_LABELS}. {ARG1} {MASK} {ARG2}");
}

}  // namespace

TEST_CASE("load single- and multi-label records") {
  SenseHierarchy h = pdtb2_hierarchy();
  std::string text =
      record("a", "\"Expansion.Conjunction\"") +
      record("b", "\"Expansion.Conjunction\",\"Temporal.Synchrony\"");
  auto instances = parse_corpus(text, h);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0].sense_paths.size() == 1);
  CHECK(instances[1].sense_paths.size() == 2);
}

TEST_CASE("corpus validation errors carry line numbers") {
  SenseHierarchy h = pdtb2_hierarchy();
  SUBCASE("empty senses") {
    CHECK_THROWS_WITH_AS(parse_corpus(record("a", ""), h),
                         doctest::Contains("line 1"), std::runtime_error);
  }
  SUBCASE("unresolvable path") {
    std::string text = record("a", "\"Expansion.Conjunction\"") +
                       record("b", "\"Expansion.Contrast\"");
    CHECK_THROWS_WITH_AS(parse_corpus(text, h), doctest::Contains("line 2"),
                         std::runtime_error);
  }
  SUBCASE("missing field") {
    CHECK_THROWS_WITH_AS(
        parse_corpus("{\"id\":\"a\",\"arg1\":\"x\",\"arg2\":\"y\","
                     "\"senses\":[\"Expansion\"],\"lang\":\"en\"}\n",
                     h),
        doctest::Contains("missing field 'split'"), std::runtime_error);
  }
  SUBCASE("empty argument") {
    CHECK_THROWS_WITH_AS(
        parse_corpus("{\"id\":\"a\",\"arg1\":\"\",\"arg2\":\"y\","
                     "\"senses\":[\"Expansion\"],\"lang\":\"en\","
                     "\"split\":\"train\"}\n",
                     h),
        doctest::Contains("empty argument"), std::runtime_error);
  }
  SUBCASE("duplicate sense path") {
    CHECK_THROWS(parse_corpus(
        record("a", "\"Expansion.Conjunction\",\"Expansion.Conjunction\""),
        h));
  }
  SUBCASE("duplicate id") {
    std::string text =
        record("a", "\"Expansion\"") + record("a", "\"Temporal\"");
    CHECK_THROWS_WITH_AS(parse_corpus(text, h),
                         doctest::Contains("duplicate instance id"),
                         std::runtime_error);
  }
  SUBCASE("bad split") {
    CHECK_THROWS(parse_corpus(record("a", "\"Expansion\"", "validation"), h));
  }
  SUBCASE("invalid json") {
    CHECK_THROWS_WITH_AS(parse_corpus("{oops\n", h),
                         doctest::Contains("line 1"), std::runtime_error);
  }
}

TEST_CASE("corpus jsonl round-trip") {
  SenseHierarchy h = pdtb2_hierarchy();
  std::string text =
      record("a", "\"Expansion.Conjunction\"") +
      record("b", "\"Expansion.Conjunction\",\"Temporal.Synchrony\"", "test");
  auto instances = parse_corpus(text, h);
  auto again = parse_corpus(corpus_to_jsonl(instances), h);
  REQUIRE(again.size() == instances.size());
  CHECK(again[1].sense_paths == instances[1].sense_paths);
  CHECK(again[1].split == Split::kTest);
  // Serialization is deterministic.
  CHECK(corpus_to_jsonl(instances) == corpus_to_jsonl(again));
}

TEST_CASE("expand_multilabel counts and order") {
  SenseHierarchy h = pdtb2_hierarchy();
  TemplateSet templates;
  templates.add(basic_template());

  SUBCASE("one instance with two paths -> two examples") {
    auto instances = parse_corpus(
        record("a", "\"Expansion.Conjunction\",\"Temporal.Synchrony\""), h);
    auto ex = expand_multilabel(instances, templates, h, true);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].path == "Expansion.Conjunction");
    CHECK(ex[1].path == "Temporal.Synchrony");
    CHECK(ex[0].instance_id == "a");
  }
  SUBCASE("three single-path instances -> three examples") {
    std::string text = record("a", "\"Expansion\"") +
                       record("b", "\"Temporal\"") +
                       record("c", "\"Comparison\"");
    auto ex = expand_multilabel(parse_corpus(text, h), templates, h, true);
    CHECK(ex.size() == 3);
  }
  SUBCASE("empty list -> empty list") {
    CHECK(expand_multilabel({}, templates, h, true).empty());
  }
  SUBCASE("total path count is preserved") {
    std::string text =
        record("a", "\"Expansion.Conjunction\",\"Temporal.Synchrony\"") +
        record("b", "\"Comparison\"") +
        record("c", "\"Contingency.Cause\",\"Expansion.List\"");
    auto instances = parse_corpus(text, h);
    size_t expected = 0;
    for (const auto& inst : instances) expected += inst.sense_paths.size();
    CHECK(expand_multilabel(instances, templates, h, true).size() == expected);
  }
}

TEST_CASE("render substitutes placeholders") {
  SenseHierarchy h = pdtb2_hierarchy();
  auto instances = parse_corpus(record("a", "\"Expansion.Conjunction\""), h);
  Template t = basic_template();

  RenderedPrompt with_labels = render(t, instances[0], h, true);
  CHECK(with_labels.text.rfind(
            "Comparison, Contingency, Expansion, Temporal. ", 0) == 0);
  CHECK(with_labels.text.find("Contrast, Concession, Cause") !=
        std::string::npos);
  CHECK(with_labels.text.find("junk bonds recovered") != std::string::npos);
  CHECK(with_labels.text.substr(with_labels.mask_offset, 6) == "[MASK]");

  RenderedPrompt no_labels = render(t, instances[0], h, false);
  CHECK(no_labels.text.rfind(". . junk bonds recovered", 0) == 0);
  CHECK(no_labels.text.find("Comparison") == std::string::npos);
  CHECK(no_labels.text.substr(no_labels.mask_offset, 6) == "[MASK]");
}

TEST_CASE("render is pure") {
  SenseHierarchy h = pdtb2_hierarchy();
  auto instances = parse_corpus(record("a", "\"Expansion\""), h);
  Template t = basic_template();
  RenderedPrompt p1 = render(t, instances[0], h, true);
  RenderedPrompt p2 = render(t, instances[0], h, true);
  CHECK(p1.text == p2.text);
  CHECK(p1.mask_offset == p2.mask_offset);
}

TEST_CASE("render rejects language mismatch") {
  SenseHierarchy h = pdtb2_hierarchy();
  auto instances =
      parse_corpus(record("a", "\"Expansion\"", "train", "de"), h);
  CHECK_THROWS_WITH_AS(render(basic_template(), instances[0], h, true),
                       doctest::Contains("language"), std::runtime_error);
}

TEST_CASE("template validation") {
  SUBCASE("missing mask fails at load") {
    CHECK_THROWS_WITH_AS(parse_template("lang: en\n{ARG1} {ARG2}"),
                         doctest::Contains("{MASK}"), std::runtime_error);
  }
  SUBCASE("duplicate placeholder") {
    CHECK_THROWS(parse_template("lang: en\n{ARG1} {MASK} {ARG1} {ARG2}"));
  }
  SUBCASE("missing lang header") {
    CHECK_THROWS(parse_template("{ARG1} {MASK} {ARG2}"));
  }
  SUBCASE("label slots are optional") {
    Template t = parse_template("lang: en\n{ARG1} {MASK} {ARG2}");
    CHECK(t.language == "en");
  }
  SUBCASE("round-trip") {
    Template t = basic_template();
    Template again = parse_template(template_to_text(t));
    CHECK(again.language == t.language);
    CHECK(again.pattern == t.pattern);
  }
}

TEST_CASE("template set lookup") {
  TemplateSet templates;
  templates.add(basic_template());
  CHECK(templates.has("en"));
  CHECK_FALSE(templates.has("tr"));
  CHECK(templates.for_language("en").language == "en");
  CHECK_THROWS_WITH_AS(templates.for_language("tr"),
                       doctest::Contains("no template"), std::runtime_error);
  CHECK_THROWS(templates.add(basic_template()));
}
