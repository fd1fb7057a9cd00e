#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "caai/errors.hpp"
#include "caai/knowledge.hpp"

using namespace caai;

namespace {

const char* kRandomForestDoc = R"(caai_kb_version: 1
Optimization:
  minimize:
    Minimum:
      Algorithms:
        Random Forest:
          parameter:
            NumberOfTrees:
              type: int
              default: 4
              min: 1
              max: 100
          metadata:
            Class: Surrogate
            Performance: -1
            Computational Effort: -1
            RAM usage: -1
            Min training data: 5
          input: preprocessed data
)";

std::string entry(const std::string& name, const std::string& cls, const std::string& input,
                  const std::string& extra = "") {
  return "        " + name + ":\n          metadata:\n            Class: " + cls + "\n" + extra +
         "          input: " + input + "\n";
}

std::string doc(const std::string& entries) {
  return "caai_kb_version: 1\nOptimization:\n  minimize:\n    Minimum:\n      Algorithms:\n" + entries;
}

GoalSpec min_goal() {
  GoalSpec g;
  g.signals = {"aggregate"};
  return g;
}

PipelineTemplate single(const std::string& name) { return PipelineTemplate{{name}}; }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("caai_test_" + name);
}

}  // namespace

TEST_CASE("load a full knowledge-base document") {
  const auto kb = parse_kb(kRandomForestDoc);
  const GoalPath path{"Optimization", "minimize", "Minimum"};
  const auto* e = kb.find(path, "Random Forest");
  REQUIRE(e != nullptr);
  CHECK(e->metadata.min_training_data == 5);
  CHECK_FALSE(e->metadata.performance.has_value());
  CHECK_FALSE(e->metadata.computational_effort.has_value());
  CHECK_FALSE(e->metadata.ram_usage.has_value());
  CHECK(e->metadata.algorithm_class == AlgorithmClass::Surrogate);
  CHECK(e->input == "preprocessed data");
  CHECK(e->output == kParameterProposal);
  CHECK(e->metadata.reach_aim == std::set<Aim>{Aim::OptimizationMin});
  REQUIRE(e->parameters.size() == 1);
  CHECK(e->parameters[0].name == "NumberOfTrees");
  CHECK(e->parameters[0].kind == ParameterKind::Integer);
  CHECK(std::get<double>(e->parameters[0].default_value) == 4);
}

TEST_CASE("schema and parse errors") {
  std::string bad_range = kRandomForestDoc;
  bad_range.replace(bad_range.find("min: 1"), 6, "min: 200");
  CHECK_THROWS_AS(parse_kb(bad_range), SchemaError);

  std::string bad_default = kRandomForestDoc;
  bad_default.replace(bad_default.find("default: 4"), 10, "default: 400");
  CHECK_THROWS_AS(parse_kb(bad_default), SchemaError);

  std::string bad_unit = kRandomForestDoc;
  bad_unit.replace(bad_unit.find("Performance: -1"), 15, "Performance: 1.5");
  CHECK_THROWS_AS(parse_kb(bad_unit), SchemaError);

  std::string bad_class = kRandomForestDoc;
  bad_class.replace(bad_class.find("Surrogate"), 9, "Oracle");
  CHECK_THROWS_AS(parse_kb(bad_class), SchemaError);

  std::string no_input = kRandomForestDoc;
  no_input.erase(no_input.find("          input:"));
  CHECK_THROWS_AS(parse_kb(no_input), SchemaError);

  std::string no_version = kRandomForestDoc;
  no_version.erase(0, no_version.find('\n') + 1);
  CHECK_THROWS_AS(parse_kb(no_version), SchemaError);

  CHECK_THROWS_AS(parse_kb("a: [1, 2\nb: }"), ParseError);
  CHECK_THROWS_AS(load_kb(temp_file("does_not_exist.yaml")), IOError);

  // Both document errors are configuration errors.
  CHECK_THROWS_AS(parse_kb("a: [1, 2\nb: }"), ConfigurationError);
}

TEST_CASE("compose pipelines") {
  const std::string pre = "          output: preprocessed data\n";
  SUBCASE("optimizer behind a preprocessor") {
    const auto kb = parse_kb(doc(entry("Opt", "Surrogate", "preprocessed data") +
                                 entry("Scale", "Preprocessing", "raw data", pre)));
    const auto ps = compose_pipelines(kb, min_goal());
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].stages == std::vector<std::string>{"Scale", "Opt"});
    CHECK(ps[0].terminal_input == kRawData);
    CHECK(ps[0].id() == "Scale+Opt");
  }
  SUBCASE("nothing consumes raw data") {
    const auto kb = parse_kb(kRandomForestDoc);
    CHECK(compose_pipelines(kb, min_goal()).empty());
  }
  SUBCASE("two optimizers share one preprocessor") {
    const auto kb = parse_kb(doc(entry("A", "Surrogate", "preprocessed data") +
                                 entry("B", "Population", "preprocessed data") +
                                 entry("Scale", "Preprocessing", "raw data", pre)));
    const auto ps = compose_pipelines(kb, min_goal());
    CHECK(ps.size() == 2);
    for (const auto& p : ps) {
      CHECK(p.stages.front() == "Scale");
      CHECK(p.terminal_input == kRawData);
    }
  }
  SUBCASE("unknown goal path") {
    GoalSpec g = min_goal();
    g.aggregation = Aggregation::Mean;
    CHECK_THROWS_AS(compose_pipelines(default_kb(), g), UnknownGoal);
  }
  SUBCASE("default portfolio") {
    const auto ps = compose_pipelines(default_kb(), min_goal());
    CHECK(ps.size() == 5);
    for (const auto& p : ps) CHECK(p.stages.size() == 1);
  }
}

TEST_CASE("feasibility filtering") {
  const auto kb = default_kb();
  const auto kriging = single("KrigingSBO");
  const std::vector<PipelineTemplate> ps{kriging};
  CHECK(determine_feasible(ps, kb, min_goal(), 3).empty());
  CHECK(determine_feasible(ps, kb, min_goal(), 7).size() == 1);

  const auto anomaly = parse_kb(doc(entry("Detector", "Baseline", "raw data",
                                           "            Reach aim: [anomaly-detection]\n")));
  const std::vector<PipelineTemplate> det{single("Detector")};
  CHECK(determine_feasible(det, anomaly, min_goal(), 100).empty());

  const auto discrete = parse_kb(doc(entry("Disc", "Baseline", "raw data", "            Input data: [discrete]\n")));
  const std::vector<PipelineTemplate> disc{single("Disc")};
  CHECK(determine_feasible(disc, discrete, min_goal(), 100).empty());
  CHECK(determine_feasible(disc, discrete, min_goal(), 100, DataType::Discrete).size() == 1);

  SUBCASE("monotone in the data size") {
    const auto all = compose_pipelines(kb, min_goal());
    for (std::size_t n = 0; n < 12; ++n) {
      const auto a = determine_feasible(all, kb, min_goal(), n);
      const auto b = determine_feasible(all, kb, min_goal(), n + 1);
      for (const auto& p : a) CHECK(std::find(b.begin(), b.end(), p) != b.end());
    }
  }
}

TEST_CASE("candidate selection") {
  KnowledgeBase kb = default_kb();
  const auto all = compose_pipelines(kb, min_goal());

  SUBCASE("truncation") {
    ResourceBudget r;
    r.max_parallel_pipelines = 2;
    const std::vector<PipelineTemplate> three(all.begin(), all.begin() + 3);
    CHECK(select_candidates(three, kb, r, {}).size() == 2);
  }
  SUBCASE("deadline") {
    ResourceBudget r;
    r.deadline = 20.0;
    EvaluationRecord old;
    old.pipeline = "DifferentialEvolution";
    old.cpu_time = 5.0;
    EvaluationRecord last = old;
    last.cpu_time = 30.0;
    const std::vector<EvaluationRecord> hist{old, last};
    const auto out = select_candidates(all, kb, r, hist);
    CHECK(out.size() == 4);
    for (const auto& p : out) CHECK(p.id() != "DifferentialEvolution");
  }
  SUBCASE("avoid and prefer") {
    for (auto& [path, entries] : kb.goals)
      for (auto& e : entries) {
        if (e.name == "HillClimber") e.metadata.avoid_usage = true;
        if (e.name == "KrigingSBO") e.metadata.prefer_usage = true;
      }
    const auto out = select_candidates(all, kb, ResourceBudget{}, {});
    CHECK(out.size() == 4);
    CHECK(out.front().id() == "KrigingSBO");
    for (const auto& p : out) CHECK(p.id() != "HillClimber");
  }
  SUBCASE("ordered by recorded effort") {
    kb = update_characteristics(kb, "RandomSearch", 0.5, 0.9, 0.5);
    kb = update_characteristics(kb, "GeneralizedSA", 0.5, 0.2, 0.5);
    const auto out = select_candidates(all, kb, ResourceBudget{}, {});
    REQUIRE(out.size() == 5);
    // Unrecorded entries keep their order and come first.
    CHECK(out[3].id() == "GeneralizedSA");
    CHECK(out[4].id() == "RandomSearch");
  }
  SUBCASE("output is a bounded subset") {
    for (std::size_t k = 1; k <= 6; ++k) {
      ResourceBudget r;
      r.max_parallel_pipelines = k;
      const auto out = select_candidates(all, kb, r, {});
      CHECK(out.size() <= k);
      for (const auto& p : out) CHECK(std::find(all.begin(), all.end(), p) != all.end());
    }
  }
}

TEST_CASE("characteristic updates and round trip") {
  const auto kb = default_kb();
  const auto updated = update_characteristics(kb, "KrigingSBO", 0.9, 0.4, 0.3);
  const auto* e = updated.find("KrigingSBO");
  REQUIRE(e != nullptr);
  CHECK(*e->metadata.performance == 0.9);
  CHECK(*e->metadata.computational_effort == 0.4);
  CHECK(*e->metadata.ram_usage == 0.3);
  CHECK(e->parameters == kb.find("KrigingSBO")->parameters);
  CHECK(e->metadata.min_training_data == kb.find("KrigingSBO")->metadata.min_training_data);
  CHECK_FALSE(kb.find("KrigingSBO")->metadata.performance.has_value());

  CHECK_THROWS_AS(update_characteristics(kb, "KrigingSBO", 1.2, 0.4, 0.3), RangeError);
  CHECK_THROWS_AS(update_characteristics(kb, "Nope", 0.1, 0.4, 0.3), UnknownAlgorithm);

  const auto path = temp_file("kb_roundtrip.yaml");
  save_kb(updated, path);
  CHECK(load_kb(path) == updated);
  CHECK(parse_kb(kb_to_yaml(kb)) == kb);
  CHECK(parse_kb(kb_to_yaml(parse_kb(kRandomForestDoc))) == parse_kb(kRandomForestDoc));
  // Awkward doubles survive the text form.
  const auto odd = update_characteristics(kb, "HillClimber", 0.1 + 0.2, 1.0 / 3.0, 2e-17);
  CHECK(parse_kb(kb_to_yaml(odd)) == odd);
  std::filesystem::remove(path);
}

TEST_CASE("default knowledge base") {
  const auto kb = default_kb();
  CHECK_NOTHROW(kb.validate());
  const auto* k = kb.find("KrigingSBO");
  REQUIRE(k != nullptr);
  const auto it = std::find_if(k->parameters.begin(), k->parameters.end(),
                               [](const ParameterSpec& p) { return p.name == "designSize"; });
  REQUIRE(it != k->parameters.end());
  CHECK(std::get<double>(it->default_value) == 7);
  GoalSpec max_goal = min_goal();
  max_goal.direction = Direction::Maximize;
  max_goal.aggregation = Aggregation::Max;
  CHECK(compose_pipelines(kb, max_goal).size() == 5);
}

TEST_CASE("goal spec") {
  GoalSpec g;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.signals = {"f1"};
  CHECK_NOTHROW(g.validate());
  CHECK(g.executable());
  CHECK(g.path().str() == "Optimization/minimize/Minimum");
  g.overall_goal = OverallGoal::AnomalyDetection;
  CHECK_FALSE(g.executable());
  CHECK(aggregation_from_string("Minimum") == Aggregation::Min);
  CHECK(aggregation_from_string("mean") == Aggregation::Mean);
  CHECK(direction_from_string("maximize") == Direction::Maximize);
  CHECK_THROWS_AS(direction_from_string("sideways"), SchemaError);
}
