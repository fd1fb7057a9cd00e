#pragma once

// Declarative goals, the algorithm knowledge base, and pipeline composition.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "caai/parameters.hpp"
#include "caai/records.hpp"

namespace caai {

enum class OverallGoal { Optimization, AnomalyDetection, ConditionMonitoring, PredictiveMaintenance };
enum class Aggregation { Mean, Delta, Min, Max, Value };
enum class Direction { Minimize, Maximize };

enum class DataType { Continuous, Discrete, Hybrid, TimedAutomata, NeuralNet, Preprocessed, Raw };
enum class Aim { OptimizationMin, OptimizationMax, ConditionMonitoring, AnomalyDetection, Diagnosis };
enum class AlgorithmClass { HillClimber, Trajectory, Population, Surrogate, Baseline, Preprocessing };

std::string to_string(OverallGoal v);
std::string to_string(Aggregation v);
std::string to_string(Direction v);
std::string to_string(DataType v);
std::string to_string(Aim v);
std::string to_string(AlgorithmClass v);
OverallGoal overall_goal_from_string(const std::string& s);
Aggregation aggregation_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);
DataType data_type_from_string(const std::string& s);
Aim aim_from_string(const std::string& s);
AlgorithmClass algorithm_class_from_string(const std::string& s);

inline const std::string kRawData = "raw data";
inline const std::string kParameterProposal = "parameter proposal";
inline const std::string kPreprocessedData = "preprocessed data";

/// Key of a goal subtree: overall goal / direction / aggregation feature.
struct GoalPath {
  std::string goal;
  std::string sub_goal;
  std::string feature;

  auto operator<=>(const GoalPath&) const = default;
  std::string str() const { return goal + "/" + sub_goal + "/" + feature; }
};

struct GoalSpec {
  OverallGoal overall_goal = OverallGoal::Optimization;
  std::vector<std::string> signals;
  Aggregation aggregation = Aggregation::Min;
  Direction direction = Direction::Minimize;

  void validate() const;
  /// Only optimization goals can be executed.
  bool executable() const { return overall_goal == OverallGoal::Optimization; }
  GoalPath path() const;
  /// Aim an algorithm must cover to serve this goal.
  Aim aim() const;
};

/// A dynamic characteristic: unset (serialized as -1) or within [0, 1].
using UnitValue = std::optional<double>;

struct AlgorithmCharacteristics {
  std::set<DataType> input_data{DataType::Continuous};
  std::set<DataType> output_data{DataType::Continuous};
  std::set<Aim> reach_aim;
  AlgorithmClass algorithm_class = AlgorithmClass::Baseline;
  bool use_multithreads = false;
  int min_training_data = 0;
  bool prefer_usage = false;
  bool avoid_usage = false;
  UnitValue performance;
  UnitValue computational_effort;
  UnitValue ram_usage;

  bool operator==(const AlgorithmCharacteristics&) const = default;
};

struct AlgorithmEntry {
  std::string name;
  std::vector<ParameterSpec> parameters;
  AlgorithmCharacteristics metadata;
  std::string input;
  std::string output;

  bool operator==(const AlgorithmEntry&) const = default;
};

class KnowledgeBase {
 public:
  static constexpr int kVersion = 1;

  std::map<GoalPath, std::vector<AlgorithmEntry>> goals;

  const std::vector<AlgorithmEntry>& algorithms(const GoalPath& path) const;
  const AlgorithmEntry* find(const GoalPath& path, const std::string& name) const;
  /// First entry with this name in any goal subtree.
  const AlgorithmEntry* find(const std::string& name) const;
  void validate() const;

  bool operator==(const KnowledgeBase&) const = default;
};

/// Stages in execution order: stages.front() consumes raw data and
/// stages.back() produces the parameter proposal.
struct PipelineTemplate {
  std::vector<std::string> stages;
  std::string terminal_input = kRawData;

  std::string id() const;
  const std::string& terminal_algorithm() const { return stages.back(); }
  bool operator==(const PipelineTemplate&) const = default;
};

struct ResourceBudget {
  std::size_t max_parallel_pipelines = 8;
  double deadline = std::numeric_limits<double>::infinity();
  double memory_cap = std::numeric_limits<double>::infinity();
};

KnowledgeBase load_kb(const std::filesystem::path& path);
KnowledgeBase parse_kb(const std::string& yaml_text);
std::string kb_to_yaml(const KnowledgeBase& kb);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

/// All stage chains for the goal that end in a parameter proposal and start at
/// raw data. Throws UnknownGoal.
std::vector<PipelineTemplate> compose_pipelines(const KnowledgeBase& kb, const GoalSpec& goal);

/// Hard criteria: aim coverage, data-type compatibility, and minimum training
/// data. `raw_type` is the data type of the process data.
std::vector<PipelineTemplate> determine_feasible(std::span<const PipelineTemplate> pipelines,
                                                 const KnowledgeBase& kb, const GoalSpec& goal,
                                                 std::size_t data_size,
                                                 DataType raw_type = DataType::Continuous);

/// Soft criteria and resource limits: drops avoided pipelines and those whose
/// latest record broke the deadline or memory cap, orders preferred pipelines
/// first and then by ascending recorded effort (unrecorded first), and
/// truncates to the parallelism limit.
std::vector<PipelineTemplate> select_candidates(std::span<const PipelineTemplate> feasible,
                                                const KnowledgeBase& kb, const ResourceBudget& resources,
                                                std::span<const EvaluationRecord> history);

/// Returns a copy with the dynamic characteristics of every entry named
/// `algorithm` replaced. Throws UnknownAlgorithm or RangeError.
KnowledgeBase update_characteristics(const KnowledgeBase& kb, const std::string& algorithm, double performance,
                                     double effort, double ram);

/// Knowledge base with the five-algorithm portfolio under
/// Optimization/minimize/Minimum and Optimization/maximize/Maximum.
KnowledgeBase default_kb();

}  // namespace caai
