#include "caai/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "caai/errors.hpp"
#include "caai/optimizers.hpp"

namespace caai {

namespace {

template <typename E, std::size_t N>
struct Names {
  std::pair<E, const char*> items[N];

  std::string name(E v) const {
    for (const auto& [e, s] : items)
      if (e == v) return s;
    return "?";
  }
  E parse(const std::string& s, const char* what) const {
    for (const auto& [e, n] : items)
      if (s == n) return e;
    throw SchemaError(std::string("unknown ") + what + " '" + s + "'");
  }
};

constexpr Names<OverallGoal, 4> kGoalNames{{{OverallGoal::Optimization, "Optimization"},
                                            {OverallGoal::AnomalyDetection, "AnomalyDetection"},
                                            {OverallGoal::ConditionMonitoring, "ConditionMonitoring"},
                                            {OverallGoal::PredictiveMaintenance, "PredictiveMaintenance"}}};
constexpr Names<Aggregation, 5> kAggregationNames{{{Aggregation::Mean, "mean"},
                                                   {Aggregation::Delta, "delta"},
                                                   {Aggregation::Min, "min"},
                                                   {Aggregation::Max, "max"},
                                                   {Aggregation::Value, "value"}}};
constexpr Names<Aggregation, 5> kFeatureNames{{{Aggregation::Mean, "Mean"},
                                               {Aggregation::Delta, "Delta"},
                                               {Aggregation::Min, "Minimum"},
                                               {Aggregation::Max, "Maximum"},
                                               {Aggregation::Value, "Value"}}};
constexpr Names<Direction, 2> kDirectionNames{{{Direction::Minimize, "minimize"}, {Direction::Maximize, "maximize"}}};
constexpr Names<DataType, 7> kDataTypeNames{{{DataType::Continuous, "continuous"},
                                             {DataType::Discrete, "discrete"},
                                             {DataType::Hybrid, "hybrid"},
                                             {DataType::TimedAutomata, "timed-automata"},
                                             {DataType::NeuralNet, "neural-net"},
                                             {DataType::Preprocessed, "preprocessed"},
                                             {DataType::Raw, "raw"}}};
constexpr Names<Aim, 5> kAimNames{{{Aim::OptimizationMin, "optimization-min"},
                                   {Aim::OptimizationMax, "optimization-max"},
                                   {Aim::ConditionMonitoring, "condition-monitoring"},
                                   {Aim::AnomalyDetection, "anomaly-detection"},
                                   {Aim::Diagnosis, "diagnosis"}}};
constexpr Names<AlgorithmClass, 6> kClassNames{{{AlgorithmClass::HillClimber, "HillClimber"},
                                                {AlgorithmClass::Trajectory, "Trajectory"},
                                                {AlgorithmClass::Population, "Population"},
                                                {AlgorithmClass::Surrogate, "Surrogate"},
                                                {AlgorithmClass::Baseline, "Baseline"},
                                                {AlgorithmClass::Preprocessing, "Preprocessing"}}};

constexpr const char* kVersionKey = "caai_kb_version";
constexpr const char* kAlgorithmsKey = "Algorithms";

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) throw SchemaError("missing or non-scalar field '" + what + "'");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError("field '" + what + "' has the wrong type");
  }
}

UnitValue parse_unit(const YAML::Node& n, const std::string& what) {
  if (!n) return std::nullopt;
  const double v = scalar<double>(n, what);
  if (v == -1.0) return std::nullopt;
  if (!(v >= 0.0 && v <= 1.0)) throw SchemaError("'" + what + "' must be -1 or within [0, 1]");
  return v;
}

template <typename E, std::size_t N>
std::set<E> parse_set(const YAML::Node& n, const Names<E, N>& names, const char* what) {
  std::set<E> out;
  if (n.IsScalar()) {
    out.insert(names.parse(n.as<std::string>(), what));
    return out;
  }
  if (!n.IsSequence()) throw SchemaError(std::string("'") + what + "' must be a list");
  for (const auto& item : n) out.insert(names.parse(item.as<std::string>(), what));
  return out;
}

ParameterSpec parse_parameter(const std::string& name, const YAML::Node& node) {
  if (!node.IsMap()) throw SchemaError("parameter '" + name + "' must be a mapping");
  ParameterSpec p;
  p.name = name;
  p.kind = parameter_kind_from_string(scalar<std::string>(node["type"], name + ".type"));
  if (p.kind == ParameterKind::Categorical) {
    const auto vals = node["values"];
    if (!vals || !vals.IsSequence()) throw SchemaError("categorical parameter '" + name + "' needs 'values'");
    for (const auto& v : vals) p.categories.push_back(v.as<std::string>());
    p.default_value = scalar<std::string>(node["default"], name + ".default");
  } else {
    p.min = scalar<double>(node["min"], name + ".min");
    p.max = scalar<double>(node["max"], name + ".max");
    p.default_value = scalar<double>(node["default"], name + ".default");
  }
  p.validate();
  return p;
}

Aim path_aim(const GoalPath& path) {
  return path.sub_goal == "maximize" ? Aim::OptimizationMax : Aim::OptimizationMin;
}

AlgorithmEntry parse_entry(const std::string& name, const YAML::Node& node, const GoalPath& path) {
  if (!node.IsMap()) throw SchemaError("algorithm '" + name + "' must be a mapping");
  AlgorithmEntry e;
  e.name = name;
  if (const auto params = node["parameter"]) {
    if (!params.IsMap() && !params.IsNull()) throw SchemaError("'parameter' of '" + name + "' must be a mapping");
    if (params.IsMap())
      for (const auto& kv : params) e.parameters.push_back(parse_parameter(kv.first.as<std::string>(), kv.second));
  }
  const auto md = node["metadata"];
  if (!md || !md.IsMap()) throw SchemaError("algorithm '" + name + "' lacks a metadata block");
  auto& m = e.metadata;
  m.algorithm_class = kClassNames.parse(scalar<std::string>(md["Class"], name + ".Class"), "algorithm class");
  if (md["Input data"]) m.input_data = parse_set(md["Input data"], kDataTypeNames, "input data type");
  if (md["Output data"]) m.output_data = parse_set(md["Output data"], kDataTypeNames, "output data type");
  if (md["Reach aim"]) {
    m.reach_aim = parse_set(md["Reach aim"], kAimNames, "aim");
  } else if (path.goal == "Optimization") {
    m.reach_aim = {path_aim(path)};
  }
  if (md["Use multithreads"]) m.use_multithreads = scalar<bool>(md["Use multithreads"], "Use multithreads");
  if (md["Prefer usage"]) m.prefer_usage = scalar<bool>(md["Prefer usage"], "Prefer usage");
  if (md["Avoid usage"]) m.avoid_usage = scalar<bool>(md["Avoid usage"], "Avoid usage");
  if (md["Min training data"]) {
    m.min_training_data = scalar<int>(md["Min training data"], "Min training data");
    if (m.min_training_data < 0) throw SchemaError("'Min training data' must be >= 0");
  }
  m.performance = parse_unit(md["Performance"], "Performance");
  m.computational_effort = parse_unit(md["Computational Effort"], "Computational Effort");
  m.ram_usage = parse_unit(md["RAM usage"], "RAM usage");

  e.input = scalar<std::string>(node["input"], name + ".input");
  if (e.input.empty()) throw SchemaError("algorithm '" + name + "' has an empty input");
  if (node["output"]) {
    e.output = scalar<std::string>(node["output"], name + ".output");
  } else {
    e.output = m.algorithm_class == AlgorithmClass::Preprocessing ? kPreprocessedData : kParameterProposal;
  }
  return e;
}

void emit_unit(YAML::Emitter& out, const char* key, const UnitValue& v) {
  out << YAML::Key << key << YAML::Value << (v ? format_double(*v) : std::string("-1"));
}

template <typename E, std::size_t N>
void emit_set(YAML::Emitter& out, const char* key, const std::set<E>& s, const Names<E, N>& names) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (E e : s) out << names.name(e);
  out << YAML::EndSeq;
}

}  // namespace

std::string to_string(OverallGoal v) { return kGoalNames.name(v); }
std::string to_string(Aggregation v) { return kAggregationNames.name(v); }
std::string to_string(Direction v) { return kDirectionNames.name(v); }
std::string to_string(DataType v) { return kDataTypeNames.name(v); }
std::string to_string(Aim v) { return kAimNames.name(v); }
std::string to_string(AlgorithmClass v) { return kClassNames.name(v); }
OverallGoal overall_goal_from_string(const std::string& s) { return kGoalNames.parse(s, "overall goal"); }
Aggregation aggregation_from_string(const std::string& s) {
  for (const auto& [e, n] : kFeatureNames.items)
    if (s == n) return e;
  return kAggregationNames.parse(s, "aggregation");
}
Direction direction_from_string(const std::string& s) { return kDirectionNames.parse(s, "direction"); }
DataType data_type_from_string(const std::string& s) { return kDataTypeNames.parse(s, "data type"); }
Aim aim_from_string(const std::string& s) { return kAimNames.parse(s, "aim"); }
AlgorithmClass algorithm_class_from_string(const std::string& s) { return kClassNames.parse(s, "algorithm class"); }

void GoalSpec::validate() const {
  if (signals.empty()) throw ConfigError("goal needs at least one signal");
}

GoalPath GoalSpec::path() const {
  return {kGoalNames.name(overall_goal), kDirectionNames.name(direction), kFeatureNames.name(aggregation)};
}

Aim GoalSpec::aim() const {
  switch (overall_goal) {
    case OverallGoal::Optimization:
      return direction == Direction::Maximize ? Aim::OptimizationMax : Aim::OptimizationMin;
    case OverallGoal::AnomalyDetection: return Aim::AnomalyDetection;
    case OverallGoal::ConditionMonitoring: return Aim::ConditionMonitoring;
    case OverallGoal::PredictiveMaintenance: return Aim::Diagnosis;
  }
  return Aim::OptimizationMin;
}

const std::vector<AlgorithmEntry>& KnowledgeBase::algorithms(const GoalPath& path) const {
  const auto it = goals.find(path);
  if (it == goals.end()) throw UnknownGoal(path.str());
  return it->second;
}

const AlgorithmEntry* KnowledgeBase::find(const GoalPath& path, const std::string& name) const {
  const auto it = goals.find(path);
  if (it == goals.end()) return nullptr;
  for (const auto& e : it->second)
    if (e.name == name) return &e;
  return nullptr;
}

const AlgorithmEntry* KnowledgeBase::find(const std::string& name) const {
  for (const auto& [path, entries] : goals)
    for (const auto& e : entries)
      if (e.name == name) return &e;
  return nullptr;
}

void KnowledgeBase::validate() const {
  for (const auto& [path, entries] : goals) {
    if (path.goal.empty() || path.sub_goal.empty() || path.feature.empty())
      throw SchemaError("goal path with an empty stage");
    for (const auto& e : entries) {
      if (e.input.empty()) throw SchemaError("algorithm '" + e.name + "' has an empty input");
      for (const auto& p : e.parameters) p.validate();
      if (e.metadata.min_training_data < 0) throw SchemaError("negative min training data");
      for (const auto* u : {&e.metadata.performance, &e.metadata.computational_effort, &e.metadata.ram_usage})
        if (*u && !(**u >= 0.0 && **u <= 1.0)) throw SchemaError("dynamic characteristic outside [0, 1]");
    }
  }
}

KnowledgeBase parse_kb(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.what());
  }
  if (!root.IsMap()) throw ParseError("knowledge base root must be a mapping");
  const auto version = root[kVersionKey];
  if (!version) throw SchemaError(std::string("missing '") + kVersionKey + "'");
  if (scalar<int>(version, kVersionKey) != KnowledgeBase::kVersion)
    throw SchemaError("unsupported knowledge base version");

  KnowledgeBase kb;
  for (const auto& goal : root) {
    const auto goal_name = goal.first.as<std::string>();
    if (goal_name == kVersionKey) continue;
    if (!goal.second.IsMap()) throw SchemaError("goal '" + goal_name + "' must be a mapping");
    for (const auto& sub : goal.second) {
      if (!sub.second.IsMap()) throw SchemaError("sub-goal under '" + goal_name + "' must be a mapping");
      for (const auto& feature : sub.second) {
        GoalPath path{goal_name, sub.first.as<std::string>(), feature.first.as<std::string>()};
        if (!feature.second.IsMap() || feature.second.size() != 1 || !feature.second[kAlgorithmsKey])
          throw SchemaError("'" + path.str() + "' must contain exactly an 'Algorithms' mapping");
        const auto algos = feature.second[kAlgorithmsKey];
        if (!algos.IsMap()) throw SchemaError("'Algorithms' under '" + path.str() + "' must be a mapping");
        auto& entries = kb.goals[path];
        for (const auto& a : algos) entries.push_back(parse_entry(a.first.as<std::string>(), a.second, path));
      }
    }
  }
  kb.validate();
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read knowledge base '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kb(ss.str());
}

std::string kb_to_yaml(const KnowledgeBase& kb) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << kVersionKey << YAML::Value << KnowledgeBase::kVersion;

  // Group paths by goal and sub-goal to nest the mapping.
  std::map<std::string, std::map<std::string, std::vector<const GoalPath*>>> tree;
  for (const auto& [path, entries] : kb.goals) tree[path.goal][path.sub_goal].push_back(&path);

  for (const auto& [goal, subs] : tree) {
    out << YAML::Key << goal << YAML::Value << YAML::BeginMap;
    for (const auto& [sub, paths] : subs) {
      out << YAML::Key << sub << YAML::Value << YAML::BeginMap;
      for (const GoalPath* p : paths) {
        out << YAML::Key << p->feature << YAML::Value << YAML::BeginMap;
        out << YAML::Key << kAlgorithmsKey << YAML::Value << YAML::BeginMap;
        for (const auto& e : kb.goals.at(*p)) {
          out << YAML::Key << e.name << YAML::Value << YAML::BeginMap;
          out << YAML::Key << "parameter" << YAML::Value << YAML::BeginMap;
          for (const auto& prm : e.parameters) {
            out << YAML::Key << prm.name << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "type" << YAML::Value << to_string(prm.kind);
            out << YAML::Key << "default" << YAML::Value;
            if (prm.kind == ParameterKind::Categorical) {
              out << std::get<std::string>(prm.default_value);
              out << YAML::Key << "values" << YAML::Value << YAML::Flow << prm.categories;
            } else {
              out << format_double(std::get<double>(prm.default_value));
              out << YAML::Key << "min" << YAML::Value << format_double(prm.min);
              out << YAML::Key << "max" << YAML::Value << format_double(prm.max);
            }
            out << YAML::EndMap;
          }
          out << YAML::EndMap;
          const auto& m = e.metadata;
          out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
          out << YAML::Key << "Class" << YAML::Value << kClassNames.name(m.algorithm_class);
          emit_set(out, "Input data", m.input_data, kDataTypeNames);
          emit_set(out, "Output data", m.output_data, kDataTypeNames);
          emit_set(out, "Reach aim", m.reach_aim, kAimNames);
          out << YAML::Key << "Use multithreads" << YAML::Value << m.use_multithreads;
          out << YAML::Key << "Min training data" << YAML::Value << m.min_training_data;
          out << YAML::Key << "Prefer usage" << YAML::Value << m.prefer_usage;
          out << YAML::Key << "Avoid usage" << YAML::Value << m.avoid_usage;
          emit_unit(out, "Performance", m.performance);
          emit_unit(out, "Computational Effort", m.computational_effort);
          emit_unit(out, "RAM usage", m.ram_usage);
          out << YAML::EndMap;
          out << YAML::Key << "input" << YAML::Value << e.input;
          out << YAML::Key << "output" << YAML::Value << e.output;
          out << YAML::EndMap;
        }
        out << YAML::EndMap << YAML::EndMap;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write knowledge base '" + path.string() + "'");
  out << kb_to_yaml(kb);
  if (!out) throw IOError("failed writing knowledge base '" + path.string() + "'");
}

std::string PipelineTemplate::id() const {
  std::string s;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) s += '+';
    s += stages[i];
  }
  return s;
}

std::vector<PipelineTemplate> compose_pipelines(const KnowledgeBase& kb, const GoalSpec& goal) {
  const auto& entries = kb.algorithms(goal.path());
  std::vector<PipelineTemplate> out;

  // Depth-first search backwards from each terminal optimizer; `chain` holds
  // stages in reverse execution order.
  std::vector<const AlgorithmEntry*> chain;
  std::function<void()> extend = [&] {
    const AlgorithmEntry* head = chain.back();
    if (head->input == kRawData) {
      PipelineTemplate p;
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) p.stages.push_back((*it)->name);
      out.push_back(std::move(p));
      return;
    }
    for (const auto& e : entries) {
      if (e.output != head->input) continue;
      if (std::find(chain.begin(), chain.end(), &e) != chain.end()) continue;
      chain.push_back(&e);
      extend();
      chain.pop_back();
    }
  };
  for (const auto& e : entries) {
    if (e.output != kParameterProposal) continue;
    chain = {&e};
    extend();
  }
  return out;
}

std::vector<PipelineTemplate> determine_feasible(std::span<const PipelineTemplate> pipelines,
                                                 const KnowledgeBase& kb, const GoalSpec& goal,
                                                 std::size_t data_size, DataType raw_type) {
  const GoalPath path = goal.path();
  const Aim aim = goal.aim();
  std::vector<PipelineTemplate> out;
  for (const auto& p : pipelines) {
    if (p.stages.empty() || p.terminal_input != kRawData) continue;
    bool ok = true;
    const AlgorithmEntry* prev = nullptr;
    for (const auto& name : p.stages) {
      const AlgorithmEntry* e = kb.find(path, name);
      if (e == nullptr) {
        ok = false;
        break;
      }
      const auto& m = e->metadata;
      ok = m.reach_aim.contains(aim) && data_size >= static_cast<std::size_t>(m.min_training_data);
      if (prev == nullptr) {
        ok = ok && e->input == kRawData && (m.input_data.contains(raw_type) || m.input_data.contains(DataType::Raw));
      } else {
        bool overlap = false;
        for (DataType t : prev->metadata.output_data) overlap = overlap || m.input_data.contains(t);
        ok = ok && e->input == prev->output && overlap;
      }
      if (!ok) break;
      prev = e;
    }
    if (ok && prev != nullptr && prev->output == kParameterProposal) out.push_back(p);
  }
  return out;
}

std::vector<PipelineTemplate> select_candidates(std::span<const PipelineTemplate> feasible,
                                                const KnowledgeBase& kb, const ResourceBudget& resources,
                                                std::span<const EvaluationRecord> history) {
  struct Ranked {
    PipelineTemplate p;
    bool preferred;
    std::optional<double> effort;
    std::size_t order;
  };
  std::vector<Ranked> kept;
  for (std::size_t idx = 0; idx < feasible.size(); ++idx) {
    const auto& p = feasible[idx];
    bool avoid = false, prefer = false;
    std::optional<double> effort = 0.0;
    for (const auto& s : p.stages) {
      const AlgorithmEntry* e = kb.find(s);
      if (e == nullptr) continue;
      avoid = avoid || e->metadata.avoid_usage;
      prefer = prefer || e->metadata.prefer_usage;
      if (effort && e->metadata.computational_effort)
        *effort += *e->metadata.computational_effort;
      else
        effort.reset();
    }
    if (avoid) continue;
    const std::string id = p.id();
    const EvaluationRecord* last = nullptr;
    for (const auto& r : history)
      if (r.pipeline == id) last = &r;
    if (last != nullptr && (last->cpu_time > resources.deadline || last->memory_bytes > resources.memory_cap))
      continue;
    kept.push_back({p, prefer, effort, idx});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Ranked& a, const Ranked& b) {
    if (a.preferred != b.preferred) return a.preferred;
    if (a.effort.has_value() != b.effort.has_value()) return !a.effort.has_value();
    if (a.effort && b.effort && *a.effort != *b.effort) return *a.effort < *b.effort;
    return a.order < b.order;
  });
  std::vector<PipelineTemplate> out;
  for (auto& k : kept) {
    if (out.size() >= resources.max_parallel_pipelines) break;
    out.push_back(std::move(k.p));
  }
  return out;
}

KnowledgeBase update_characteristics(const KnowledgeBase& kb, const std::string& algorithm, double performance,
                                     double effort, double ram) {
  for (double v : {performance, effort, ram})
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("dynamic characteristic must lie in [0, 1]");
  KnowledgeBase out = kb;
  bool found = false;
  for (auto& [path, entries] : out.goals)
    for (auto& e : entries)
      if (e.name == algorithm) {
        e.metadata.performance = performance;
        e.metadata.computational_effort = effort;
        e.metadata.ram_usage = ram;
        found = true;
      }
  if (!found) throw UnknownAlgorithm(algorithm);
  return out;
}

KnowledgeBase default_kb() {
  KnowledgeBase kb;
  const auto portfolio = [] {
    std::vector<AlgorithmEntry> entries;
    for (Algorithm a : kPortfolio) {
      AlgorithmEntry e;
      e.name = std::string(to_string(a));
      e.parameters = parameter_specs(a);
      auto& m = e.metadata;
      m.reach_aim = {Aim::OptimizationMin, Aim::OptimizationMax};
      switch (a) {
        case Algorithm::RandomSearch: m.algorithm_class = AlgorithmClass::Baseline; break;
        case Algorithm::HillClimber: m.algorithm_class = AlgorithmClass::HillClimber; break;
        case Algorithm::GeneralizedSA: m.algorithm_class = AlgorithmClass::Trajectory; break;
        case Algorithm::DifferentialEvolution: m.algorithm_class = AlgorithmClass::Population; break;
        case Algorithm::KrigingSBO:
          m.algorithm_class = AlgorithmClass::Surrogate;
          m.min_training_data = 5;
          break;
      }
      e.input = kRawData;
      e.output = kParameterProposal;
      entries.push_back(std::move(e));
    }
    return entries;
  };
  kb.goals[{"Optimization", "minimize", "Minimum"}] = portfolio();
  kb.goals[{"Optimization", "maximize", "Maximum"}] = portfolio();
  return kb;
}

}  // namespace caai
