#pragma once

// Tune-then-benchmark campaigns on GP simulation instances, rank tables, and
// the Pearson statistics used to compare ground truth against simulation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "caai/gp.hpp"
#include "caai/knowledge.hpp"
#include "caai/optimizers.hpp"
#include "caai/records.hpp"

namespace caai {

/// Source of the cpu_time field. The thread clock measures the run; modeled
/// work is deterministic and is what reproducible runs use.
enum class CpuMeter { ThreadClock, ModeledWork };

std::string to_string(CpuMeter m);
CpuMeter cpu_meter_from_string(const std::string& s);

struct TestInstanceSet {
  std::vector<Realization> instances;
  std::shared_ptr<const GPModel> source_model;
  std::uint64_t master_seed = 0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

/// Fits a GP to `data` and draws `k` unconditional realizations on an
/// equidistant grid over the data bounds, one derived seed each.
TestInstanceSet generate_test_functions(const Dataset& data, std::size_t k, SimulationMethod method,
                                        std::uint64_t master_seed, bool noise = true,
                                        std::size_t grid_size = kDefaultGridSize);

/// Minimization problem over a realization's domain.
OptProblem realization_problem(const Realization& r, std::size_t budget);

/// An executable pipeline. Only the terminal optimizer does work; stages in
/// front of it pass continuous data through unchanged.
struct CandidatePipeline {
  std::string id;
  Algorithm algorithm = Algorithm::RandomSearch;
  std::vector<ParameterSpec> config_space;

  static CandidatePipeline from_algorithm(Algorithm a);
  static CandidatePipeline from_template(const PipelineTemplate& t, const KnowledgeBase& kb, const GoalPath& path);
};

struct BenchmarkSettings {
  /// Number of configurations the tuner evaluates; 0 keeps the defaults.
  std::size_t tuning_budget = 5;
  /// Repetitions per configuration while tuning.
  std::size_t tuning_reps = 3;
  std::size_t bench_budget = 36;
  std::size_t reps = 10;
  std::vector<std::size_t> checkpoints{6, 12, 18, 24, 30, 36};
  CpuMeter cpu_meter = CpuMeter::ThreadClock;
  /// Worker threads; 1 runs everything on the calling thread.
  std::size_t threads = 1;

  void validate() const;
};

/// Seeded random search over the pipeline's parameter ranges; scores are the
/// mean best_y at bench_budget. A configuration the optimizer rejects scores
/// +inf.
OptimizerConfig tune(const CandidatePipeline& pipeline, const Realization& instance, const BenchmarkSettings& s,
                     std::uint64_t seed);

/// Runs `config` `reps` times on one instance and returns one record per
/// checkpoint, averaged over the repetitions.
std::vector<EvaluationRecord> benchmark_config(const std::string& pipeline_id, const OptimizerConfig& config,
                                               const Realization& instance, const std::string& instance_id,
                                               const BenchmarkSettings& s, std::uint64_t seed);

/// Indices of the tuning and benchmark instances; they depend on the seed and
/// |S| only, so every pipeline sees the same pair.
std::pair<std::size_t, std::size_t> draw_instance_pair(std::size_t n, std::uint64_t seed);

std::string instance_id(std::size_t index);

/// Tunes on one instance of S and benchmarks on a different one. Throws
/// InstanceSetTooSmall when |S| < 2.
std::vector<EvaluationRecord> tune_then_benchmark(const CandidatePipeline& pipeline, const TestInstanceSet& S,
                                                  const BenchmarkSettings& s, std::uint64_t seed);

enum class RankBy { BestY, Aggregate };

/// Ranks within each (instance, budget) group: 1 = smallest best_y (or largest
/// aggregate); ties share the mean of the covered ranks. Throws
/// DuplicatePipelineInGroup.
std::vector<EvaluationRecord> rank_algorithms(std::vector<EvaluationRecord> records, RankBy by = RankBy::BestY);

/// Mid-ranks of `values`, rank 1 for the smallest.
std::vector<double> mid_ranks(std::span<const double> values);

struct PearsonResult {
  double r = 0.0;
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  /// 95 % confidence interval from the Fisher transform.
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Throws DegenerateInput for mismatched lengths, n < 3, or zero variance.
PearsonResult pearson_correlation(std::span<const double> a, std::span<const double> b);
/// Statistics for a known coefficient and sample size.
PearsonResult pearson_from_r(double r, std::size_t n);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. The first
/// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// --- campaigns --------------------------------------------------------------

inline const std::string kGroundTruth = "ground_truth";
inline const std::string kSimulation = "simulation";

struct CampaignSettings {
  BenchmarkSettings bench;
  /// Benchmark instances per campaign; one extra instance is drawn for tuning.
  std::size_t k_instances = 5;
  SimulationMethod method = SimulationMethod::Decomposition;
  std::uint64_t master_seed = 1;
};

struct CampaignResult {
  std::string baseline;
  std::vector<CandidatePipeline> pipelines;
  std::map<std::string, OptimizerConfig> tuned;
  /// Ranked mean records on the ground truth, then on the simulation instances.
  std::vector<EvaluationRecord> ground_truth;
  std::vector<EvaluationRecord> simulation;
  /// Mean rank per (pipeline, budget) for each objective type.
  std::map<std::pair<std::string, std::size_t>, double> gt_ranks;
  std::map<std::pair<std::string, std::size_t>, double> sim_ranks;

  /// Pearson correlation over the (pipeline, budget) rank pairs.
  PearsonResult correlation() const;
};

/// Tunes every pipeline on a dedicated simulation instance, then benchmarks
/// the tuned configurations on the ground truth and on k further instances.
CampaignResult run_campaign(const Realization& ground_truth, const Dataset& data,
                            std::span<const CandidatePipeline> pipelines, const std::string& baseline,
                            const CampaignSettings& settings);

/// Mean rank per (pipeline, budget) across instances.
std::map<std::pair<std::string, std::size_t>, double> mean_ranks(std::span<const EvaluationRecord> ranked);

/// Columns: objective_type, pipeline, instance, budget, rep, best_y,
/// cpu_time, memory_bytes, rank, baseline.
void write_records_csv(std::ostream& os, const CampaignResult& c);
/// Means over instances per (objective_type, pipeline, budget).
void write_summary_csv(std::ostream& os, const CampaignResult& c);
/// Columns: pipeline, budget, rank.
void write_ranks_csv(std::ostream& os, const std::map<std::pair<std::string, std::size_t>, double>& ranks);

}  // namespace caai
