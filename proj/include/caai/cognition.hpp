#pragma once

// The closed selection loop: initial design, periodic and stagnation-triggered
// selection cycles, best-parameter extraction and guarded application to the
// plant.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "caai/benchmark.hpp"
#include "caai/knowledge.hpp"
#include "caai/plant.hpp"
#include "caai/rating.hpp"

namespace caai {

enum class DesignKind { FullFactorial, Lhs };

std::string to_string(DesignKind k);
DesignKind design_kind_from_string(const std::string& s);

struct CognitionConfig {
  std::size_t s = 12;
  std::size_t theta = 10;
  /// Application threshold in parameter units; unset means 1 % of the range.
  std::optional<double> epsilon;
  RatingWeights weights;
  std::size_t k_instances = 5;
  std::size_t tuning_budget = 5;
  std::size_t tuning_reps = 3;
  std::size_t bench_budget = 36;
  std::size_t reps = 10;
  double stagnation_delta = 0.01;
  std::uint64_t master_seed = 1;

  DesignKind design = DesignKind::FullFactorial;
  GoalSpec goal{OverallGoal::Optimization, {"f1", "f2", "f3"}, Aggregation::Min, Direction::Minimize};
  std::string baseline = "RandomSearch";
  ResourceBudget resources;
  CpuMeter cpu_meter = CpuMeter::ModeledWork;
  SimulationMethod method = SimulationMethod::Decomposition;
  std::size_t threads = 1;

  /// Throws ConfigError or ConstraintViolation.
  void validate() const;
  double epsilon_for(const Box& bounds) const;
  BenchmarkSettings bench_settings() const;
};

struct CognitionState {
  /// Production cycles as (x, aggregate objective).
  Dataset d;
  double x = 0.0;
  std::vector<EvaluationRecord> e;
  int zeta = 0;
  std::size_t iteration = 0;
  std::optional<std::string> p_best;
  std::optional<OptimizerConfig> p_best_config;
  /// Best aggregate so far after each step.
  std::vector<double> best_history;
  /// Best aggregate of the data before the first step.
  double initial_best = 0.0;
  std::optional<std::size_t> last_selection;
  /// Highest plant cycle index already in d.
  std::size_t cycles_seen = 0;
  bool bootstrapped = false;
};

/// full_factorial in 1-D: s equidistant points over [lo, hi]. In d > 1 the
/// largest grid with at most s points, filled up with seeded uniform points.
/// lhs: seeded Latin hypercube. Throws ConfigError for s < 2.
std::vector<Point> create_initial_design(std::size_t s, const Box& bounds, DesignKind kind, std::uint64_t seed);

/// Loads d and x from `history` when it is non-empty; otherwise applies every
/// design point design_reps() times. Returns the cycles recorded by the plant.
std::vector<ProductionCycleRecord> bootstrap(CognitionState& state, PlantAdapter& plant, const CognitionConfig& cfg,
                                             const std::vector<ProductionCycleRecord>& history = {});

struct SelectionSummary {
  std::size_t iteration = 0;
  /// Latest plant cycle the selection could see.
  std::size_t after_cycle = 0;
  std::vector<std::string> candidates;
  std::vector<EvaluationRecord> records;
  RatingResult rating;
};

struct StepReport {
  std::size_t iteration = 0;
  bool selection_ran = false;
  std::optional<SelectionSummary> selection;
  Point x_best;
  bool applied = false;
  std::vector<ProductionCycleRecord> cycles;
  /// Aggregate of the step's last cycle.
  double objective = 0.0;
  int zeta = 0;
  std::optional<std::string> p_best;
};

/// One loop iteration. The state and knowledge base are only modified when
/// the whole step succeeds.
StepReport step(CognitionState& state, PlantAdapter& plant, KnowledgeBase& kb, const CognitionConfig& cfg);

/// Minimizes the posterior mean of a GP fitted to `d` with the given
/// optimizer; returns x_current when there is no optimizer or it fails.
Point get_best_x(const std::optional<OptimizerConfig>& p_best, const Dataset& d, const Point& x_current,
                 std::size_t budget, std::uint64_t seed);

// --- run log ----------------------------------------------------------------

/// JSON lines: one object per production cycle and one per selection cycle.
class RunLogWriter {
 public:
  explicit RunLogWriter(std::ostream& os) : os_(os) {}

  void bootstrap(const std::vector<ProductionCycleRecord>& cycles);
  void step(const StepReport& r);

 private:
  void cycle(const ProductionCycleRecord& c, const StepReport* r);

  std::ostream& os_;
};

}  // namespace caai
