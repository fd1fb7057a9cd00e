#pragma once

// The optimizer portfolio. Every algorithm minimizes a box-bounded black-box
// objective under a hard evaluation budget and is deterministic for a seed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "caai/gp.hpp"
#include "caai/parameters.hpp"
#include "caai/rng.hpp"

namespace caai {

enum class Algorithm { RandomSearch, HillClimber, GeneralizedSA, DifferentialEvolution, KrigingSBO };

inline constexpr Algorithm kPortfolio[] = {Algorithm::RandomSearch, Algorithm::HillClimber,
                                           Algorithm::GeneralizedSA, Algorithm::DifferentialEvolution,
                                           Algorithm::KrigingSBO};

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

using Objective = std::function<double(std::span<const double>)>;

struct OptProblem {
  Objective objective;
  Box bounds;
  std::size_t budget = 1;

  std::size_t dim() const { return bounds.dim(); }
  void validate() const;
};

struct OptResult {
  Point best_x;
  double best_y = 0.0;
  /// Best-so-far objective after each evaluation.
  std::vector<double> trace;
  std::size_t evals_used = 0;
  /// Peak tracked bytes after each evaluation.
  std::vector<std::size_t> memory_trace;
  /// Thread CPU seconds since the run started, after each evaluation.
  std::vector<double> cpu_trace;
  /// Modeled work units (roughly flops) after each evaluation.
  std::vector<double> work_trace;
  /// Evaluation counts at which the hill climber restarted.
  std::vector<std::size_t> restarts;
};

/// Wraps the objective, enforces bounds and budget, and keeps the best-so-far
/// trace together with the deterministic resource accounting.
class Evaluator {
 public:
  explicit Evaluator(const OptProblem& problem);

  /// Throws OutOfBounds or BudgetExceeded.
  double operator()(std::span<const double> x);

  std::size_t used() const { return used_; }
  std::size_t remaining() const { return budget_ - used_; }
  bool exhausted() const { return used_ >= budget_; }
  const Box& bounds() const { return problem_.bounds; }
  std::size_t dim() const { return problem_.dim(); }
  double best_y() const { return result_.best_y; }
  const Point& best_x() const { return result_.best_x; }

  /// Declares the currently live optimizer state; the peak is tracked.
  void set_state_bytes(std::size_t bytes);
  void add_work(double units) { work_ += units; }
  void mark_restart() { result_.restarts.push_back(used_); }

  OptResult finish() &&;

 private:
  const OptProblem& problem_;
  std::size_t budget_;
  std::size_t used_ = 0;
  std::size_t state_bytes_ = 0;
  std::size_t peak_bytes_ = 0;
  double work_ = 0.0;
  double cpu_start_ = 0.0;
  OptResult result_;
};

/// Thread CPU time in seconds.
double thread_cpu_seconds();

/// Work units charged for one objective evaluation.
inline constexpr double kEvaluationWork = 64.0;
/// Conversion of modeled work units to seconds.
inline constexpr double kWorkUnitsPerSecond = 1e9;

OptResult random_search(const OptProblem& problem, std::uint64_t seed);

struct HillClimberOptions {
  int lmm = 5;
  /// Overrides the first starting point; restarts still draw uniformly.
  std::optional<Point> initial;
};
OptResult hill_climber(const OptProblem& problem, std::uint64_t seed, const HillClimberOptions& opts = {});

struct GenSAOptions {
  double temp = 100.0;
  double qv = 2.5;
  double qa = -1.0;
  /// Called with (current energy, new energy) for every accepted move.
  std::function<void(double, double)> on_accept;
};
OptResult generalized_sa(const OptProblem& problem, std::uint64_t seed, const GenSAOptions& opts = {});

/// Generalized acceptance probability for a move that changes the energy by
/// `delta` at acceptance temperature `t`.
double gsa_acceptance_probability(double delta, double t, double qa);
/// Visiting temperature after `step` steps (step >= 1).
double gsa_temperature(double temp, double qv, double step);

struct DEOptions {
  int popsize = 5;
  int strategy = 2;
  double F = 0.8;
  double CR = 0.5;
  double c = 0.5;
};
OptResult differential_evolution(const OptProblem& problem, std::uint64_t seed, const DEOptions& opts = {});

enum class DesignType { Lhd, Uniform };

struct KrigingOptions {
  int design_size = 7;
  DesignType design_type = DesignType::Lhd;
  std::size_t candidates = 2048;
};
OptResult kriging_sbo(const OptProblem& problem, std::uint64_t seed, const KrigingOptions& opts = {});

/// Seeded Latin hypercube sample of `n` points: one per equal-width stratum in
/// every dimension.
std::vector<Point> latin_hypercube(std::size_t n, const Box& bounds, Rng& rng);

double expected_improvement(double mean, double variance, double best);

/// Algorithm plus validated parameter values.
struct OptimizerConfig {
  Algorithm algorithm = Algorithm::RandomSearch;
  ParamMap params;

  /// Table defaults for the algorithm.
  static OptimizerConfig defaults(Algorithm a);
  /// Fills unspecified parameters with defaults and checks ranges. Throws
  /// ConfigError for unknown names and RangeError for bad values.
  OptimizerConfig completed() const;

  double number(const std::string& name) const;
  const std::string& category(const std::string& name) const;

  bool operator==(const OptimizerConfig&) const = default;
};

/// Parameter specs (ranges and defaults) of the portfolio.
std::vector<ParameterSpec> parameter_specs(Algorithm a);

OptResult run_optimizer(const OptimizerConfig& config, const OptProblem& problem, std::uint64_t seed);

}  // namespace caai
