#pragma once

// Baseline-filtered, weighted, min-max normalized rating of benchmarked
// pipelines.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caai/records.hpp"

namespace caai {

struct RatingWeights {
  double objective = 0.8;
  double memory = 0.1;
  double cpu = 0.1;

  /// Throws ConstraintViolation unless all > 0 and the sum is 1 (1e-9).
  void validate() const;
};

struct RatingRow {
  std::string pipeline;
  double improvement = 0.0;
  double mem_ratio = 0.0;
  double cpu_ratio = 0.0;
  double norm_obj = 0.0;
  double norm_mem = 0.0;
  double norm_cpu = 0.0;
  double aggregate = 0.0;
  /// Survivors only.
  std::optional<int> rank;
  bool survivor = false;
};

struct RatingTable {
  /// Survivors by rank, then eliminated pipelines by id.
  std::vector<RatingRow> rows;
  std::vector<std::string> survivors;
  std::vector<std::string> eliminated;

  const RatingRow* find(const std::string& pipeline) const;
};

struct KbUpdate {
  std::string algorithm;
  double performance = 0.0;
  double effort = 0.0;
  double ram = 0.0;
};

struct RatingResult {
  RatingTable table;
  std::optional<std::string> p_best;
  std::vector<KbUpdate> kb_updates;
};

/// Terminal algorithm of a pipeline id ("Scale+KrigingSBO" -> "KrigingSBO").
std::string terminal_of(const std::string& pipeline_id);

/// Improvement over the baseline and resource ratios are computed per
/// (instance, budget) group and averaged per pipeline; pipelines without a
/// positive mean improvement are eliminated; the survivors are min-max
/// normalized (best 1, worst 0, a lone or tied survivor 1), aggregated with
/// `w`, and ranked. Equal aggregates go to the smaller cpu ratio, then the
/// smaller memory ratio, then the id. Throws MissingBaseline.
RatingResult rate_pipelines(std::span<const EvaluationRecord> records, const std::string& baseline_id,
                            const RatingWeights& w);

/// Weighted sum of already normalized signals. Throws ConstraintViolation.
double aggregate_goal_value(std::span<const double> normalized, std::span<const double> weights);

/// Min-max normalization of `value` against an observed history; a flat
/// history maps to 0.
double normalize_signal(double value, std::span<const double> history);

/// Columns: pipeline, improvement, mem_ratio, cpu_ratio, norm_obj, norm_mem,
/// norm_cpu, aggregate, rank, status.
void write_rating_csv(std::ostream& os, const RatingTable& t);

}  // namespace caai
