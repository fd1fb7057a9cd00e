#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "caai/parameters.hpp"

namespace caai {

/// Outcome of one pipeline on one instance at one budget checkpoint, averaged
/// over repetitions unless `rep` is set.
struct EvaluationRecord {
  std::string pipeline;
  std::string instance;
  std::size_t budget = 0;
  std::optional<int> rep;
  double best_y = 0.0;
  double cpu_time = 0.0;
  double memory_bytes = 0.0;
  std::optional<double> rank;
  /// Weighted rating score, when the record has been rated.
  std::optional<double> aggregate;
  ParamMap tuned_params;
};

}  // namespace caai
