#pragma once

// Plant adapters: the production process the cognition loop acts on, and the
// simulated popcorn plant whose objectives are conditional GP realizations.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "caai/gp.hpp"
#include "caai/rng.hpp"

namespace caai {

inline constexpr std::size_t kObjectives = 3;
using Objectives = std::array<double, kObjectives>;

/// Throws ConstraintViolation unless every weight is > 0 and they sum to 1
/// within 1e-9.
void validate_weights(std::span<const double> w);

struct ProductionCycleRecord {
  std::size_t cycle = 0;
  double x = 0.0;
  /// Energy consumption, processing time, corn amount (normalized).
  Objectives f{};
  double aggregate = 0.0;
  /// Simulated plant time in seconds at the end of the cycle.
  double timestamp = 0.0;
};

/// A production process with a single box-bounded setting. Every call to
/// apply() or produce() runs one production cycle and records it; cycle
/// indices start at 1.
class PlantAdapter {
 public:
  explicit PlantAdapter(Box bounds, std::vector<double> weights, std::size_t design_reps = 1);
  virtual ~PlantAdapter() = default;

  const Box& bounds() const { return bounds_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Cycles run per initial-design point during bootstrap.
  std::size_t design_reps() const { return design_reps_; }

  /// Changes the setting to `x` and runs one cycle. Throws OutOfBounds.
  const ProductionCycleRecord& apply(double x);
  /// Runs one cycle at the current setting.
  const ProductionCycleRecord& produce();

  /// Records with cycle index > since, in order.
  std::vector<ProductionCycleRecord> receive_new_data(std::size_t since) const;
  std::size_t latest_index() const { return records_.size(); }
  std::size_t applications() const { return applications_; }
  std::optional<double> setting() const { return setting_; }

  double weighted(const Objectives& f) const;

 protected:
  /// Objective values of the next cycle at setting x.
  virtual Objectives run_cycle(double x) = 0;

 private:
  const ProductionCycleRecord& record(double x);

  Box bounds_;
  std::vector<double> weights_;
  std::size_t design_reps_;
  std::optional<double> setting_;
  std::size_t applications_ = 0;
  double clock_ = 0.0;
  std::vector<ProductionCycleRecord> records_;
};

struct SeedRow {
  double x;
  Objectives f;
  int rep;
};

/// Reads the bundled seed dataset (columns x, f1, f2, f3, rep). Throws
/// IOError or MalformedInput.
std::vector<SeedRow> load_seed_csv(const std::filesystem::path& path);

/// Dataset of one objective column, or of the weighted aggregate when
/// `objective` is empty.
Dataset seed_dataset(std::span<const SeedRow> rows, const Box& bounds, std::span<const double> weights,
                     std::optional<std::size_t> objective = std::nullopt);

std::filesystem::path default_seed_csv();

struct VpsSettings {
  Box bounds = Box::interval(500.0, 7000.0);
  std::vector<double> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double noise_sd = 0.02;
  std::uint64_t seed = 1;
  std::size_t design_reps = 3;
  std::size_t grid_size = kDefaultGridSize;
};

/// Simulated popcorn plant. Each objective is a conditional GP realization of
/// its seed column; observations add Gaussian noise.
class VpsSimulator : public PlantAdapter {
 public:
  VpsSimulator(std::span<const SeedRow> seed_rows, const VpsSettings& settings);

  /// Noise-free objectives and aggregate of the current batch.
  Objectives ground_truth(double x) const;
  double ground_truth_aggregate(double x) const;
  /// The aggregate ground truth as one realization on the curves' grid.
  Realization aggregate_realization() const;
  const std::array<Realization, kObjectives>& curves() const { return curves_; }

  /// Starts a new batch: the ground-truth curves are redrawn.
  void new_batch();
  std::size_t batch() const { return batch_; }

 protected:
  Objectives run_cycle(double x) override;

 private:
  void build_curves();

  std::vector<SeedRow> rows_;
  VpsSettings settings_;
  std::array<std::shared_ptr<const GPModel>, kObjectives> models_;
  std::array<Realization, kObjectives> curves_;
  std::size_t batch_ = 0;
  Rng noise_rng_;
};

/// Replays a fixed sequence of objective triples, one per cycle, regardless of
/// the setting. Past the end the last triple repeats.
class ScriptedPlant : public PlantAdapter {
 public:
  ScriptedPlant(Box bounds, std::vector<double> weights, std::vector<Objectives> script,
                std::size_t design_reps = 1);

 protected:
  Objectives run_cycle(double x) override;

 private:
  std::vector<Objectives> script_;
  std::size_t next_ = 0;
};

}  // namespace caai
