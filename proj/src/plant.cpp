#include "caai/plant.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "caai/errors.hpp"

namespace caai {

void validate_weights(std::span<const double> w) {
  if (w.empty()) throw ConstraintViolation("at least one weight is required");
  double sum = 0.0;
  for (double v : w) {
    if (!(v > 0.0)) throw ConstraintViolation("weights must be strictly positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConstraintViolation("weights must sum to 1");
}

PlantAdapter::PlantAdapter(Box bounds, std::vector<double> weights, std::size_t design_reps)
    : bounds_(std::move(bounds)), weights_(std::move(weights)), design_reps_(design_reps) {
  bounds_.validate();
  if (bounds_.dim() != 1) throw ConfigError("plants have exactly one setting");
  if (weights_.size() != kObjectives) throw ConstraintViolation("exactly three objective weights are required");
  validate_weights(weights_);
  if (design_reps_ == 0) throw ConfigError("design_reps must be positive");
}

double PlantAdapter::weighted(const Objectives& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kObjectives; ++i) s += weights_[i] * f[i];
  return s;
}

const ProductionCycleRecord& PlantAdapter::apply(double x) {
  const double p[] = {x};
  if (!bounds_.contains(p))
    throw OutOfBounds("setting " + std::to_string(x) + " outside [" + std::to_string(bounds_.lo[0]) + ", " +
                      std::to_string(bounds_.hi[0]) + "]");
  setting_ = x;
  ++applications_;
  return record(x);
}

const ProductionCycleRecord& PlantAdapter::produce() {
  if (!setting_) throw Error("the plant has no setting yet");
  return record(*setting_);
}

const ProductionCycleRecord& PlantAdapter::record(double x) {
  const Objectives f = run_cycle(x);
  for (double v : f)
    if (!std::isfinite(v)) throw Error("plant produced a non-finite objective");
  ProductionCycleRecord r;
  r.cycle = records_.size() + 1;
  r.x = x;
  r.f = f;
  r.aggregate = weighted(f);
  // One cycle takes the conveyor runtime (ms).
  clock_ += x / 1000.0;
  r.timestamp = clock_;
  records_.push_back(r);
  return records_.back();
}

std::vector<ProductionCycleRecord> PlantAdapter::receive_new_data(std::size_t since) const {
  if (since >= records_.size()) return {};
  return {records_.begin() + static_cast<std::ptrdiff_t>(since), records_.end()};
}

std::vector<SeedRow> load_seed_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read seed data '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw MalformedInput("seed data is empty");
  if (line.rfind("x,f1,f2,f3,rep", 0) != 0) throw MalformedInput("seed data header must be x,f1,f2,f3,rep");
  std::vector<SeedRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    SeedRow row{};
    char c1, c2, c3, c4;
    if (!(ls >> row.x >> c1 >> row.f[0] >> c2 >> row.f[1] >> c3 >> row.f[2] >> c4 >> row.rep) || c1 != ',' ||
        c2 != ',' || c3 != ',' || c4 != ',')
      throw MalformedInput("bad seed data row " + std::to_string(lineno));
    rows.push_back(row);
  }
  if (rows.size() < 2) throw MalformedInput("seed data needs at least two rows");
  return rows;
}

Dataset seed_dataset(std::span<const SeedRow> rows, const Box& bounds, std::span<const double> weights,
                     std::optional<std::size_t> objective) {
  Dataset d;
  d.bounds = bounds;
  for (const auto& r : rows) {
    double y = 0.0;
    if (objective) {
      y = r.f.at(*objective);
    } else {
      for (std::size_t i = 0; i < kObjectives; ++i) y += weights[i] * r.f[i];
    }
    d.append({r.x}, y);
  }
  return d;
}

std::filesystem::path default_seed_csv() {
  if (const char* dir = std::getenv("CAAI_DATA_DIR"); dir && *dir) return std::filesystem::path(dir) / "vps_seed.csv";
#ifdef CAAI_DATA_DIR
  return std::filesystem::path(CAAI_DATA_DIR) / "vps_seed.csv";
#else
  return "data/vps_seed.csv";
#endif
}

VpsSimulator::VpsSimulator(std::span<const SeedRow> seed_rows, const VpsSettings& settings)
    : PlantAdapter(settings.bounds, settings.weights, settings.design_reps),
      rows_(seed_rows.begin(), seed_rows.end()),
      settings_(settings),
      noise_rng_(derive_seed(settings.seed, hash_string("plant-noise"))) {
  if (!(settings_.noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  for (std::size_t i = 0; i < kObjectives; ++i) {
    const Dataset d = seed_dataset(rows_, settings_.bounds, settings_.weights, i);
    models_[i] = std::make_shared<const GPModel>(GPModel::fit(d, true));
  }
  build_curves();
}

void VpsSimulator::build_curves() {
  const auto grid = equidistant_grid(settings_.bounds.lo[0], settings_.bounds.hi[0], settings_.grid_size);
  for (std::size_t i = 0; i < kObjectives; ++i)
    curves_[i] = simulate_conditional(*models_[i], grid, derive_seed(settings_.seed, hash_string("vps-curve"), i, batch_));
}

void VpsSimulator::new_batch() {
  ++batch_;
  build_curves();
}

Objectives VpsSimulator::ground_truth(double x) const {
  Objectives f{};
  for (std::size_t i = 0; i < kObjectives; ++i) f[i] = curves_[i](x);
  return f;
}

double VpsSimulator::ground_truth_aggregate(double x) const { return weighted(ground_truth(x)); }

Realization VpsSimulator::aggregate_realization() const {
  Realization r;
  r.kind = RealizationKind::Conditional;
  r.seed = derive_seed(settings_.seed, hash_string("vps-curve"), batch_);
  r.grid = curves_[0].grid;
  r.values.resize(r.grid.size());
  for (std::size_t j = 0; j < r.grid.size(); ++j) r.values[j] = ground_truth_aggregate(r.grid[j]);
  return r;
}

Objectives VpsSimulator::run_cycle(double x) {
  Objectives f = ground_truth(x);
  if (settings_.noise_sd > 0.0)
    for (double& v : f) v += settings_.noise_sd * standard_normal(noise_rng_);
  return f;
}

ScriptedPlant::ScriptedPlant(Box bounds, std::vector<double> weights, std::vector<Objectives> script,
                             std::size_t design_reps)
    : PlantAdapter(std::move(bounds), std::move(weights), design_reps), script_(std::move(script)) {
  if (script_.empty()) throw ConfigError("a scripted plant needs at least one entry");
}

Objectives ScriptedPlant::run_cycle(double) {
  const Objectives f = script_[std::min(next_, script_.size() - 1)];
  ++next_;
  return f;
}

}  // namespace caai
