#pragma once

// Gaussian process regression over a bounded box with an isotropic
// squared-exponential kernel, plus conditional and unconditional simulation on
// one-dimensional grids.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace caai {

using Point = std::vector<double>;

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box interval(double lo, double hi) { return Box{{lo}, {hi}}; }

  std::size_t dim() const { return lo.size(); }
  double width(std::size_t i) const { return hi[i] - lo[i]; }
  double max_width() const;
  bool contains(std::span<const double> x) const;
  void validate() const;
};

struct Dataset {
  std::vector<Point> X;
  std::vector<double> y;
  Box bounds;

  static Dataset one_d(std::span<const double> xs, std::span<const double> ys, double lo, double hi);

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return bounds.dim(); }
  bool has_duplicate_inputs() const;
  /// Throws InvalidDataset. Duplicate inputs with differing outputs are only
  /// legal when a noise model will absorb them.
  void validate(bool noise) const;
  void append(Point x, double value);
};

struct Prediction {
  double mean;
  double variance;
};

struct GPHyperparameters {
  double lengthscale;
  double signal_variance;
  double nugget;
};

/// Squared-exponential covariance sigma2 * exp(-r^2 / (2 l^2)).
double se_covariance(std::span<const double> a, std::span<const double> b, double lengthscale,
                     double signal_variance);

class GPModel {
 public:
  /// Maximum-likelihood fit. The search runs a 32 x 32 log grid over
  /// (lengthscale, signal variance), an extra nugget axis when `noise` is set,
  /// and then one compass-search refinement pass.
  static GPModel fit(const Dataset& data, bool noise);

  /// Builds a model with fixed hyperparameters. `prior_mean` defaults to the
  /// generalized least squares estimate.
  static GPModel with_hyperparameters(const Dataset& data, GPHyperparameters hp);
  static GPModel with_hyperparameters(const Dataset& data, GPHyperparameters hp, double prior_mean);

  Prediction predict(std::span<const double> x) const;
  double predict_mean(std::span<const double> x) const;

  const Dataset& data() const { return data_; }
  double lengthscale() const { return hp_.lengthscale; }
  double signal_variance() const { return hp_.signal_variance; }
  double nugget() const { return hp_.nugget; }
  double prior_mean() const { return mean_; }
  double log_likelihood() const { return log_likelihood_; }
  GPHyperparameters hyperparameters() const { return hp_; }

  double covariance(std::span<const double> a, std::span<const double> b) const;

  /// Bytes held by the triangular factor and the weight vector.
  std::size_t factor_bytes() const;

  /// Solves K w = v with the stored factor (K includes the nugget).
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

 private:
  GPModel() = default;
  void factorize(double prior_mean, bool estimate_mean);

  Dataset data_;
  GPHyperparameters hp_{};
  double mean_ = 0.0;
  double log_likelihood_ = 0.0;
  Eigen::MatrixXd factor_;  // lower-triangular L with L L^T = K + nugget I
  Eigen::VectorXd alpha_;   // K^-1 (y - mean)
};

enum class SimulationMethod { Spectral, Decomposition };
enum class RealizationKind { Conditional, Unconditional };

std::string to_string(SimulationMethod m);
SimulationMethod simulation_method_from_string(const std::string& s);

inline constexpr std::size_t kDefaultGridSize = 512;
inline constexpr std::size_t kSpectralFeatures = 256;

/// A sampled GP path on a strictly increasing 1-D grid, evaluated between grid
/// points by linear interpolation and clamped to the end values outside.
struct Realization {
  RealizationKind kind = RealizationKind::Unconditional;
  std::vector<double> grid;
  std::vector<double> values;
  std::uint64_t seed = 0;

  double operator()(double x) const;
  double lo() const { return grid.front(); }
  double hi() const { return grid.back(); }
  void write_csv(std::ostream& os) const;
};

std::vector<double> equidistant_grid(double lo, double hi, std::size_t n = kDefaultGridSize);

Realization simulate_unconditional(const GPModel& model, std::span<const double> grid,
                                   SimulationMethod method, std::uint64_t seed);

/// Draws one unconditional realization per seed. The decomposition factor is
/// computed once and shared.
std::vector<Realization> simulate_unconditional(const GPModel& model, std::span<const double> grid,
                                                SimulationMethod method,
                                                std::span<const std::uint64_t> seeds);

/// Conditioning by kriging: f_c = f_u + m_data - m_u. The returned grid is
/// `grid` merged with the (unique) training inputs so that the training points
/// are represented exactly.
Realization simulate_conditional(const GPModel& model, std::span<const double> grid, std::uint64_t seed,
                                 SimulationMethod method = SimulationMethod::Decomposition);

}  // namespace caai
