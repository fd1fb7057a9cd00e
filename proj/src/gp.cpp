#include "caai/gp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>

#include "caai/errors.hpp"
#include "caai/rng.hpp"

namespace caai {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
constexpr int kSearchGrid = 32;
constexpr int kNuggetGrid = 8;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return d2;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

// Cholesky with the jitter ladder; `scale` is the diagonal scale the jitter is
// relative to. Returns the jitter ratio that succeeded.
std::optional<double> cholesky_with_jitter(Eigen::MatrixXd& m, double scale, Eigen::LLT<Eigen::MatrixXd>& llt,
                                           double start = kJitterStart) {
  for (double j = start; j <= kJitterMax * 1.0000001; j *= 10.0) {
    Eigen::MatrixXd work = m;
    work.diagonal().array() += j * scale;
    llt.compute(work);
    if (llt.info() == Eigen::Success) {
      const auto& l = llt.matrixLLT();
      if ((l.diagonal().array() > 0.0).all() && l.allFinite()) {
        m = std::move(work);
        return j;
      }
    }
  }
  return std::nullopt;
}

// Likelihood terms for a fixed correlation structure R (unit signal
// variance); the signal variance enters in closed form.
struct Profile {
  double log_det_r;
  double quad;
  double mean;
  double ratio;  // nugget / signal variance
};

double profile_log_likelihood(const Profile& p, std::size_t n, double log_s2) {
  const double s2 = std::exp(log_s2);
  return -0.5 * (static_cast<double>(n) * (std::log(2.0 * std::numbers::pi) + log_s2) + p.log_det_r + p.quad / s2);
}

class ProfileBuilder {
 public:
  ProfileBuilder(const Dataset& data, bool noise) : data_(data), noise_(noise) {
    const std::size_t n = data.size();
    d2_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double d = squared_distance(data.X[i], data.X[j]);
        d2_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        d2_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
      }
    y_ = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(n));
  }

  std::optional<Profile> operator()(double log_l, double log_g) const {
    const double l = std::exp(log_l);
    Eigen::MatrixXd r = (-d2_.array() / (2.0 * l * l)).exp().matrix();
    Eigen::LLT<Eigen::MatrixXd> llt;
    double ratio;
    if (noise_) {
      ratio = std::exp(log_g);
      r.diagonal().array() += ratio;
      llt.compute(r);
      if (llt.info() != Eigen::Success) {
        auto j = cholesky_with_jitter(r, 1.0, llt);
        if (!j) return std::nullopt;
        ratio += *j;
      }
    } else {
      auto j = cholesky_with_jitter(r, 1.0, llt);
      if (!j) return std::nullopt;
      ratio = *j;
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y_.size());
    const Eigen::VectorXd r_inv_1 = llt.solve(ones);
    const Eigen::VectorXd r_inv_y = llt.solve(y_);
    const double denom = ones.dot(r_inv_1);
    if (!(denom > 0.0)) return std::nullopt;
    const double mean = ones.dot(r_inv_y) / denom;
    const Eigen::VectorXd resid = y_ - Eigen::VectorXd::Constant(y_.size(), mean);
    const double quad = resid.dot(llt.solve(resid));
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(quad) || !std::isfinite(log_det)) return std::nullopt;
    return Profile{log_det, std::max(quad, 0.0), mean, ratio};
  }

 private:
  const Dataset& data_;
  bool noise_;
  Eigen::MatrixXd d2_;
  Eigen::VectorXd y_;
};

}  // namespace

double Box::max_width() const {
  double w = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) w = std::max(w, width(i));
  return w;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  return true;
}

void Box::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw InvalidDataset("bounds must be non-empty and of equal length");
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(lo[i] < hi[i])) throw InvalidDataset("lower bound must be below upper bound");
}

Dataset Dataset::one_d(std::span<const double> xs, std::span<const double> ys, double lo, double hi) {
  Dataset d;
  d.bounds = Box::interval(lo, hi);
  d.X.reserve(xs.size());
  for (double x : xs) d.X.push_back({x});
  d.y.assign(ys.begin(), ys.end());
  return d;
}

bool Dataset::has_duplicate_inputs() const {
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (X[i] == X[j]) return true;
  return false;
}

void Dataset::validate(bool noise) const {
  bounds.validate();
  if (X.size() != y.size()) throw InvalidDataset("|X| != |y|");
  if (y.size() < 2) throw InvalidDataset("need at least two observations");
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != dim()) throw InvalidDataset("point dimension mismatch");
    if (!bounds.contains(X[i])) throw InvalidDataset("point outside declared bounds");
    if (!std::isfinite(y[i])) throw InvalidDataset("non-finite observation");
  }
  if (!noise) {
    for (std::size_t i = 0; i < X.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (X[i] == X[j] && y[i] != y[j])
          throw InvalidDataset("identical inputs with differing outputs require the noise model");
  }
}

void Dataset::append(Point x, double value) {
  X.push_back(std::move(x));
  y.push_back(value);
}

double se_covariance(std::span<const double> a, std::span<const double> b, double lengthscale,
                     double signal_variance) {
  return signal_variance * std::exp(-squared_distance(a, b) / (2.0 * lengthscale * lengthscale));
}

GPModel GPModel::fit(const Dataset& data, bool noise) {
  data.validate(noise);
  const std::size_t n = data.size();

  double mean_y = 0.0;
  for (double v : data.y) mean_y += v;
  mean_y /= static_cast<double>(n);
  double var_y = 0.0;
  double max_abs = 0.0;
  for (double v : data.y) {
    var_y += (v - mean_y) * (v - mean_y);
    max_abs = std::max(max_abs, std::abs(v));
  }
  var_y /= static_cast<double>(n - 1);
  const double var_floor = 1e-12 * std::max(1.0, max_abs * max_abs);
  const double var_ref = std::max(var_y, var_floor);

  const double width = data.bounds.max_width();
  const double l_lo = std::log(1e-3 * width), l_hi = std::log(2.0 * width);
  const double s_lo = std::log(1e-4 * var_ref), s_hi = std::log(4.0 * var_ref);
  const double g_lo = std::log(1e-6), g_hi = std::log(1.0);

  const ProfileBuilder profile(data, noise);
  const auto l_grid = log_grid(l_lo, l_hi, kSearchGrid);
  const auto s_grid = log_grid(s_lo, s_hi, kSearchGrid);
  const auto g_grid = noise ? log_grid(g_lo, g_hi, kNuggetGrid) : std::vector<double>{0.0};

  double best_ll = -std::numeric_limits<double>::infinity();
  double best_l = 0.0, best_s = 0.0, best_g = 0.0;
  for (double lg : g_grid) {
    for (double ll : l_grid) {
      const auto p = profile(ll, lg);
      if (!p) continue;
      for (double ls : s_grid) {
        const double v = profile_log_likelihood(*p, n, ls);
        if (v > best_ll) {
          best_ll = v;
          best_l = ll;
          best_s = ls;
          best_g = lg;
        }
      }
    }
  }
  if (!std::isfinite(best_ll)) throw SingularCovariance("no hyperparameter setting admits a decomposition");

  // Compass search refinement within the box.
  std::vector<double> x = {best_l, best_s, best_g};
  const std::vector<double> lo = {l_lo, s_lo, g_lo};
  const std::vector<double> hi = {l_hi, s_hi, g_hi};
  std::vector<double> step = {(l_hi - l_lo) / (kSearchGrid - 1), (s_hi - s_lo) / (kSearchGrid - 1),
                              (g_hi - g_lo) / (kNuggetGrid - 1)};
  const std::size_t axes = noise ? 3 : 2;
  const auto evaluate = [&](const std::vector<double>& p) {
    const auto prof = profile(p[0], p[2]);
    if (!prof) return -std::numeric_limits<double>::infinity();
    return profile_log_likelihood(*prof, n, p[1]);
  };
  const std::vector<double> min_step = {step[0] / 128.0, step[1] / 128.0, step[2] / 128.0};
  for (int iter = 0; iter < 200; ++iter) {
    bool improved = false;
    for (std::size_t a = 0; a < axes && !improved; ++a) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> trial = x;
        trial[a] = std::clamp(trial[a] + sign * step[a], lo[a], hi[a]);
        if (trial[a] == x[a]) continue;
        const double v = evaluate(trial);
        if (v > best_ll) {
          best_ll = v;
          x = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool done = true;
      for (std::size_t a = 0; a < axes; ++a) {
        step[a] *= 0.5;
        if (step[a] >= min_step[a]) done = false;
      }
      if (done) break;
    }
  }

  const auto prof = profile(x[0], x[2]);
  GPModel m;
  m.data_ = data;
  m.hp_.lengthscale = std::exp(x[0]);
  m.hp_.signal_variance = std::exp(x[1]);
  m.hp_.nugget = prof->ratio * m.hp_.signal_variance;
  m.factorize(prof->mean, false);
  return m;
}

GPModel GPModel::with_hyperparameters(const Dataset& data, GPHyperparameters hp) {
  GPModel m;
  data.validate(hp.nugget > 0.0);
  if (!(hp.lengthscale > 0.0) || !(hp.signal_variance > 0.0) || hp.nugget < 0.0)
    throw ConfigError("lengthscale and signal variance must be positive, nugget non-negative");
  m.data_ = data;
  m.hp_ = hp;
  m.factorize(0.0, true);
  return m;
}

GPModel GPModel::with_hyperparameters(const Dataset& data, GPHyperparameters hp, double prior_mean) {
  GPModel m;
  data.validate(hp.nugget > 0.0);
  if (!(hp.lengthscale > 0.0) || !(hp.signal_variance > 0.0) || hp.nugget < 0.0)
    throw ConfigError("lengthscale and signal variance must be positive, nugget non-negative");
  m.data_ = data;
  m.hp_ = hp;
  m.factorize(prior_mean, false);
  return m;
}

void GPModel::factorize(double prior_mean, bool estimate_mean) {
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = covariance(data_.X[static_cast<std::size_t>(i)], data_.X[static_cast<std::size_t>(j)]);
      k(i, j) = v;
      k(j, i) = v;
    }
  k.diagonal().array() += hp_.nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    auto j = cholesky_with_jitter(k, hp_.signal_variance, llt);
    if (!j) throw SingularCovariance("training covariance is not positive definite at maximum jitter");
    hp_.nugget += *j * hp_.signal_variance;
  }
  factor_ = llt.matrixL();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data_.y.data(), n);
  if (estimate_mean) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    mean_ = ones.dot(llt.solve(y)) / ones.dot(llt.solve(ones));
  } else {
    mean_ = prior_mean;
  }
  const Eigen::VectorXd resid = y - Eigen::VectorXd::Constant(n, mean_);
  alpha_ = llt.solve(resid);
  const double log_det = 2.0 * factor_.diagonal().array().log().sum();
  log_likelihood_ =
      -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det + resid.dot(alpha_));
}

double GPModel::covariance(std::span<const double> a, std::span<const double> b) const {
  return se_covariance(a, b, hp_.lengthscale, hp_.signal_variance);
}

Eigen::VectorXd GPModel::solve(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd w = factor_.triangularView<Eigen::Lower>().solve(v);
  return factor_.transpose().triangularView<Eigen::Upper>().solve(w);
}

double GPModel::predict_mean(std::span<const double> x) const {
  double m = mean_;
  for (std::size_t i = 0; i < data_.size(); ++i) m += covariance(x, data_.X[i]) * alpha_[static_cast<Eigen::Index>(i)];
  return m;
}

Prediction GPModel::predict(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = covariance(x, data_.X[static_cast<std::size_t>(i)]);
  const double mean = mean_ + k.dot(alpha_);
  const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>().solve(k);
  const double var = std::clamp(hp_.signal_variance - v.squaredNorm(), 0.0, hp_.signal_variance);
  return {mean, var};
}

std::size_t GPModel::factor_bytes() const {
  return static_cast<std::size_t>(factor_.size() + alpha_.size()) * sizeof(double);
}

double Realization::operator()(double x) const {
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(it - grid.begin());
  const double x0 = grid[i - 1], x1 = grid[i];
  if (x == x0) return values[i - 1];
  const double t = (x - x0) / (x1 - x0);
  return values[i - 1] + t * (values[i] - values[i - 1]);
}

void Realization::write_csv(std::ostream& os) const {
  os << "x,y\n" << std::setprecision(12);
  for (std::size_t i = 0; i < grid.size(); ++i) os << grid[i] << ',' << values[i] << '\n';
}

std::string to_string(SimulationMethod m) { return m == SimulationMethod::Spectral ? "spectral" : "decomposition"; }

SimulationMethod simulation_method_from_string(const std::string& s) {
  if (s == "spectral") return SimulationMethod::Spectral;
  if (s == "decomposition") return SimulationMethod::Decomposition;
  throw ConfigError("simulation method must be 'spectral' or 'decomposition', got '" + s + "'");
}

std::vector<double> equidistant_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo < hi)) throw ConfigError("grid needs n >= 2 and lo < hi");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

namespace {

void check_grid(const GPModel& model, std::span<const double> grid) {
  if (model.data().dim() != 1) throw InvalidDataset("simulation is implemented for one-dimensional inputs");
  if (grid.size() < 2) throw InvalidDataset("grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidDataset("grid must be strictly increasing");
}

Eigen::MatrixXd grid_factor(const GPModel& model, std::span<const double> grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double l = model.lengthscale();
  const double s2 = model.signal_variance();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d = grid[static_cast<std::size_t>(i)] - grid[static_cast<std::size_t>(j)];
      const double v = s2 * std::exp(-d * d / (2.0 * l * l));
      c(i, j) = v;
      c(j, i) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!cholesky_with_jitter(c, s2, llt))
    throw SingularCovariance("grid covariance is not positive definite at maximum jitter");
  return llt.matrixL();
}

std::vector<double> draw_decomposition(const GPModel& model, const Eigen::MatrixXd& factor, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = factor.rows();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = standard_normal(rng);
  const Eigen::VectorXd f = factor.triangularView<Eigen::Lower>() * z;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = model.prior_mean() + f[i];
  return out;
}

std::vector<double> draw_spectral(const GPModel& model, std::span<const double> grid, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = kSpectralFeatures;
  std::vector<double> omega(m), phase(m);
  for (std::size_t j = 0; j < m; ++j) {
    omega[j] = standard_normal(rng) / model.lengthscale();
    phase[j] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  const double amp = std::sqrt(2.0 * model.signal_variance() / static_cast<double>(m));
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::cos(omega[j] * grid[i] + phase[j]);
    out[i] = model.prior_mean() + amp * s;
  }
  return out;
}

}  // namespace

std::vector<Realization> simulate_unconditional(const GPModel& model, std::span<const double> grid,
                                                SimulationMethod method,
                                                std::span<const std::uint64_t> seeds) {
  check_grid(model, grid);
  std::vector<Realization> out;
  out.reserve(seeds.size());
  Eigen::MatrixXd factor;
  if (method == SimulationMethod::Decomposition && !seeds.empty()) factor = grid_factor(model, grid);
  for (std::uint64_t seed : seeds) {
    Realization r;
    r.kind = RealizationKind::Unconditional;
    r.grid.assign(grid.begin(), grid.end());
    r.seed = seed;
    r.values = method == SimulationMethod::Decomposition ? draw_decomposition(model, factor, seed)
                                                         : draw_spectral(model, grid, seed);
    out.push_back(std::move(r));
  }
  return out;
}

Realization simulate_unconditional(const GPModel& model, std::span<const double> grid, SimulationMethod method,
                                   std::uint64_t seed) {
  const std::uint64_t seeds[] = {seed};
  return std::move(simulate_unconditional(model, grid, method, seeds).front());
}

Realization simulate_conditional(const GPModel& model, std::span<const double> grid, std::uint64_t seed,
                                 SimulationMethod method) {
  check_grid(model, grid);
  const Dataset& data = model.data();

  // Merge training inputs into the grid; grid points closer than a tiny
  // tolerance snap onto the training input instead of duplicating it.
  std::vector<double> merged(grid.begin(), grid.end());
  const double snap = 1e-9 * (grid.back() - grid.front());
  for (const auto& p : data.X) {
    const double x = p[0];
    auto it = std::lower_bound(merged.begin(), merged.end(), x);
    if (it != merged.end() && std::abs(*it - x) <= snap) {
      *it = x;
    } else if (it != merged.begin() && std::abs(*(it - 1) - x) <= snap) {
      *(it - 1) = x;
    } else {
      merged.insert(it, x);
    }
  }

  Realization u = simulate_unconditional(model, merged, method, seed);

  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd fu_train(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = data.X[static_cast<std::size_t>(i)][0];
    const auto it = std::lower_bound(merged.begin(), merged.end(), x);
    fu_train[i] = u.values[static_cast<std::size_t>(it - merged.begin())] - model.prior_mean();
  }
  const Eigen::VectorXd alpha_u = model.solve(fu_train);

  Realization c;
  c.kind = RealizationKind::Conditional;
  c.seed = seed;
  c.grid = merged;
  c.values.resize(merged.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double x[] = {merged[i]};
    double mu_u = model.prior_mean();
    for (Eigen::Index k = 0; k < n; ++k) mu_u += model.covariance(x, data.X[static_cast<std::size_t>(k)]) * alpha_u[k];
    c.values[i] = u.values[i] + model.predict_mean(x) - mu_u;
  }
  return c;
}

}  // namespace caai
