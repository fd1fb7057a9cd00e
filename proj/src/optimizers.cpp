#include "caai/optimizers.hpp"

#include <time.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>

#include "caai/errors.hpp"

namespace caai {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Point uniform_point(const Box& b, Rng& rng) {
  Point x(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) x[i] = uniform(rng, b.lo[i], b.hi[i]);
  return x;
}

std::size_t doubles(std::size_t n) { return n * sizeof(double); }

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::RandomSearch: return "RandomSearch";
    case Algorithm::HillClimber: return "HillClimber";
    case Algorithm::GeneralizedSA: return "GeneralizedSA";
    case Algorithm::DifferentialEvolution: return "DifferentialEvolution";
    case Algorithm::KrigingSBO: return "KrigingSBO";
  }
  return "RandomSearch";
}

Algorithm algorithm_from_string(std::string_view s) {
  for (Algorithm a : kPortfolio)
    if (to_string(a) == s) return a;
  throw UnknownAlgorithm(std::string(s));
}

void OptProblem::validate() const {
  if (!objective) throw ConfigError("problem has no objective");
  if (bounds.dim() == 0 || bounds.lo.size() != bounds.hi.size()) throw ConfigError("problem bounds are empty");
  for (std::size_t i = 0; i < bounds.dim(); ++i)
    if (!(bounds.lo[i] < bounds.hi[i])) throw ConfigError("problem bounds need lo < hi");
  if (budget < 1) throw ConfigError("budget must be at least 1");
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

Evaluator::Evaluator(const OptProblem& problem) : problem_(problem), budget_(problem.budget) {
  problem.validate();
  result_.best_y = kInf;
  result_.trace.reserve(budget_);
  result_.memory_trace.reserve(budget_);
  result_.cpu_trace.reserve(budget_);
  result_.work_trace.reserve(budget_);
  cpu_start_ = thread_cpu_seconds();
}

double Evaluator::operator()(std::span<const double> x) {
  if (used_ >= budget_) throw BudgetExceeded("evaluation " + std::to_string(used_ + 1) + " exceeds budget");
  if (!problem_.bounds.contains(x)) throw OutOfBounds("optimizer requested a point outside the bounds");
  double y = problem_.objective(x);
  if (std::isnan(y)) y = kInf;
  ++used_;
  work_ += kEvaluationWork;
  if (y < result_.best_y || result_.best_x.empty()) {
    result_.best_y = y;
    result_.best_x.assign(x.begin(), x.end());
  }
  result_.trace.push_back(result_.best_y);
  result_.memory_trace.push_back(peak_bytes_);
  result_.cpu_trace.push_back(thread_cpu_seconds() - cpu_start_);
  result_.work_trace.push_back(work_);
  return y;
}

void Evaluator::set_state_bytes(std::size_t bytes) {
  state_bytes_ = bytes;
  peak_bytes_ = std::max(peak_bytes_, bytes);
}

OptResult Evaluator::finish() && {
  result_.evals_used = used_;
  return std::move(result_);
}

// --- random search --------------------------------------------------------

OptResult random_search(const OptProblem& problem, std::uint64_t seed) {
  Evaluator ev(problem);
  Rng rng(seed);
  const std::size_t n = problem.dim();
  ev.set_state_bytes(doubles(3 * n + 1));
  while (!ev.exhausted()) {
    const Point x = uniform_point(problem.bounds, rng);
    ev.add_work(4.0 * static_cast<double>(n));
    ev(x);
  }
  return std::move(ev).finish();
}

// --- limited-memory quasi-Newton hill climber --------------------------------

namespace {

struct Curvature {
  std::vector<double> s, y;
  double rho;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Two-loop recursion: returns -H g.
std::vector<double> lbfgs_direction(const std::vector<double>& g, const std::deque<Curvature>& hist) {
  std::vector<double> q = g;
  std::vector<double> alpha(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    alpha[k] = hist[k].rho * dot(hist[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * hist[k].y[i];
  }
  if (!hist.empty()) {
    const auto& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double beta = hist[k].rho * dot(hist[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += hist[k].s[i] * (alpha[k] - beta);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

OptResult hill_climber(const OptProblem& problem, std::uint64_t seed, const HillClimberOptions& opts) {
  if (opts.lmm < 1) throw ConfigError("lmm must be at least 1");
  Evaluator ev(problem);
  Rng rng(seed);
  const Box& b = problem.bounds;
  const std::size_t n = problem.dim();
  const auto lmm = static_cast<std::size_t>(opts.lmm);
  double min_width = kInf;
  for (std::size_t i = 0; i < n; ++i) min_width = std::min(min_width, b.width(i));

  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 1e-6 * b.width(i);

  std::deque<Curvature> hist;
  const auto state_bytes = [&] { return doubles(6 * n + 2) + hist.size() * doubles(2 * n + 1); };

  // Central differences, one-sided where a bound cuts the stencil.
  const auto gradient = [&](const Point& x, std::vector<double>& g) {
    if (ev.remaining() < 2 * n) return false;
    Point xp = x, xm = x;
    for (std::size_t i = 0; i < n; ++i) {
      xp[i] = std::min(x[i] + h[i], b.hi[i]);
      xm[i] = std::max(x[i] - h[i], b.lo[i]);
      const double fp = ev(xp);
      const double fm = ev(xm);
      g[i] = (fp - fm) / (xp[i] - xm[i]);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    ev.add_work(4.0 * static_cast<double>(n));
    return true;
  };

  Point x = opts.initial ? *opts.initial : uniform_point(b, rng);
  if (!b.contains(x)) throw OutOfBounds("initial point outside bounds");
  ev.set_state_bytes(state_bytes());
  double fx = ev(x);
  std::vector<double> g(n), g_prev;
  Point x_prev;

  const auto restart = [&] {
    hist.clear();
    x_prev.clear();
    if (ev.exhausted()) return;
    ev.mark_restart();
    x = uniform_point(b, rng);
    fx = ev(x);
  };

  while (!ev.exhausted()) {
    if (!gradient(x, g)) break;

    if (!x_prev.empty()) {
      Curvature c{std::vector<double>(n), std::vector<double>(n), 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        c.s[i] = x[i] - x_prev[i];
        c.y[i] = g[i] - g_prev[i];
      }
      const double sy = dot(c.s, c.y);
      if (sy > 1e-12 * std::sqrt(dot(c.s, c.s) * dot(c.y, c.y))) {
        c.rho = 1.0 / sy;
        hist.push_back(std::move(c));
        if (hist.size() > lmm) hist.pop_front();
      }
    }
    ev.set_state_bytes(state_bytes());
    ev.add_work(static_cast<double>(4 * lmm * n + 8 * n));

    // Projected-gradient optimality test, scale-free.
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double moved = std::clamp(x[i] - g[i] * b.width(i) * b.width(i), b.lo[i], b.hi[i]) - x[i];
      if (moved != 0.0) pg = std::max(pg, std::abs(g[i]) * b.width(i));
    }
    if (pg <= 1e-8 * (1.0 + std::abs(fx))) {
      restart();
      continue;
    }

    std::vector<double> d = lbfgs_direction(g, hist);
    for (std::size_t i = 0; i < n; ++i) {
      if ((x[i] <= b.lo[i] && d[i] < 0.0) || (x[i] >= b.hi[i] && d[i] > 0.0)) d[i] = 0.0;
    }
    if (dot(g, d) >= 0.0) {
      hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      for (std::size_t i = 0; i < n; ++i)
        if ((x[i] <= b.lo[i] && d[i] < 0.0) || (x[i] >= b.hi[i] && d[i] > 0.0)) d[i] = 0.0;
    }
    double alpha = 1.0;
    if (hist.empty()) {
      double dmax = 0.0;
      for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(d[i]) / b.width(i));
      if (dmax > 0.0) alpha = std::min(1.0, 0.25 / dmax);
    }

    bool accepted = false;
    bool stalled = false;
    Point x_new(n);
    double f_new = fx;
    for (int ls = 0; ls < 30 && !ev.exhausted(); ++ls) {
      double step_len = 0.0;
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x_new[i] = std::clamp(x[i] + alpha * d[i], b.lo[i], b.hi[i]);
        step_len = std::max(step_len, std::abs(x_new[i] - x[i]) / b.width(i));
        decrease += g[i] * (x_new[i] - x[i]);
      }
      if (step_len < 1e-12) {
        stalled = true;
        break;
      }
      f_new = ev(x_new);
      if (f_new <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (stalled || !ev.exhausted()) restart();
      continue;
    }
    const double rel = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
    x_prev = x;
    g_prev = g;
    x = x_new;
    fx = f_new;
    if (rel <= 2.2e-9) restart();
  }
  return std::move(ev).finish();
}

// --- generalized simulated annealing ----------------------------------------

double gsa_temperature(double temp, double qv, double step) {
  const double num = std::pow(2.0, qv - 1.0) - 1.0;
  const double den = std::pow(1.0 + step, qv - 1.0) - 1.0;
  return temp * num / den;
}

double gsa_acceptance_probability(double delta, double t, double qa) {
  if (delta <= 0.0) return 1.0;
  if (!(t > 0.0)) return 0.0;
  if (std::abs(qa - 1.0) < 1e-12) return std::exp(-delta / t);
  const double base = 1.0 - (1.0 - qa) * delta / t;
  if (base <= 0.0) return 0.0;
  return std::exp(std::log(base) / (1.0 - qa));
}

namespace {

// Tsallis-distributed visiting step with parameter qv.
class Visitor {
 public:
  explicit Visitor(double qv) : qv_(qv) {
    const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
    const double factor3 = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    factor4_p_ = std::sqrt(std::numbers::pi) * factor2 / (factor3 * (3.0 - qv));
    const double factor5 = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5;
    factor6_ = std::numbers::pi * (1.0 - factor5) / std::sin(std::numbers::pi * (1.0 - factor5)) /
               std::exp(std::lgamma(d1));
  }

  double sample(double temperature, Rng& rng) const {
    const double x = standard_normal(rng);
    const double y = standard_normal(rng);
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4_p_ * factor1;
    const double sigma = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double den = std::exp((qv_ - 1.0) * std::log(std::abs(y)) / (3.0 - qv_));
    return x * sigma / den;
  }

 private:
  double qv_;
  double factor4_p_;
  double factor6_;
};

double reflect(double v, double lo, double hi) {
  const double w = hi - lo;
  double u = std::fmod(v - lo, 2.0 * w);
  if (u < 0.0) u += 2.0 * w;
  if (u > w) u = 2.0 * w - u;
  return std::clamp(lo + u, lo, hi);
}

}  // namespace

OptResult generalized_sa(const OptProblem& problem, std::uint64_t seed, const GenSAOptions& opts) {
  if (!(opts.qv > 1.0 && opts.qv < 3.0)) throw ConfigError("qv must lie in (1, 3)");
  if (!(opts.temp > 0.0)) throw ConfigError("temp must be positive");
  Evaluator ev(problem);
  Rng rng(seed);
  const Box& b = problem.bounds;
  const std::size_t n = problem.dim();
  const Visitor visitor(opts.qv);
  constexpr double kRestartRatio = 2e-5;
  constexpr double kTailLimit = 1e8;

  ev.set_state_bytes(doubles(3 * n + 3));
  Point x = uniform_point(b, rng);
  double fx = ev(x);
  Point cand(n);
  double step = 1.0;
  while (!ev.exhausted()) {
    const double t_visit = gsa_temperature(opts.temp, opts.qv, step);
    if (t_visit < opts.temp * kRestartRatio) {
      step = 1.0;
      x = uniform_point(b, rng);
      fx = ev(x);
      continue;
    }
    const double t_accept = t_visit / step;
    for (std::size_t j = 0; j < 2 * n && !ev.exhausted(); ++j) {
      cand = x;
      const auto move = [&](std::size_t i) {
        const double limit = kTailLimit * b.width(i);
        double v = visitor.sample(t_visit, rng);
        // Near qv = 1 the scale factors can meet as 0 * inf.
        if (std::isnan(v)) v = 0.0;
        v = std::clamp(v, -limit, limit);
        cand[i] = reflect(x[i] + v, b.lo[i], b.hi[i]);
      };
      if (j < n) {
        for (std::size_t i = 0; i < n; ++i) move(i);
      } else {
        move(j - n);
      }
      ev.add_work(20.0 * static_cast<double>(n));
      const double fc = ev(cand);
      bool accept = fc < fx;
      if (!accept) {
        const double p = gsa_acceptance_probability(fc - fx, t_accept, opts.qa);
        accept = uniform01(rng) < p;
      }
      if (accept) {
        if (opts.on_accept) opts.on_accept(fx, fc);
        x = cand;
        fx = fc;
      }
    }
    step += 1.0;
  }
  return std::move(ev).finish();
}

// --- differential evolution --------------------------------------------------

OptResult differential_evolution(const OptProblem& problem, std::uint64_t seed, const DEOptions& opts) {
  if (opts.popsize < 4) throw ConfigError("popsize must be at least 4");
  if (opts.strategy < 1 || opts.strategy > 5) throw ConfigError("strategy must be in 1..5");
  if (!(opts.F >= 0.0 && opts.F <= 2.0)) throw ConfigError("F must lie in [0, 2]");
  if (!(opts.CR >= 0.0 && opts.CR <= 1.0)) throw ConfigError("CR must lie in [0, 1]");
  if (!(opts.c >= 0.0 && opts.c <= 1.0)) throw ConfigError("c must lie in [0, 1]");

  Evaluator ev(problem);
  Rng rng(seed);
  const Box& b = problem.bounds;
  const std::size_t n = problem.dim();
  const auto np = static_cast<std::size_t>(opts.popsize);
  ev.set_state_bytes(doubles(2 * np * n + 2 * np + 3 * n + 2));

  std::vector<Point> pop;
  std::vector<double> fit;
  pop.reserve(np);
  for (std::size_t i = 0; i < np && !ev.exhausted(); ++i) {
    pop.push_back(uniform_point(b, rng));
    fit.push_back(ev(pop.back()));
  }
  if (pop.size() < np) return std::move(ev).finish();

  double mean_f = opts.F;
  double mean_cr = opts.CR;
  const bool adapt = opts.c > 0.0;
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, n - 1);
  Point mutant(n), trial(n);

  while (!ev.exhausted()) {
    const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
    std::vector<Point> next_pop = pop;
    std::vector<double> next_fit = fit;
    std::vector<double> good_f, good_cr;
    for (std::size_t i = 0; i < np && !ev.exhausted(); ++i) {
      double fi = mean_f, cri = mean_cr;
      if (adapt) {
        fi = 0.0;
        for (int tries = 0; tries < 16 && fi <= 0.0; ++tries)
          fi = mean_f + 0.1 * std::tan(std::numbers::pi * (uniform01(rng) - 0.5));
        if (fi <= 0.0) fi = mean_f;
        fi = std::min(fi, 2.0);
        cri = std::clamp(mean_cr + 0.1 * standard_normal(rng), 0.0, 1.0);
      }

      // Distinct partners other than i; reuse is allowed only once the
      // population runs out of distinct members.
      std::size_t r[5];
      for (std::size_t k = 0; k < 5; ++k) {
        for (;;) {
          const std::size_t c = pick(rng);
          if (c == i) continue;
          bool fresh = true;
          for (std::size_t m = 0; m < k && k < np - 1; ++m) fresh = fresh && r[m] != c;
          if (fresh) {
            r[k] = c;
            break;
          }
        }
      }
      for (std::size_t d = 0; d < n; ++d) {
        const auto& P = pop;
        switch (opts.strategy) {
          case 1: mutant[d] = P[r[0]][d] + fi * (P[r[1]][d] - P[r[2]][d]); break;
          case 2: mutant[d] = P[best][d] + fi * (P[r[0]][d] - P[r[1]][d]); break;
          case 3:
            mutant[d] = P[i][d] + fi * (P[best][d] - P[i][d]) + fi * (P[r[0]][d] - P[r[1]][d]);
            break;
          case 4:
            mutant[d] = P[best][d] + fi * (P[r[0]][d] - P[r[1]][d] + P[r[2]][d] - P[r[3]][d]);
            break;
          default:
            mutant[d] = P[r[4]][d] + fi * (P[r[0]][d] - P[r[1]][d] + P[r[2]][d] - P[r[3]][d]);
            break;
        }
      }
      // Binomial crossover; the forced mutant coordinate only applies for CR > 0.
      const std::size_t jrand = pick_dim(rng);
      for (std::size_t d = 0; d < n; ++d) {
        const bool take = uniform01(rng) < cri || (cri > 0.0 && d == jrand);
        trial[d] = std::clamp(take ? mutant[d] : pop[i][d], b.lo[d], b.hi[d]);
      }
      ev.add_work(12.0 * static_cast<double>(n));
      const double ft = ev(trial);
      if (ft <= fit[i]) {
        if (adapt && ft < fit[i]) {
          good_f.push_back(fi);
          good_cr.push_back(cri);
        }
        next_pop[i] = trial;
        next_fit[i] = ft;
      }
    }
    pop = std::move(next_pop);
    fit = std::move(next_fit);
    if (adapt && !good_f.empty()) {
      const double gf = std::accumulate(good_f.begin(), good_f.end(), 0.0) / static_cast<double>(good_f.size());
      const double gcr = std::accumulate(good_cr.begin(), good_cr.end(), 0.0) / static_cast<double>(good_cr.size());
      mean_f = (1.0 - opts.c) * mean_f + opts.c * gf;
      mean_cr = (1.0 - opts.c) * mean_cr + opts.c * gcr;
    }
  }
  return std::move(ev).finish();
}

// --- Kriging surrogate-based optimization ------------------------------------

std::vector<Point> latin_hypercube(std::size_t n, const Box& bounds, Rng& rng) {
  std::vector<Point> pts(n, Point(bounds.dim()));
  std::vector<std::size_t> perm(n);
  for (std::size_t d = 0; d < bounds.dim(); ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = (static_cast<double>(perm[k]) + uniform01(rng)) / static_cast<double>(n);
      pts[k][d] = std::min(bounds.lo[d] + u * bounds.width(d), bounds.hi[d]);
    }
  }
  return pts;
}

double expected_improvement(double mean, double variance, double best) {
  const double diff = best - mean;
  const double s = std::sqrt(std::max(variance, 0.0));
  if (s <= 1e-300) return std::max(diff, 0.0);
  const double z = diff / s;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(diff * cdf + s * pdf, 0.0);
}

namespace {

std::optional<GPModel> fit_surrogate(const Dataset& data) {
  try {
    return GPModel::fit(data, false);
  } catch (const SingularCovariance&) {
  } catch (const InvalidDataset&) {
  }
  try {
    return GPModel::fit(data, true);
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

OptResult kriging_sbo(const OptProblem& problem, std::uint64_t seed, const KrigingOptions& opts) {
  if (opts.design_size < 3) throw ConfigError("designSize must be at least 3");
  if (problem.budget <= static_cast<std::size_t>(opts.design_size))
    throw ConfigError("budget must exceed designSize");
  Evaluator ev(problem);
  Rng rng(seed);
  const Box& b = problem.bounds;
  const std::size_t n = problem.dim();
  const auto ds = static_cast<std::size_t>(opts.design_size);

  std::vector<Point> design =
      opts.design_type == DesignType::Lhd ? latin_hypercube(ds, b, rng) : std::vector<Point>{};
  if (opts.design_type == DesignType::Uniform)
    for (std::size_t k = 0; k < ds; ++k) design.push_back(uniform_point(b, rng));

  Dataset data;
  data.bounds = b;
  const auto tracked = [&](std::size_t model_bytes) {
    return doubles(data.size() * (n + 1)) + model_bytes + doubles(2 * n + 2);
  };
  for (const Point& p : design) {
    ev.set_state_bytes(tracked(0));
    data.append(p, ev(p));
  }

  const std::size_t m = std::max<std::size_t>(opts.candidates, 1);
  Eigen::MatrixXd cand(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  while (!ev.exhausted()) {
    const auto model = fit_surrogate(data);
    Point next;
    if (model) {
      const double nd = static_cast<double>(data.size());
      ev.set_state_bytes(tracked(model->factor_bytes()));
      ev.add_work(32.0 * (nd * nd * nd / 3.0 + 4.0 * nd * nd) + static_cast<double>(m) * nd * nd);

      const double best = ev.best_y();
      const auto ei_at = [&](std::span<const double> x) {
        const auto p = model->predict(x);
        return expected_improvement(p.mean, p.variance, best);
      };
      double best_ei = -1.0;
      Point x(n);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t d = 0; d < n; ++d) x[d] = uniform(rng, b.lo[d], b.hi[d]);
        const double e = ei_at(x);
        if (e > best_ei) {
          best_ei = e;
          next = x;
        }
      }
      // Compass refinement of the acquisition around the best candidate.
      std::vector<double> step(n);
      const double frac = 0.5 / std::pow(static_cast<double>(m), 1.0 / static_cast<double>(n));
      for (std::size_t d = 0; d < n; ++d) step[d] = frac * b.width(d);
      for (int it = 0; it < 40; ++it) {
        bool moved = false;
        for (std::size_t d = 0; d < n && !moved; ++d) {
          for (double sign : {1.0, -1.0}) {
            Point t = next;
            t[d] = std::clamp(t[d] + sign * step[d], b.lo[d], b.hi[d]);
            const double e = ei_at(t);
            if (e > best_ei) {
              best_ei = e;
              next = std::move(t);
              moved = true;
              break;
            }
          }
        }
        if (!moved) {
          for (double& s : step) s *= 0.5;
          if (step[0] < 1e-9 * b.width(0)) break;
        }
      }
      if (best_ei <= 0.0) next = uniform_point(b, rng);
    } else {
      next = uniform_point(b, rng);
    }
    data.append(next, ev(next));
  }
  return std::move(ev).finish();
}

// --- configuration -------------------------------------------------------------

std::vector<ParameterSpec> parameter_specs(Algorithm a) {
  using K = ParameterKind;
  switch (a) {
    case Algorithm::RandomSearch: return {};
    case Algorithm::HillClimber: return {{"lmm", K::Integer, 1, 20, 5.0, {}}};
    case Algorithm::GeneralizedSA:
      return {{"temp", K::Integer, 1, 1000, 100.0, {}},
              {"qv", K::Real, 1.01, 2.99, 2.5, {}},
              {"qa", K::Real, -10.0, 0.99, -1.0, {}}};
    case Algorithm::DifferentialEvolution:
      return {{"popsize", K::Integer, 4, 20, 5.0, {}},
              {"strategy", K::Integer, 1, 5, 2.0, {}},
              {"F", K::Real, 0.0, 2.0, 0.8, {}},
              {"CR", K::Real, 0.0, 1.0, 0.5, {}},
              {"c", K::Real, 0.0, 1.0, 0.5, {}}};
    case Algorithm::KrigingSBO:
      return {{"designSize", K::Integer, 3, 20, 7.0, {}},
              {"designType", K::Categorical, 0, 0, std::string("Lhd"), {"Lhd", "Uniform"}}};
  }
  return {};
}

OptimizerConfig OptimizerConfig::defaults(Algorithm a) {
  OptimizerConfig c;
  c.algorithm = a;
  for (const auto& s : parameter_specs(a)) c.params[s.name] = s.default_value;
  return c;
}

OptimizerConfig OptimizerConfig::completed() const {
  OptimizerConfig out = defaults(algorithm);
  const auto specs = parameter_specs(algorithm);
  for (const auto& [name, value] : params) {
    const auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; });
    if (it == specs.end())
      throw ConfigError("unknown parameter '" + name + "' for " + std::string(to_string(algorithm)));
    it->check(value);
    out.params[name] = value;
  }
  return out;
}

double OptimizerConfig::number(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  const auto* d = std::get_if<double>(&it->second);
  if (d == nullptr) throw ConfigError("parameter '" + name + "' is not numeric");
  return *d;
}

const std::string& OptimizerConfig::category(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  const auto* s = std::get_if<std::string>(&it->second);
  if (s == nullptr) throw ConfigError("parameter '" + name + "' is not categorical");
  return *s;
}

OptResult run_optimizer(const OptimizerConfig& config, const OptProblem& problem, std::uint64_t seed) {
  const OptimizerConfig c = config.completed();
  switch (c.algorithm) {
    case Algorithm::RandomSearch: return random_search(problem, seed);
    case Algorithm::HillClimber: {
      HillClimberOptions o;
      o.lmm = static_cast<int>(c.number("lmm"));
      return hill_climber(problem, seed, o);
    }
    case Algorithm::GeneralizedSA: {
      GenSAOptions o;
      o.temp = c.number("temp");
      o.qv = c.number("qv");
      o.qa = c.number("qa");
      return generalized_sa(problem, seed, o);
    }
    case Algorithm::DifferentialEvolution: {
      DEOptions o;
      o.popsize = static_cast<int>(c.number("popsize"));
      o.strategy = static_cast<int>(c.number("strategy"));
      o.F = c.number("F");
      o.CR = c.number("CR");
      o.c = c.number("c");
      return differential_evolution(problem, seed, o);
    }
    case Algorithm::KrigingSBO: {
      KrigingOptions o;
      o.design_size = static_cast<int>(c.number("designSize"));
      o.design_type = c.category("designType") == "Uniform" ? DesignType::Uniform : DesignType::Lhd;
      return kriging_sbo(problem, seed, o);
    }
  }
  throw UnknownAlgorithm("unhandled algorithm");
}

}  // namespace caai
