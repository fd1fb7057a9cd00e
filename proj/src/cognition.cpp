#include "caai/cognition.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "caai/errors.hpp"
#include "caai/optimizers.hpp"

namespace caai {

std::string to_string(DesignKind k) { return k == DesignKind::Lhs ? "lhs" : "full_factorial"; }

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "full_factorial") return DesignKind::FullFactorial;
  if (s == "lhs") return DesignKind::Lhs;
  throw ConfigError("design must be 'full_factorial' or 'lhs', got '" + s + "'");
}

void CognitionConfig::validate() const {
  if (s < 2) throw ConfigError("initial design size s must be >= 2");
  if (theta < 2) throw ConfigError("theta must be >= 2");
  if (epsilon && !(*epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (k_instances < 2) throw ConfigError("k_instances must be >= 2");
  if (!(stagnation_delta >= 0.0)) throw ConfigError("stagnation_delta must be >= 0");
  weights.validate();
  goal.validate();
  if (!goal.executable()) throw ConfigError("only optimization goals can drive the plant");
  if (goal.direction != Direction::Minimize) throw ConfigError("the plant objective is minimized");
  bench_settings().validate();
}

double CognitionConfig::epsilon_for(const Box& bounds) const {
  return epsilon ? *epsilon : 0.01 * bounds.width(0);
}

BenchmarkSettings CognitionConfig::bench_settings() const {
  BenchmarkSettings b;
  b.tuning_budget = tuning_budget;
  b.tuning_reps = tuning_reps;
  b.bench_budget = bench_budget;
  b.reps = reps;
  b.checkpoints = {bench_budget};
  b.cpu_meter = cpu_meter;
  b.threads = threads;
  return b;
}

std::vector<Point> create_initial_design(std::size_t s, const Box& bounds, DesignKind kind, std::uint64_t seed) {
  if (s < 2) throw ConfigError("initial design size s must be >= 2");
  bounds.validate();
  const std::size_t dim = bounds.dim();
  Rng rng(derive_seed(seed, hash_string("initial-design")));
  if (kind == DesignKind::Lhs) return latin_hypercube(s, bounds, rng);

  std::size_t m = 1;
  while (std::pow(static_cast<double>(m + 1), static_cast<double>(dim)) <= static_cast<double>(s)) ++m;
  std::vector<Point> pts;
  if (m >= 2) {
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
      Point p(dim);
      for (std::size_t j = 0; j < dim; ++j)
        p[j] = bounds.lo[j] + bounds.width(j) * static_cast<double>(idx[j]) / static_cast<double>(m - 1);
      pts.push_back(std::move(p));
      std::size_t j = 0;
      while (j < dim && ++idx[j] == m) idx[j++] = 0;
      if (j == dim) break;
    }
  }
  while (pts.size() < s) {
    Point p(dim);
    for (std::size_t j = 0; j < dim; ++j) p[j] = uniform(rng, bounds.lo[j], bounds.hi[j]);
    pts.push_back(std::move(p));
  }
  return pts;
}

namespace {

void append_cycles(CognitionState& st, const std::vector<ProductionCycleRecord>& cycles) {
  for (const auto& c : cycles) {
    st.d.append({c.x}, c.aggregate);
    st.cycles_seen = std::max(st.cycles_seen, c.cycle);
  }
}

// Benchmarks every candidate pipeline on simulations of the current data and
// rates them.
SelectionSummary run_selection(const CognitionState& st, KnowledgeBase& kb, const CognitionConfig& cfg) {
  SelectionSummary out;
  out.iteration = st.iteration;
  out.after_cycle = st.cycles_seen;

  const std::uint64_t seed = derive_seed(cfg.master_seed, hash_string("selection"), st.iteration);
  const GoalPath path = cfg.goal.path();
  const auto templates = compose_pipelines(kb, cfg.goal);
  const auto feasible = determine_feasible(templates, kb, cfg.goal, st.d.size());
  auto chosen = select_candidates(feasible, kb, cfg.resources, st.e);
  // The baseline is rated against, so it always runs.
  const auto is_baseline = [&](const PipelineTemplate& t) { return t.id() == cfg.baseline; };
  if (std::none_of(chosen.begin(), chosen.end(), is_baseline)) {
    const auto it = std::find_if(templates.begin(), templates.end(), is_baseline);
    if (it == templates.end()) throw MissingBaseline("baseline '" + cfg.baseline + "' is not in the knowledge base");
    chosen.push_back(*it);
  }

  std::vector<CandidatePipeline> pipes;
  for (const auto& t : chosen) {
    pipes.push_back(CandidatePipeline::from_template(t, kb, path));
    out.candidates.push_back(pipes.back().id);
  }

  const TestInstanceSet S = generate_test_functions(st.d, cfg.k_instances, cfg.method, seed);
  BenchmarkSettings bench = cfg.bench_settings();
  BenchmarkSettings inner = bench;
  inner.threads = 1;
  std::vector<std::vector<EvaluationRecord>> per(pipes.size());
  std::vector<std::string> rejected(pipes.size());
  parallel_for(pipes.size(), bench.threads, [&](std::size_t i) {
    try {
      per[i] = tune_then_benchmark(pipes[i], S, inner, seed);
    } catch (const ConfigurationError& ex) {
      if (pipes[i].id == cfg.baseline) throw;
      rejected[i] = ex.what();
    } catch (const RangeError& ex) {
      if (pipes[i].id == cfg.baseline) throw;
      rejected[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < pipes.size(); ++i) {
    if (!rejected[i].empty()) spdlog::warn("dropping pipeline {} from selection: {}", pipes[i].id, rejected[i]);
    for (auto& r : per[i]) out.records.push_back(std::move(r));
  }

  out.rating = rate_pipelines(out.records, cfg.baseline, cfg.weights);
  return out;
}

}  // namespace

std::vector<ProductionCycleRecord> bootstrap(CognitionState& state, PlantAdapter& plant, const CognitionConfig& cfg,
                                             const std::vector<ProductionCycleRecord>& history) {
  cfg.validate();
  if (state.bootstrapped) throw Error("state is already bootstrapped");
  CognitionState st;
  st.d.bounds = plant.bounds();
  std::vector<ProductionCycleRecord> recorded;
  if (!history.empty()) {
    append_cycles(st, history);
    st.x = history.back().x;
    // Plant cycle numbering is independent of the historical records.
    st.cycles_seen = plant.latest_index();
  } else {
    const std::size_t since = plant.latest_index();
    for (const auto& p : create_initial_design(cfg.s, plant.bounds(), cfg.design, cfg.master_seed)) {
      plant.apply(p[0]);
      for (std::size_t r = 1; r < plant.design_reps(); ++r) plant.produce();
      st.x = p[0];
    }
    recorded = plant.receive_new_data(since);
    append_cycles(st, recorded);
  }
  st.initial_best = *std::min_element(st.d.y.begin(), st.d.y.end());
  st.bootstrapped = true;
  state = std::move(st);
  return recorded;
}

Point get_best_x(const std::optional<OptimizerConfig>& p_best, const Dataset& d, const Point& x_current,
                 std::size_t budget, std::uint64_t seed) {
  if (!p_best) return x_current;
  try {
    const GPModel model = GPModel::fit(d, true);
    const OptProblem problem{[&model](std::span<const double> x) { return model.predict_mean(x); }, d.bounds, budget};
    return run_optimizer(*p_best, problem, seed).best_x;
  } catch (const Error& ex) {
    spdlog::warn("best-x search failed, keeping the current setting: {}", ex.what());
    return x_current;
  }
}

StepReport step(CognitionState& state, PlantAdapter& plant, KnowledgeBase& kb, const CognitionConfig& cfg) {
  if (!state.bootstrapped) throw Error("bootstrap the state before stepping");
  CognitionState st = state;
  KnowledgeBase next_kb = kb;
  StepReport rep;
  rep.iteration = st.iteration;

  if (st.iteration % cfg.theta == 0 || st.zeta == 1) {
    st.zeta = 0;
    rep.selection_ran = true;
    SelectionSummary sel = run_selection(st, next_kb, cfg);
    for (const auto& u : sel.rating.kb_updates)
      next_kb = update_characteristics(next_kb, u.algorithm, u.performance, u.effort, u.ram);
    st.p_best = sel.rating.p_best;
    st.p_best_config.reset();
    if (st.p_best)
      for (const auto& r : sel.records)
        if (r.pipeline == *st.p_best) {
          const auto* entry = next_kb.find(cfg.goal.path(), terminal_of(r.pipeline));
          if (entry == nullptr) throw UnknownAlgorithm(terminal_of(r.pipeline));
          st.p_best_config = OptimizerConfig{algorithm_from_string(entry->name), r.tuned_params};
          break;
        }
    st.e.insert(st.e.end(), sel.records.begin(), sel.records.end());
    st.last_selection = st.iteration;
    rep.selection = std::move(sel);
  }

  const Point current{st.x};
  rep.x_best = get_best_x(st.p_best_config, st.d, current, cfg.bench_budget,
                          derive_seed(cfg.master_seed, hash_string("best-x"), st.iteration));
  const std::size_t since = plant.latest_index();
  if (std::abs(st.x - rep.x_best[0]) >= cfg.epsilon_for(plant.bounds()) || !plant.setting()) {
    plant.apply(rep.x_best[0]);
    st.x = rep.x_best[0];
    rep.applied = true;
  } else {
    plant.produce();
  }
  rep.cycles = plant.receive_new_data(since);
  append_cycles(st, rep.cycles);
  rep.objective = rep.cycles.back().aggregate;

  const double prev_best = st.best_history.empty() ? st.initial_best : st.best_history.back();
  st.best_history.push_back(std::min(prev_best, rep.objective));

  // Stagnation over the last ceil(theta/2) steps since the last selection.
  const std::size_t w = (cfg.theta + 1) / 2;
  const std::size_t i = st.iteration;
  if (!rep.selection_ran && st.last_selection && i - *st.last_selection >= w) {
    const double then = st.best_history[i - w];
    const double now = st.best_history[i];
    const double rel = (then - now) / std::max(std::abs(then), 1e-12);
    double window_best = now;
    for (std::size_t j = i - w + 1; j <= i; ++j) window_best = std::min(window_best, st.best_history[j]);
    const bool decreased = rep.objective - window_best > cfg.stagnation_delta * std::max(std::abs(window_best), 1e-12);
    if (rel < cfg.stagnation_delta || decreased) st.zeta = 1;
  }
  ++st.iteration;

  rep.zeta = st.zeta;
  rep.p_best = st.p_best;
  state = std::move(st);
  kb = std::move(next_kb);
  return rep;
}

// --- run log ----------------------------------------------------------------

namespace {

nlohmann::json opt_string(const std::optional<std::string>& s) { return s ? nlohmann::json(*s) : nlohmann::json(); }

}  // namespace

void RunLogWriter::cycle(const ProductionCycleRecord& c, const StepReport* r) {
  nlohmann::ordered_json j;
  j["type"] = "cycle";
  j["cycle"] = c.cycle;
  j["iteration"] = r ? nlohmann::ordered_json(r->iteration) : nlohmann::ordered_json();
  j["x"] = c.x;
  j["objective"] = c.aggregate;
  j["f1"] = c.f[0];
  j["f2"] = c.f[1];
  j["f3"] = c.f[2];
  j["p_best"] = r ? opt_string(r->p_best) : nlohmann::json();
  j["zeta"] = r ? r->zeta : 0;
  j["selection_ran"] = r ? r->selection_ran : false;
  j["applied"] = r ? r->applied : true;
  j["timestamp"] = c.timestamp;
  os_ << j.dump() << '\n';
}

void RunLogWriter::bootstrap(const std::vector<ProductionCycleRecord>& cycles) {
  for (const auto& c : cycles) cycle(c, nullptr);
}

void RunLogWriter::step(const StepReport& r) {
  if (r.selection) {
    const auto& s = *r.selection;
    nlohmann::ordered_json j;
    j["type"] = "selection";
    j["iteration"] = s.iteration;
    j["after_cycle"] = s.after_cycle;
    j["candidates"] = s.candidates;
    j["p_best"] = opt_string(s.rating.p_best);
    j["survivors"] = s.rating.table.survivors;
    j["eliminated"] = s.rating.table.eliminated;
    auto& rows = j["rating"] = nlohmann::ordered_json::array();
    for (const auto& row : s.rating.table.rows) {
      rows.push_back({{"pipeline", row.pipeline},
                      {"improvement", row.improvement},
                      {"mem_ratio", row.mem_ratio},
                      {"cpu_ratio", row.cpu_ratio},
                      {"norm_obj", row.norm_obj},
                      {"norm_mem", row.norm_mem},
                      {"norm_cpu", row.norm_cpu},
                      {"aggregate", row.aggregate},
                      {"rank", row.rank ? nlohmann::ordered_json(*row.rank) : nlohmann::ordered_json()}});
    }
    auto& recs = j["records"] = nlohmann::ordered_json::array();
    for (const auto& e : s.records) {
      recs.push_back({{"pipeline", e.pipeline},
                      {"instance", e.instance},
                      {"budget", e.budget},
                      {"best_y", e.best_y},
                      {"memory_bytes", e.memory_bytes},
                      {"cpu_time", e.cpu_time}});
    }
    os_ << j.dump() << '\n';
  }
  for (const auto& c : r.cycles) cycle(c, &r);
}

}  // namespace caai
