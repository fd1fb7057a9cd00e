#include "caai/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "caai/errors.hpp"
#include "caai/rng.hpp"

namespace caai {

std::string to_string(CpuMeter m) { return m == CpuMeter::ThreadClock ? "thread" : "modeled"; }

CpuMeter cpu_meter_from_string(const std::string& s) {
  if (s == "thread") return CpuMeter::ThreadClock;
  if (s == "modeled") return CpuMeter::ModeledWork;
  throw ConfigError("cpu meter must be 'thread' or 'modeled', got '" + s + "'");
}

TestInstanceSet generate_test_functions(const Dataset& data, std::size_t k, SimulationMethod method,
                                        std::uint64_t master_seed, bool noise, std::size_t grid_size) {
  TestInstanceSet set;
  set.master_seed = master_seed;
  set.source_model = std::make_shared<const GPModel>(GPModel::fit(data, noise));
  if (k == 0) return set;
  const auto grid = equidistant_grid(data.bounds.lo[0], data.bounds.hi[0], grid_size);
  std::vector<std::uint64_t> seeds(k);
  for (std::size_t i = 0; i < k; ++i) seeds[i] = derive_seed(master_seed, hash_string("instance"), i);
  set.instances = simulate_unconditional(*set.source_model, grid, method, seeds);
  return set;
}

OptProblem realization_problem(const Realization& r, std::size_t budget) {
  return OptProblem{[&r](std::span<const double> x) { return r(x[0]); }, Box::interval(r.lo(), r.hi()), budget};
}

CandidatePipeline CandidatePipeline::from_algorithm(Algorithm a) {
  return {std::string(to_string(a)), a, parameter_specs(a)};
}

CandidatePipeline CandidatePipeline::from_template(const PipelineTemplate& t, const KnowledgeBase& kb,
                                                   const GoalPath& path) {
  const AlgorithmEntry* e = kb.find(path, t.terminal_algorithm());
  if (e == nullptr) throw UnknownAlgorithm(t.terminal_algorithm());
  return {t.id(), algorithm_from_string(e->name), e->parameters};
}

void BenchmarkSettings::validate() const {
  if (bench_budget == 0) throw ConfigError("bench_budget must be positive");
  if (reps == 0) throw ConfigError("reps must be positive");
  if (tuning_budget > 0 && tuning_reps == 0) throw ConfigError("tuning_reps must be positive");
  if (checkpoints.empty()) throw ConfigError("at least one budget checkpoint is required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0 || checkpoints[i] > bench_budget)
      throw ConfigError("checkpoints must lie in [1, bench_budget]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) throw ConfigError("checkpoints must be increasing");
  }
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min(threads, n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

ParamValue sample_value(const ParameterSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParameterKind::Integer: {
      const auto lo = static_cast<long long>(std::ceil(p.min));
      const auto hi = static_cast<long long>(std::floor(p.max));
      return static_cast<double>(std::uniform_int_distribution<long long>(lo, hi)(rng));
    }
    case ParameterKind::Real: return uniform(rng, p.min, p.max);
    case ParameterKind::Categorical: {
      const auto i = std::uniform_int_distribution<std::size_t>(0, p.categories.size() - 1)(rng);
      return p.categories[i];
    }
  }
  return 0.0;
}

double cpu_at(const OptResult& r, std::size_t idx, CpuMeter m) {
  return m == CpuMeter::ThreadClock ? r.cpu_trace[idx] : r.work_trace[idx] / kWorkUnitsPerSecond;
}

std::uint64_t run_seed(std::uint64_t seed, const std::string& pipeline, const std::string& instance,
                       std::size_t rep) {
  return derive_seed(seed, hash_string(pipeline), hash_string(instance), rep);
}

}  // namespace

OptimizerConfig tune(const CandidatePipeline& pipeline, const Realization& instance, const BenchmarkSettings& s,
                     std::uint64_t seed) {
  OptimizerConfig defaults = OptimizerConfig::defaults(pipeline.algorithm);
  if (s.tuning_budget == 0 || pipeline.config_space.empty()) return defaults;

  Rng rng(derive_seed(seed, hash_string(pipeline.id), hash_string("tuner")));
  std::vector<OptimizerConfig> configs(s.tuning_budget);
  for (auto& c : configs) {
    c.algorithm = pipeline.algorithm;
    for (const auto& p : pipeline.config_space) c.params[p.name] = sample_value(p, rng);
  }

  const std::size_t reps = s.tuning_reps;
  std::vector<double> scores(configs.size() * reps);
  parallel_for(scores.size(), s.threads, [&](std::size_t task) {
    const std::size_t ci = task / reps, rep = task % reps;
    const OptProblem problem = realization_problem(instance, s.bench_budget);
    try {
      const auto r = run_optimizer(configs[ci], problem,
                                   derive_seed(seed, hash_string(pipeline.id), hash_string("tune"), ci, rep));
      scores[task] = r.best_y;
    } catch (const ConfigurationError&) {
      scores[task] = std::numeric_limits<double>::infinity();
    } catch (const RangeError&) {
      scores[task] = std::numeric_limits<double>::infinity();
    }
  });

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    double sum = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) sum += scores[ci * reps + rep];
    const double mean = sum / static_cast<double>(reps);
    if (mean < best_score) {
      best_score = mean;
      best = ci;
    }
  }
  // Every configuration failing leaves the first sample, which is still a
  // concrete answer.
  return configs[best];
}

std::vector<EvaluationRecord> benchmark_config(const std::string& pipeline_id, const OptimizerConfig& config,
                                               const Realization& instance, const std::string& inst_id,
                                               const BenchmarkSettings& s, std::uint64_t seed) {
  s.validate();
  std::vector<OptResult> runs(s.reps);
  parallel_for(s.reps, s.threads, [&](std::size_t rep) {
    const OptProblem problem = realization_problem(instance, s.bench_budget);
    runs[rep] = run_optimizer(config, problem, run_seed(seed, pipeline_id, inst_id, rep));
  });

  std::vector<EvaluationRecord> out;
  for (std::size_t b : s.checkpoints) {
    EvaluationRecord rec;
    rec.pipeline = pipeline_id;
    rec.instance = inst_id;
    rec.budget = b;
    rec.tuned_params = config.params;
    for (const auto& r : runs) {
      if (r.evals_used == 0) throw Error("optimizer returned without evaluating");
      // A run that stopped early keeps its last state for later checkpoints.
      const std::size_t idx = std::min(b, r.evals_used) - 1;
      rec.best_y += r.trace[idx];
      rec.cpu_time += cpu_at(r, idx, s.cpu_meter);
      rec.memory_bytes += static_cast<double>(r.memory_trace[idx]);
    }
    const auto n = static_cast<double>(runs.size());
    rec.best_y /= n;
    rec.cpu_time /= n;
    rec.memory_bytes /= n;
    out.push_back(std::move(rec));
  }
  return out;
}

std::pair<std::size_t, std::size_t> draw_instance_pair(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InstanceSetTooSmall("tuning and benchmarking need two distinct instances, got " + std::to_string(n));
  Rng rng(derive_seed(seed, hash_string("instance-pair")));
  const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::size_t b = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  if (b >= t) ++b;
  return {t, b};
}

std::string instance_id(std::size_t index) { return "sim-" + std::to_string(index); }

std::vector<EvaluationRecord> tune_then_benchmark(const CandidatePipeline& pipeline, const TestInstanceSet& S,
                                                  const BenchmarkSettings& s, std::uint64_t seed) {
  s.validate();
  const auto [t, b] = draw_instance_pair(S.size(), seed);
  const OptimizerConfig config = tune(pipeline, S.instances[t], s, seed);
  return benchmark_config(pipeline.id, config, S.instances[b], instance_id(b), s, seed);
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double r = (static_cast<double>(i + j) + 2.0) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<EvaluationRecord> rank_algorithms(std::vector<EvaluationRecord> records, RankBy by) {
  std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[{records[i].instance, records[i].budget}].push_back(i);
  for (const auto& [key, idx] : groups) {
    std::set<std::string> seen;
    std::vector<double> keys;
    for (std::size_t i : idx) {
      if (!seen.insert(records[i].pipeline).second)
        throw DuplicatePipelineInGroup(records[i].pipeline + " appears twice for instance " + key.first +
                                       " at budget " + std::to_string(key.second));
      if (by == RankBy::BestY) {
        keys.push_back(records[i].best_y);
      } else {
        if (!records[i].aggregate) throw MalformedInput("record of " + records[i].pipeline + " has no aggregate");
        keys.push_back(-*records[i].aggregate);
      }
    }
    const auto ranks = mid_ranks(keys);
    for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].rank = ranks[k];
  }
  return records;
}

PearsonResult pearson_from_r(double r, std::size_t n) {
  if (n < 3) throw DegenerateInput("Pearson correlation needs at least 3 pairs");
  PearsonResult res;
  res.r = std::clamp(r, -1.0, 1.0);
  res.df = n - 2;
  const double df = static_cast<double>(res.df);
  if (std::abs(res.r) >= 1.0) {
    res.t = std::copysign(std::numeric_limits<double>::infinity(), res.r);
    res.p = 0.0;
    res.ci_lo = res.ci_hi = res.r;
    return res;
  }
  res.t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
  const boost::math::students_t dist(df);
  res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
  if (n > 3) {
    const double z = std::atanh(res.r);
    const double half = 1.959963984540054 / std::sqrt(static_cast<double>(n) - 3.0);
    res.ci_lo = std::tanh(z - half);
    res.ci_hi = std::tanh(z + half);
  } else {
    res.ci_lo = -1.0;
    res.ci_hi = 1.0;
  }
  return res;
}

PearsonResult pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DegenerateInput("samples differ in length");
  const std::size_t n = a.size();
  if (n < 3) throw DegenerateInput("Pearson correlation needs at least 3 pairs");
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) throw DegenerateInput("zero variance");
  return pearson_from_r(sab / std::sqrt(saa * sbb), n);
}

std::map<std::pair<std::string, std::size_t>, double> mean_ranks(std::span<const EvaluationRecord> ranked) {
  std::map<std::pair<std::string, std::size_t>, std::pair<double, int>> acc;
  for (const auto& r : ranked) {
    if (!r.rank) throw MalformedInput("record without rank");
    auto& [sum, count] = acc[{r.pipeline, r.budget}];
    sum += *r.rank;
    ++count;
  }
  std::map<std::pair<std::string, std::size_t>, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

PearsonResult CampaignResult::correlation() const {
  std::vector<double> a, b;
  for (const auto& [key, rank] : gt_ranks) {
    const auto it = sim_ranks.find(key);
    if (it == sim_ranks.end()) continue;
    a.push_back(rank);
    b.push_back(it->second);
  }
  return pearson_correlation(a, b);
}

CampaignResult run_campaign(const Realization& ground_truth, const Dataset& data,
                            std::span<const CandidatePipeline> pipelines, const std::string& baseline,
                            const CampaignSettings& settings) {
  settings.bench.validate();
  if (settings.k_instances == 0) throw ConfigError("k_instances must be positive");
  if (std::none_of(pipelines.begin(), pipelines.end(), [&](const auto& p) { return p.id == baseline; }))
    throw MissingBaseline("baseline '" + baseline + "' is not among the campaign pipelines");

  const std::uint64_t seed = settings.master_seed;
  const TestInstanceSet S = generate_test_functions(data, settings.k_instances + 1, settings.method, seed);
  Rng pick(derive_seed(seed, hash_string("tuning-instance")));
  const std::size_t tuning_idx = std::uniform_int_distribution<std::size_t>(0, S.size() - 1)(pick);

  // Inner calls stay serial; the fan-out happens at this level.
  BenchmarkSettings inner = settings.bench;
  inner.threads = 1;

  CampaignResult out;
  out.baseline = baseline;
  out.pipelines.assign(pipelines.begin(), pipelines.end());

  std::vector<OptimizerConfig> tuned(pipelines.size());
  parallel_for(pipelines.size(), settings.bench.threads, [&](std::size_t i) {
    tuned[i] = tune(pipelines[i], S.instances[tuning_idx], inner, seed);
  });
  for (std::size_t i = 0; i < pipelines.size(); ++i) out.tuned[pipelines[i].id] = tuned[i];

  // Instance 0 of the task grid is the ground truth; the rest are the
  // simulation instances other than the tuning one.
  std::vector<std::pair<const Realization*, std::string>> instances{{&ground_truth, kGroundTruth}};
  for (std::size_t i = 0; i < S.size(); ++i)
    if (i != tuning_idx) instances.emplace_back(&S.instances[i], instance_id(i));

  const std::size_t n_inst = instances.size();
  std::vector<std::vector<EvaluationRecord>> results(pipelines.size() * n_inst);
  parallel_for(results.size(), settings.bench.threads, [&](std::size_t task) {
    const std::size_t pi = task / n_inst, ii = task % n_inst;
    results[task] = benchmark_config(pipelines[pi].id, tuned[pi], *instances[ii].first, instances[ii].second,
                                     inner, seed);
  });

  std::vector<EvaluationRecord> gt, sim;
  for (std::size_t task = 0; task < results.size(); ++task) {
    auto& dst = (task % n_inst == 0) ? gt : sim;
    for (auto& r : results[task]) dst.push_back(std::move(r));
  }
  const auto key = [](const EvaluationRecord& a, const EvaluationRecord& b) {
    return std::tie(a.instance, a.budget, a.pipeline) < std::tie(b.instance, b.budget, b.pipeline);
  };
  std::sort(gt.begin(), gt.end(), key);
  std::sort(sim.begin(), sim.end(), key);
  out.ground_truth = rank_algorithms(std::move(gt));
  out.simulation = rank_algorithms(std::move(sim));
  out.gt_ranks = mean_ranks(out.ground_truth);
  out.sim_ranks = mean_ranks(out.simulation);
  return out;
}

namespace {

void write_record_rows(std::ostream& os, const std::string& type, const std::vector<EvaluationRecord>& records,
                       const std::string& baseline) {
  for (const auto& r : records) {
    os << type << ',' << r.pipeline << ',' << r.instance << ',' << r.budget << ','
       << (r.rep ? std::to_string(*r.rep) : std::string("mean")) << ',' << format_double(r.best_y) << ','
       << format_double(r.cpu_time) << ',' << format_double(r.memory_bytes) << ','
       << (r.rank ? format_double(*r.rank) : std::string()) << ',' << (r.pipeline == baseline ? "true" : "false")
       << '\n';
  }
}

void write_summary_rows(std::ostream& os, const std::string& type, const std::vector<EvaluationRecord>& records,
                        const std::string& baseline) {
  struct Acc {
    double y = 0, cpu = 0, mem = 0, rank = 0;
    int n = 0;
  };
  std::map<std::pair<std::string, std::size_t>, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[{r.pipeline, r.budget}];
    a.y += r.best_y;
    a.cpu += r.cpu_time;
    a.mem += r.memory_bytes;
    a.rank += r.rank.value_or(0.0);
    ++a.n;
  }
  for (const auto& [k, a] : acc) {
    os << type << ',' << k.first << ',' << k.second << ',' << format_double(a.y / a.n) << ','
       << format_double(a.cpu / a.n) << ',' << format_double(a.mem / a.n) << ',' << format_double(a.rank / a.n)
       << ',' << (k.first == baseline ? "true" : "false") << '\n';
  }
}

}  // namespace

void write_records_csv(std::ostream& os, const CampaignResult& c) {
  os << "objective_type,pipeline,instance,budget,rep,best_y,cpu_time,memory_bytes,rank,baseline\n";
  write_record_rows(os, kGroundTruth, c.ground_truth, c.baseline);
  write_record_rows(os, kSimulation, c.simulation, c.baseline);
}

void write_summary_csv(std::ostream& os, const CampaignResult& c) {
  os << "objective_type,pipeline,budget,best_y,cpu_time,memory_bytes,rank,baseline\n";
  write_summary_rows(os, kGroundTruth, c.ground_truth, c.baseline);
  write_summary_rows(os, kSimulation, c.simulation, c.baseline);
}

void write_ranks_csv(std::ostream& os, const std::map<std::pair<std::string, std::size_t>, double>& ranks) {
  os << "pipeline,budget,rank\n";
  for (const auto& [k, r] : ranks) os << k.first << ',' << k.second << ',' << format_double(r) << '\n';
}

}  // namespace caai
