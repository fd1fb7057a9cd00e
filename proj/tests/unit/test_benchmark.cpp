#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "caai/benchmark.hpp"
#include "caai/errors.hpp"

using namespace caai;

namespace {

Dataset small_data() {
  const std::vector<double> xs{0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(std::sin(6.0 * x) + 0.5 * x);
  return Dataset::one_d(xs, ys, 0.0, 1.0);
}

EvaluationRecord rec(std::string p, std::string inst, std::size_t budget, double y) {
  EvaluationRecord r;
  r.pipeline = std::move(p);
  r.instance = std::move(inst);
  r.budget = budget;
  r.best_y = y;
  return r;
}

BenchmarkSettings quick_settings() {
  BenchmarkSettings s;
  s.tuning_budget = 2;
  s.tuning_reps = 1;
  s.bench_budget = 12;
  s.reps = 2;
  s.checkpoints = {6, 12};
  s.cpu_meter = CpuMeter::ModeledWork;
  return s;
}

}  // namespace

TEST_CASE("mid ranks") {
  const double v[] = {3.0, 1.0, 2.0};
  CHECK(mid_ranks(v) == std::vector<double>{3.0, 1.0, 2.0});
  const double t[] = {1.0, 2.0, 2.0, 5.0};
  CHECK(mid_ranks(t) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  const double all[] = {7.0, 7.0, 7.0};
  CHECK(mid_ranks(all) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("rank_algorithms groups, sums and errors") {
  std::vector<EvaluationRecord> recs{rec("A", "i1", 6, 1.0), rec("B", "i1", 6, 0.5), rec("C", "i1", 6, 0.5),
                                     rec("A", "i1", 12, 0.1), rec("B", "i1", 12, 0.2), rec("C", "i1", 12, 0.3),
                                     rec("A", "i2", 6, 9.0), rec("B", "i2", 6, 8.0), rec("C", "i2", 6, 7.0)};
  const auto ranked = rank_algorithms(recs);
  std::map<std::pair<std::string, std::size_t>, double> sums;
  for (const auto& r : ranked) {
    REQUIRE(r.rank);
    sums[{r.instance, r.budget}] += *r.rank;
    if (r.instance == "i1" && r.budget == 6) {
      if (r.pipeline == "A") CHECK(*r.rank == 3.0);
      else CHECK(*r.rank == 1.5);
    }
  }
  for (const auto& [g, s] : sums) CHECK(s == 6.0);

  auto dup = recs;
  dup.push_back(rec("A", "i1", 6, 0.0));
  CHECK_THROWS_AS(rank_algorithms(dup), DuplicatePipelineInGroup);

  std::vector<EvaluationRecord> agg{rec("A", "i", 6, 0.0), rec("B", "i", 6, 0.0)};
  agg[0].aggregate = 0.2;
  agg[1].aggregate = 0.9;
  const auto ra = rank_algorithms(agg, RankBy::Aggregate);
  for (const auto& r : ra) CHECK(*r.rank == (r.pipeline == "B" ? 1.0 : 2.0));
}

TEST_CASE("pearson against a direct computation") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> b{2, 1, 4, 3, 7, 8, 6, 5};
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double r = sab / std::sqrt(saa * sbb);
  const auto res = pearson_correlation(a, b);
  CHECK(res.r == doctest::Approx(r).epsilon(1e-12));
  CHECK(res.df == 6);
  CHECK(res.t == doctest::Approx(r * std::sqrt(6.0 / (1 - r * r))));
  // Fisher interval, computed by hand.
  const double z = std::atanh(r), se = 1.0 / std::sqrt(5.0);
  CHECK(res.ci_lo == doctest::Approx(std::tanh(z - 1.959963984540054 * se)));
  CHECK(res.ci_hi == doctest::Approx(std::tanh(z + 1.959963984540054 * se)));
  CHECK(res.p > 0.0);
  CHECK(res.p < 0.05);

  const auto same = pearson_correlation(a, a);
  CHECK(same.r == doctest::Approx(1.0));
  CHECK(same.p == 0.0);

  const std::vector<double> flat(8, 1.0);
  CHECK_THROWS_AS(pearson_correlation(a, flat), DegenerateInput);
  CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DegenerateInput);
  CHECK_THROWS_AS(pearson_correlation(a, std::vector<double>{1, 2, 3}), DegenerateInput);
}

TEST_CASE("pearson p-value for a textbook case") {
  // r = 0.5 with n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, two-sided p = 0.0980.
  const auto res = pearson_from_r(0.5, 12);
  CHECK(res.t == doctest::Approx(1.825742).epsilon(1e-6));
  CHECK(res.p == doctest::Approx(0.09799).epsilon(1e-3));
}

TEST_CASE("published correlation statistics are reproduced from r and n") {
  // 66 rank pairs whose coefficient gives t = 11.575 on 64 degrees of freedom.
  const double t = 11.575;
  const double r = t / std::sqrt(t * t + 64.0);
  const auto res = pearson_from_r(r, 66);
  CHECK(res.df == 64);
  CHECK(res.t == doctest::Approx(11.575).epsilon(1e-9));
  CHECK(r == doctest::Approx(0.823).epsilon(1e-3));
  CHECK(res.p < 2.2e-16);
  CHECK(res.ci_lo == doctest::Approx(0.7245).epsilon(2e-3));
  CHECK(res.ci_hi == doctest::Approx(0.8878).epsilon(2e-3));

  // The same through data: a vector with exactly that correlation.
  std::vector<double> a(66), e(66), b(66);
  for (std::size_t i = 0; i < 66; ++i) {
    a[i] = static_cast<double>(i);
    e[i] = std::sin(1.7 * i) + 0.3 * std::cos(5.1 * i);
  }
  auto center = [](std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    for (double& x : v) x -= m;
  };
  center(a);
  center(e);
  // Orthogonalize e against a, then mix at the target angle.
  const double ae = std::inner_product(a.begin(), a.end(), e.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  for (std::size_t i = 0; i < 66; ++i) e[i] -= ae / aa * a[i];
  const double ee = std::inner_product(e.begin(), e.end(), e.begin(), 0.0);
  for (std::size_t i = 0; i < 66; ++i) b[i] = r * a[i] / std::sqrt(aa) + std::sqrt(1 - r * r) * e[i] / std::sqrt(ee);
  const auto data = pearson_correlation(a, b);
  CHECK(data.r == doctest::Approx(r).epsilon(1e-12));
  CHECK(data.t == doctest::Approx(11.575).epsilon(1e-6));
}

TEST_CASE("settings validation") {
  BenchmarkSettings s = quick_settings();
  CHECK_NOTHROW(s.validate());
  s.checkpoints = {6, 48};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = quick_settings();
  s.reps = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(cpu_meter_from_string(to_string(CpuMeter::ModeledWork)) == CpuMeter::ModeledWork);
  CHECK(cpu_meter_from_string("thread") == CpuMeter::ThreadClock);
}

TEST_CASE("test instances") {
  const Dataset d = small_data();
  const auto S = generate_test_functions(d, 4, SimulationMethod::Decomposition, 5, true, 64);
  CHECK(S.size() == 4);
  std::set<std::uint64_t> seeds;
  for (const auto& r : S.instances) {
    CHECK(r.kind == RealizationKind::Unconditional);
    CHECK(r.grid.size() == 64);
    CHECK(r.lo() == 0.0);
    CHECK(r.hi() == 1.0);
    seeds.insert(r.seed);
  }
  CHECK(seeds.size() == 4);
  const auto again = generate_test_functions(d, 4, SimulationMethod::Decomposition, 5, true, 64);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.instances[i].values == S.instances[i].values);

  CHECK(generate_test_functions(d, 0, SimulationMethod::Decomposition, 5).empty());
}

TEST_CASE("instance pair and tune_then_benchmark") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [a, b] = draw_instance_pair(5, seed);
    CHECK(a < 5);
    CHECK(b < 5);
    CHECK(a != b);
  }
  CHECK_THROWS_AS(draw_instance_pair(1, 3), InstanceSetTooSmall);

  const Dataset d = small_data();
  const auto S = generate_test_functions(d, 3, SimulationMethod::Decomposition, 9, true, 64);
  const auto pipe = CandidatePipeline::from_algorithm(Algorithm::HillClimber);
  const auto s = quick_settings();
  const auto recs = tune_then_benchmark(pipe, S, s, 11);
  REQUIRE(recs.size() == 2);
  const auto [ti, bi] = draw_instance_pair(S.size(), 11);
  (void)ti;
  for (const auto& r : recs) {
    CHECK(r.pipeline == pipe.id);
    CHECK(r.instance == instance_id(bi));
  }
  CHECK(recs[0].budget == 6);
  CHECK(recs[1].budget == 12);
  CHECK(recs[1].best_y <= recs[0].best_y);

  const auto one = generate_test_functions(d, 1, SimulationMethod::Decomposition, 9, true, 64);
  CHECK_THROWS_AS(tune_then_benchmark(pipe, one, s, 11), InstanceSetTooSmall);
}

TEST_CASE("tuning") {
  const Dataset d = small_data();
  const auto S = generate_test_functions(d, 2, SimulationMethod::Decomposition, 2, true, 64);
  auto s = quick_settings();

  SUBCASE("random search has nothing to tune") {
    const auto c = tune(CandidatePipeline::from_algorithm(Algorithm::RandomSearch), S.instances[0], s, 1);
    CHECK(c == OptimizerConfig::defaults(Algorithm::RandomSearch).completed());
  }
  SUBCASE("zero budget keeps defaults") {
    s.tuning_budget = 0;
    const auto c = tune(CandidatePipeline::from_algorithm(Algorithm::DifferentialEvolution), S.instances[0], s, 1);
    CHECK(c == OptimizerConfig::defaults(Algorithm::DifferentialEvolution).completed());
  }
  SUBCASE("budget one returns an in-range configuration") {
    s.tuning_budget = 1;
    const auto pipe = CandidatePipeline::from_algorithm(Algorithm::GeneralizedSA);
    const auto c = tune(pipe, S.instances[0], s, 3);
    CHECK(c.algorithm == Algorithm::GeneralizedSA);
    CHECK_NOTHROW(c.completed());
    CHECK(tune(pipe, S.instances[0], s, 3) == c);
  }
}

TEST_CASE("benchmark records and memory shapes") {
  const Dataset d = small_data();
  const auto S = generate_test_functions(d, 1, SimulationMethod::Decomposition, 4, true, 64);
  BenchmarkSettings s = quick_settings();
  s.bench_budget = 36;
  s.checkpoints = {12, 24, 36};
  const auto rs = benchmark_config("RandomSearch", OptimizerConfig::defaults(Algorithm::RandomSearch), S.instances[0],
                                   "gt", s, 1);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0].memory_bytes == rs[1].memory_bytes);
  CHECK(rs[1].memory_bytes == rs[2].memory_bytes);
  CHECK(rs[0].best_y >= rs[2].best_y);
  for (const auto& r : rs) CHECK(r.cpu_time >= 0.0);

  const auto kr = benchmark_config("KrigingSBO", OptimizerConfig::defaults(Algorithm::KrigingSBO), S.instances[0],
                                   "gt", s, 1);
  REQUIRE(kr.size() == 3);
  CHECK(kr[2].memory_bytes >= 3.0 * kr[0].memory_bytes);
  CHECK(kr[0].cpu_time < kr[2].cpu_time);

  const auto again = benchmark_config("KrigingSBO", OptimizerConfig::defaults(Algorithm::KrigingSBO), S.instances[0],
                                      "gt", s, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again[i].best_y == kr[i].best_y);
    CHECK(again[i].memory_bytes == kr[i].memory_bytes);
    CHECK(again[i].cpu_time == kr[i].cpu_time);
  }
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw RangeError("seven");
                               }),
                  RangeError);
  parallel_for(0, 4, [](std::size_t) { FAIL("never called"); });
}

TEST_CASE("campaign: serial and parallel agree, schema and ranks") {
  const Dataset d = small_data();
  const auto gt_set = generate_test_functions(d, 1, SimulationMethod::Decomposition, 1234, true, 64);
  const Realization& gt = gt_set.instances[0];
  std::vector<CandidatePipeline> ps;
  for (auto a : {Algorithm::RandomSearch, Algorithm::HillClimber, Algorithm::DifferentialEvolution})
    ps.push_back(CandidatePipeline::from_algorithm(a));

  CampaignSettings cs;
  cs.bench = quick_settings();
  cs.k_instances = 2;
  cs.master_seed = 3;
  const auto serial = run_campaign(gt, d, ps, "RandomSearch", cs);
  cs.bench.threads = 3;
  const auto parallel = run_campaign(gt, d, ps, "RandomSearch", cs);

  REQUIRE(serial.ground_truth.size() == parallel.ground_truth.size());
  REQUIRE(serial.simulation.size() == parallel.simulation.size());
  auto same = [](const EvaluationRecord& a, const EvaluationRecord& b) {
    return a.pipeline == b.pipeline && a.instance == b.instance && a.budget == b.budget && a.best_y == b.best_y &&
           a.memory_bytes == b.memory_bytes && a.rank == b.rank && a.tuned_params == b.tuned_params;
  };
  for (std::size_t i = 0; i < serial.ground_truth.size(); ++i)
    CHECK(same(serial.ground_truth[i], parallel.ground_truth[i]));
  for (std::size_t i = 0; i < serial.simulation.size(); ++i) CHECK(same(serial.simulation[i], parallel.simulation[i]));

  // 3 pipelines x 2 checkpoints on the ground truth, x 2 instances simulated.
  CHECK(serial.ground_truth.size() == 6);
  CHECK(serial.simulation.size() == 12);
  std::set<std::string> insts;
  for (const auto& r : serial.simulation) insts.insert(r.instance);
  CHECK(insts.size() == 2);
  for (const auto& r : serial.ground_truth) CHECK(r.instance == kGroundTruth);

  // Per budget the mean ranks sum to n(n+1)/2.
  for (std::size_t b : {6, 12}) {
    double gs = 0, ss = 0;
    for (const auto& p : ps) {
      gs += serial.gt_ranks.at({p.id, b});
      ss += serial.sim_ranks.at({p.id, b});
    }
    CHECK(gs == doctest::Approx(6.0));
    CHECK(ss == doctest::Approx(6.0));
  }

  std::ostringstream rec_csv, sum_csv, rank_csv;
  write_records_csv(rec_csv, serial);
  write_summary_csv(sum_csv, serial);
  write_ranks_csv(rank_csv, serial.gt_ranks);
  CHECK(rec_csv.str().rfind("objective_type,pipeline,instance,budget,rep,best_y,cpu_time,memory_bytes,rank,baseline\n",
                            0) == 0);
  CHECK(sum_csv.str().rfind("objective_type,pipeline,budget,best_y,cpu_time,memory_bytes,rank,baseline\n", 0) == 0);
  CHECK(rank_csv.str().rfind("pipeline,budget,rank\n", 0) == 0);
  // Header plus 3 x 2 rows per objective type.
  const std::string summary = sum_csv.str();
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 13);
  CHECK(summary.find("RandomSearch,6,") != std::string::npos);
  CHECK(summary.find(",true\n") != std::string::npos);

  CHECK_THROWS_AS(run_campaign(gt, d, ps, "Nope", cs), MissingBaseline);
}
