#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "caai/cli.hpp"
#include "caai/errors.hpp"

using namespace caai;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("caai_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  setenv("CAAI_LOG_LEVEL", "error", 1);
  args.insert(args.begin(), "caai");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

RunConfig small_run(const fs::path& out) {
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.cycles = 5;
  cfg.plant.design_reps = 1;
  auto& c = cfg.cognition;
  c.s = 3;
  c.theta = 4;
  c.k_instances = 2;
  c.tuning_budget = 0;
  c.bench_budget = 10;
  c.reps = 1;
  return cfg;
}

const char* kHeader = "objective_type,pipeline,instance,budget,rep,best_y,cpu_time,memory_bytes,rank,baseline\n";

}  // namespace

TEST_CASE("config parsing applies defaults and overrides") {
  const auto cfg = parse_run_config(R"(
seed: 9
cycles: 4
cognition:
  theta: 6
  epsilon: 12.5
  design: lhs
rating: {objective: 0.6, memory: 0.2, cpu: 0.2}
scenarios: [[0.9, 0.05, 0.05]]
benchmark:
  checkpoints: [5, 10]
  bench_budget: 10
)");
  CHECK(cfg.seed == 9);
  CHECK(cfg.cognition.master_seed == 9);
  CHECK(cfg.plant.seed == 9);
  CHECK(cfg.campaign.master_seed == 9);
  CHECK(cfg.cycles == 4);
  CHECK(cfg.cognition.theta == 6);
  CHECK(*cfg.cognition.epsilon == doctest::Approx(12.5));
  CHECK(cfg.cognition.design == DesignKind::Lhs);
  CHECK(cfg.cognition.weights.objective == doctest::Approx(0.6));
  REQUIRE(cfg.scenarios.size() == 1);
  CHECK(cfg.scenarios[0].objective == doctest::Approx(0.9));
  CHECK(cfg.campaign.bench.checkpoints == std::vector<std::size_t>{5, 10});
  CHECK(cfg.cognition.s == 12);

  CHECK(parse_run_config("").cycles == 36);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_run_config("cycles: 3\nbogus: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("cognition: {thetaa: 3}\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("cycles: [1, 2\n"), ParseError);
  CHECK_THROWS_AS(parse_run_config("cycles: many\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("cognition: {theta: 1}\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("rating: {objective: 0.9, memory: 0.3, cpu: 0.1}\n"), ConfigurationError);
  CHECK_THROWS_AS(parse_run_config("scenarios: [[1, 0]]\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("cognition: {design: sobol}\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/caai.yaml"), ConfigError);
}

TEST_CASE("config yaml round trip") {
  RunConfig cfg;
  cfg.apply_seed(42);
  cfg.cognition.epsilon = 3.25;
  cfg.cognition.design = DesignKind::Lhs;
  cfg.scenarios = {{0.7, 0.2, 0.1}};
  cfg.campaign.bench.checkpoints = {12, 36};
  const std::string text = run_config_to_yaml(cfg);
  const RunConfig back = parse_run_config(text);
  CHECK(run_config_to_yaml(back) == text);
  CHECK(back.seed == 42);
  CHECK(*back.cognition.epsilon == 3.25);
}

TEST_CASE("init writes a loadable template and refuses to overwrite") {
  TempDir tmp("init");
  cmd_init(tmp.path, false);
  const RunConfig cfg = load_run_config(tmp.path / "config.yaml");
  CHECK(cfg.kb_path == tmp.path / "kb.yaml");
  const auto kb = load_configured_kb(cfg);
  CHECK(kb == default_kb());

  CHECK_THROWS_AS(cmd_init(tmp.path, false), ConfigError);
  CHECK_NOTHROW(cmd_init(tmp.path, true));

  CHECK(cli({"init", "--out", tmp.path.string()}) == 2);
  CHECK(cli({"--force", "init", "--out", tmp.path.string()}) == 0);
}

TEST_CASE("run with zero cycles logs only the initial design") {
  TempDir tmp("run0");
  auto cfg = small_run(tmp.path / "out");
  cfg.cycles = 0;
  const auto res = cmd_run(cfg, false);
  CHECK(res.state.d.size() == 3);
  CHECK(res.state.iteration == 0);
  const std::string log = slurp(res.log_path);
  CHECK(log.find("\"selection\"") == std::string::npos);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
  CHECK(fs::exists(tmp.path / "out" / "kb.yaml"));
}

TEST_CASE("run is reproducible and reportable") {
  TempDir tmp("run");
  const auto a = cmd_run(small_run(tmp.path / "a"), false);
  const auto b = cmd_run(small_run(tmp.path / "b"), false);
  CHECK(slurp(a.log_path) == slurp(b.log_path));
  CHECK(slurp(tmp.path / "a" / "kb.yaml") == slurp(tmp.path / "b" / "kb.yaml"));
  CHECK_THROWS_AS(cmd_run(small_run(tmp.path / "a"), false), ConfigError);

  auto other = small_run(tmp.path / "c");
  other.apply_seed(2);
  cmd_run(other, false);
  CHECK(slurp(a.log_path) != slurp(tmp.path / "c" / "run.jsonl"));

  const std::string text = cmd_report(tmp.path / "a", small_run(tmp.path / "a"), tmp.path / "a", false);
  CHECK(text.find("Cycles: 8 (3 initial design)") != std::string::npos);
  const std::string cycles = slurp(tmp.path / "a" / "cycles.csv");
  CHECK(std::count(cycles.begin(), cycles.end(), '\n') == 9);
  const std::string sel = slurp(tmp.path / "a" / "selections.csv");
  CHECK(sel.rfind("iteration,after_cycle,p_best,survivors\n0,3,", 0) == 0);
  CHECK_THROWS_AS(cmd_report(tmp.path / "a", small_run(tmp.path / "a"), tmp.path / "a", false), ConfigError);
}

TEST_CASE("report on identical rankings gives r = 1") {
  TempDir tmp("ident");
  {
    std::ofstream os(tmp.path / "records.csv");
    os << kHeader;
    const std::vector<std::pair<std::string, double>> pipes{{"RandomSearch", 0.5}, {"A", 0.3}, {"B", 0.4}};
    for (std::size_t b : {6, 12})
      for (const auto& [id, y] : pipes) {
        const double v = y / static_cast<double>(b);
        os << "ground_truth," << id << ",ground_truth," << b << ",mean," << v << ",1,100,,"
           << (id == "RandomSearch" ? "true" : "false") << "\n";
        for (int i = 0; i < 2; ++i)
          os << "simulation," << id << ",sim_" << i << "," << b << ",mean," << v * (1 + i) << ",1,100,,"
             << (id == "RandomSearch" ? "true" : "false") << "\n";
      }
  }
  RunConfig cfg;
  const std::string text = cmd_report(tmp.path / "records.csv", cfg, tmp.path, false);
  CHECK(text.find("r = 1.0000") != std::string::npos);
  const std::string corr = slurp(tmp.path / "correlation.csv");
  CHECK(corr.find("\n1,") != std::string::npos);
  const std::string agg = slurp(tmp.path / "aggregate_ranks.csv");
  CHECK(agg.find("1,0.8,0.1,0.1,6,A,") != std::string::npos);
  CHECK(fs::exists(tmp.path / "trajectories.csv"));
}

TEST_CASE("baseline-only campaign report") {
  TempDir tmp("baseonly");
  {
    std::ofstream os(tmp.path / "records.csv");
    os << kHeader;
    os << "ground_truth,RandomSearch,ground_truth,6,mean,0.5,1,100,1,true\n";
    os << "simulation,RandomSearch,sim_0,6,mean,0.4,1,100,1,true\n";
    os << "simulation,RandomSearch,sim_1,6,mean,0.3,1,100,1,true\n";
  }
  const std::string text = cmd_report(tmp.path, RunConfig{}, tmp.path, false);
  CHECK(text.find("undefined") != std::string::npos);
  CHECK(text.find("empty survivor set") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "correlation.csv"));
}

TEST_CASE("malformed report inputs") {
  TempDir tmp("bad");
  {
    std::ofstream os(tmp.path / "records.csv");
    os << "pipeline,best_y\nA,1\n";
  }
  CHECK_THROWS_AS(read_records_csv(tmp.path / "records.csv"), MalformedInput);
  {
    std::ofstream os(tmp.path / "records.csv");
    os << kHeader << "ground_truth,A,gt,6,mean,oops,1,1,,true\n";
  }
  CHECK_THROWS_AS(read_records_csv(tmp.path / "records.csv"), MalformedInput);
  {
    std::ofstream os(tmp.path / "run.jsonl");
    os << R"({"type":"cycle","cycle":2,"iteration":null,"x":1,"objective":1})" << "\n"
       << R"({"type":"cycle","cycle":1,"iteration":null,"x":1,"objective":1})" << "\n";
  }
  CHECK_THROWS_AS(cmd_report(tmp.path / "run.jsonl", RunConfig{}, tmp.path / "r", false), MalformedInput);
  CHECK_THROWS_AS(cmd_report(tmp.path / "missing.jsonl", RunConfig{}, tmp.path / "r", false), IOError);
}

TEST_CASE("exit codes") {
  TempDir tmp("exit");
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  CHECK(cli({"--config", (tmp.path / "none.yaml").string(), "run"}) == 2);
  CHECK(cli({"report", (tmp.path / "none.csv").string()}) == 3);
  setenv("CAAI_LOG_LEVEL", "chatty", 1);
  std::vector<std::string> args{"caai", "report", "x"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  CHECK(run_cli(3, argv.data()) == 2);
  setenv("CAAI_LOG_LEVEL", "error", 1);
}
