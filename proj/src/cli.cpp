#include "caai/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "caai/errors.hpp"
#include "caai/parameters.hpp"

namespace fs = std::filesystem;

namespace caai {

// --- configuration ----------------------------------------------------------

namespace {

void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void get(const YAML::Node& n, const char* key, T& out) {
  const YAML::Node v = n[key];
  if (!v || v.IsNull()) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

void get_path(const YAML::Node& n, const char* key, fs::path& out, const fs::path& base) {
  std::string s;
  get(n, key, s);
  if (s.empty()) return;
  out = fs::path(s).is_relative() && !base.empty() ? base / s : fs::path(s);
}

RatingWeights weights_from(const std::vector<double>& w, const std::string& where) {
  if (w.size() != 3) throw ConfigError(where + " needs three weights (objective, memory, cpu)");
  return {w[0], w[1], w[2]};
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  cognition.master_seed = s;
  plant.seed = s;
  campaign.master_seed = s;
}

void RunConfig::validate() const {
  cognition.validate();
  for (const auto& w : scenarios) w.validate();
  if (plant.weights.size() != kObjectives) throw ConfigError("plant.weights needs three entries");
  validate_weights(plant.weights);
  plant.bounds.validate();
  if (!(plant.noise_sd >= 0.0)) throw ConfigError("plant.noise_sd must be >= 0");
  if (plant.design_reps == 0) throw ConfigError("plant.design_reps must be positive");
  campaign.bench.validate();
  if (campaign.k_instances == 0) throw ConfigError("benchmark.k_instances must be positive");
}

RunConfig parse_run_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& ex) {
    throw ParseError(ex.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  check_keys(root, "config",
             {"seed", "kb", "out", "cycles", "batch_every", "seed_data", "cognition", "rating", "scenarios", "plant",
              "benchmark"});
  std::uint64_t seed = cfg.seed;
  get(root, "seed", seed);
  cfg.apply_seed(seed);
  get_path(root, "kb", cfg.kb_path, base_dir);
  get_path(root, "out", cfg.out_dir, base_dir);
  get_path(root, "seed_data", cfg.seed_data, base_dir);
  get(root, "cycles", cfg.cycles);
  get(root, "batch_every", cfg.batch_every);

  if (const auto c = root["cognition"]) {
    check_keys(c, "cognition",
               {"s", "theta", "epsilon", "k_instances", "tuning_budget", "tuning_reps", "bench_budget", "reps",
                "stagnation_delta", "design", "baseline", "cpu_meter", "threads", "method"});
    auto& g = cfg.cognition;
    get(c, "s", g.s);
    get(c, "theta", g.theta);
    if (c["epsilon"] && !c["epsilon"].IsNull()) {
      double e = 0;
      get(c, "epsilon", e);
      g.epsilon = e;
    }
    get(c, "k_instances", g.k_instances);
    get(c, "tuning_budget", g.tuning_budget);
    get(c, "tuning_reps", g.tuning_reps);
    get(c, "bench_budget", g.bench_budget);
    get(c, "reps", g.reps);
    get(c, "stagnation_delta", g.stagnation_delta);
    get(c, "baseline", g.baseline);
    get(c, "threads", g.threads);
    std::string s;
    if (get(c, "design", s), !s.empty()) g.design = design_kind_from_string(s);
    s.clear();
    if (get(c, "cpu_meter", s), !s.empty()) g.cpu_meter = cpu_meter_from_string(s);
    s.clear();
    if (get(c, "method", s), !s.empty()) g.method = simulation_method_from_string(s);
  }
  if (const auto r = root["rating"]) {
    check_keys(r, "rating", {"objective", "memory", "cpu"});
    get(r, "objective", cfg.cognition.weights.objective);
    get(r, "memory", cfg.cognition.weights.memory);
    get(r, "cpu", cfg.cognition.weights.cpu);
  }
  if (const auto sc = root["scenarios"]) {
    std::vector<std::vector<double>> raw;
    get(root, "scenarios", raw);
    cfg.scenarios.clear();
    for (const auto& w : raw) cfg.scenarios.push_back(weights_from(w, "scenarios"));
  }
  if (const auto p = root["plant"]) {
    check_keys(p, "plant", {"lower", "upper", "weights", "noise_sd", "design_reps", "grid_size"});
    get(p, "lower", cfg.plant.bounds.lo[0]);
    get(p, "upper", cfg.plant.bounds.hi[0]);
    get(p, "weights", cfg.plant.weights);
    get(p, "noise_sd", cfg.plant.noise_sd);
    get(p, "design_reps", cfg.plant.design_reps);
    get(p, "grid_size", cfg.plant.grid_size);
  }
  if (const auto b = root["benchmark"]) {
    check_keys(b, "benchmark",
               {"k_instances", "tuning_budget", "tuning_reps", "bench_budget", "reps", "checkpoints", "cpu_meter",
                "threads", "method"});
    auto& c = cfg.campaign;
    get(b, "k_instances", c.k_instances);
    get(b, "tuning_budget", c.bench.tuning_budget);
    get(b, "tuning_reps", c.bench.tuning_reps);
    get(b, "bench_budget", c.bench.bench_budget);
    get(b, "reps", c.bench.reps);
    get(b, "checkpoints", c.bench.checkpoints);
    get(b, "threads", c.bench.threads);
    std::string s;
    if (get(b, "cpu_meter", s), !s.empty()) c.bench.cpu_meter = cpu_meter_from_string(s);
    s.clear();
    if (get(b, "method", s), !s.empty()) c.method = simulation_method_from_string(s);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string run_config_to_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  const auto num = [](double v) { return format_double(v); };
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  if (!cfg.kb_path.empty()) out << YAML::Key << "kb" << YAML::Value << cfg.kb_path.string();
  out << YAML::Key << "out" << YAML::Value << cfg.out_dir.string();
  if (!cfg.seed_data.empty()) out << YAML::Key << "seed_data" << YAML::Value << cfg.seed_data.string();
  out << YAML::Key << "cycles" << YAML::Value << cfg.cycles;
  out << YAML::Key << "batch_every" << YAML::Value << cfg.batch_every;

  const auto& g = cfg.cognition;
  out << YAML::Key << "cognition" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "s" << YAML::Value << g.s;
  out << YAML::Key << "theta" << YAML::Value << g.theta;
  out << YAML::Key << "epsilon" << YAML::Value;
  if (g.epsilon)
    out << num(*g.epsilon);
  else
    out << YAML::Null;
  out << YAML::Key << "k_instances" << YAML::Value << g.k_instances;
  out << YAML::Key << "tuning_budget" << YAML::Value << g.tuning_budget;
  out << YAML::Key << "tuning_reps" << YAML::Value << g.tuning_reps;
  out << YAML::Key << "bench_budget" << YAML::Value << g.bench_budget;
  out << YAML::Key << "reps" << YAML::Value << g.reps;
  out << YAML::Key << "stagnation_delta" << YAML::Value << num(g.stagnation_delta);
  out << YAML::Key << "design" << YAML::Value << to_string(g.design);
  out << YAML::Key << "baseline" << YAML::Value << g.baseline;
  out << YAML::Key << "cpu_meter" << YAML::Value << to_string(g.cpu_meter);
  out << YAML::Key << "threads" << YAML::Value << g.threads;
  out << YAML::Key << "method" << YAML::Value << to_string(g.method);
  out << YAML::EndMap;

  out << YAML::Key << "rating" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "objective" << YAML::Value << num(g.weights.objective);
  out << YAML::Key << "memory" << YAML::Value << num(g.weights.memory);
  out << YAML::Key << "cpu" << YAML::Value << num(g.weights.cpu);
  out << YAML::EndMap;

  out << YAML::Key << "scenarios" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : cfg.scenarios)
    out << YAML::Flow << YAML::BeginSeq << num(w.objective) << num(w.memory) << num(w.cpu) << YAML::EndSeq;
  out << YAML::EndSeq;

  const auto& p = cfg.plant;
  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lower" << YAML::Value << num(p.bounds.lo[0]);
  out << YAML::Key << "upper" << YAML::Value << num(p.bounds.hi[0]);
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : p.weights) out << num(w);
  out << YAML::EndSeq;
  out << YAML::Key << "noise_sd" << YAML::Value << num(p.noise_sd);
  out << YAML::Key << "design_reps" << YAML::Value << p.design_reps;
  out << YAML::Key << "grid_size" << YAML::Value << p.grid_size;
  out << YAML::EndMap;

  const auto& c = cfg.campaign;
  out << YAML::Key << "benchmark" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "k_instances" << YAML::Value << c.k_instances;
  out << YAML::Key << "tuning_budget" << YAML::Value << c.bench.tuning_budget;
  out << YAML::Key << "tuning_reps" << YAML::Value << c.bench.tuning_reps;
  out << YAML::Key << "bench_budget" << YAML::Value << c.bench.bench_budget;
  out << YAML::Key << "reps" << YAML::Value << c.bench.reps;
  out << YAML::Key << "checkpoints" << YAML::Value << YAML::Flow << c.bench.checkpoints;
  out << YAML::Key << "cpu_meter" << YAML::Value << to_string(c.bench.cpu_meter);
  out << YAML::Key << "threads" << YAML::Value << c.bench.threads;
  out << YAML::Key << "method" << YAML::Value << to_string(c.method);
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

KnowledgeBase load_configured_kb(const RunConfig& cfg) {
  return cfg.kb_path.empty() ? default_kb() : load_kb(cfg.kb_path);
}

std::vector<SeedRow> load_configured_seed(const RunConfig& cfg) {
  return load_seed_csv(cfg.seed_data.empty() ? default_seed_csv() : cfg.seed_data);
}

// --- commands ---------------------------------------------------------------

namespace {

void prepare_out(const fs::path& dir, std::initializer_list<fs::path> files, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory '" + dir.string() + "': " + ec.message());
  if (force) return;
  for (const auto& f : files)
    if (fs::exists(dir / f)) throw ConfigError((dir / f).string() + " exists; pass --force to overwrite");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

std::string weights_label(const RatingWeights& w) {
  return "(" + format_double(w.objective) + ", " + format_double(w.memory) + ", " + format_double(w.cpu) + ")";
}

}  // namespace

void cmd_init(const fs::path& dir, bool force) {
  prepare_out(dir, {"kb.yaml", "config.yaml"}, force);
  save_kb(default_kb(), dir / "kb.yaml");
  RunConfig cfg;
  cfg.kb_path = "kb.yaml";
  cfg.out_dir = "caai-out";
  auto out = open_out(dir / "config.yaml");
  out << run_config_to_yaml(cfg);
  if (!out) throw IOError("failed writing config.yaml");
  spdlog::info("wrote {} and {}", (dir / "kb.yaml").string(), (dir / "config.yaml").string());
}

RunOutcome cmd_run(const RunConfig& cfg, bool force) {
  cfg.validate();
  KnowledgeBase kb = load_configured_kb(cfg);
  const auto rows = load_configured_seed(cfg);
  VpsSimulator plant(rows, cfg.plant);
  prepare_out(cfg.out_dir, {"run.jsonl", "kb.yaml"}, force);

  RunOutcome res;
  res.log_path = cfg.out_dir / "run.jsonl";
  auto log = open_out(res.log_path);
  RunLogWriter writer(log);
  writer.bootstrap(bootstrap(res.state, plant, cfg.cognition));
  spdlog::info("bootstrap recorded {} cycles", res.state.d.size());
  for (std::size_t i = 0; i < cfg.cycles; ++i) {
    if (cfg.batch_every > 0 && i > 0 && i % cfg.batch_every == 0) {
      plant.new_batch();
      spdlog::info("new plant batch {}", plant.batch());
    }
    const StepReport r = step(res.state, plant, kb, cfg.cognition);
    writer.step(r);
    log.flush();
    spdlog::debug("step {}: x = {}, objective = {}, p_best = {}", r.iteration, r.cycles.back().x, r.objective,
                  r.p_best.value_or("none"));
    if (r.selection) spdlog::info("selection at step {}: p_best = {}", r.iteration, r.p_best.value_or("none"));
  }
  if (!log) throw IOError("failed writing run log");
  save_kb(kb, cfg.out_dir / "kb.yaml");
  res.kb = std::move(kb);
  return res;
}

CampaignResult vps_campaign(const RunConfig& cfg) {
  cfg.validate();
  const KnowledgeBase kb = load_configured_kb(cfg);
  const auto rows = load_configured_seed(cfg);
  VpsSettings ps = cfg.plant;
  ps.noise_sd = 0.0;
  const VpsSimulator vps(rows, ps);
  const Realization gt = vps.aggregate_realization();
  const Dataset data = seed_dataset(rows, ps.bounds, ps.weights);

  const auto& goal = cfg.cognition.goal;
  const auto templates = determine_feasible(compose_pipelines(kb, goal), kb, goal, data.size());
  std::vector<CandidatePipeline> pipes;
  for (const auto& t : templates) pipes.push_back(CandidatePipeline::from_template(t, kb, goal.path()));
  return run_campaign(gt, data, pipes, cfg.cognition.baseline, cfg.campaign);
}

CampaignResult cmd_benchmark(const RunConfig& cfg, bool force) {
  cfg.validate();
  prepare_out(cfg.out_dir, {"records.csv", "summary.csv", "ranks_ground_truth.csv", "ranks_simulation.csv"}, force);
  CampaignResult c = vps_campaign(cfg);
  {
    auto os = open_out(cfg.out_dir / "records.csv");
    write_records_csv(os, c);
  }
  {
    auto os = open_out(cfg.out_dir / "summary.csv");
    write_summary_csv(os, c);
  }
  {
    auto os = open_out(cfg.out_dir / "ranks_ground_truth.csv");
    write_ranks_csv(os, c.gt_ranks);
  }
  {
    auto os = open_out(cfg.out_dir / "ranks_simulation.csv");
    write_ranks_csv(os, c.sim_ranks);
  }
  spdlog::info("benchmarked {} pipelines on the ground truth and {} instances", c.pipelines.size(),
               cfg.campaign.k_instances);
  return c;
}

CampaignCsv read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read '" + path.string() + "'");
  std::string line;
  const std::string header = "objective_type,pipeline,instance,budget,rep,best_y,cpu_time,memory_bytes,rank,baseline";
  if (!std::getline(in, line) || line != header) throw MalformedInput(path.string() + ": unexpected header");
  CampaignCsv out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw MalformedInput(path.string() + ": line " + std::to_string(lineno) + " has bad arity");
    EvaluationRecord r;
    try {
      r.pipeline = f[1];
      r.instance = f[2];
      r.budget = std::stoul(f[3]);
      if (f[4] != "mean") r.rep = std::stoi(f[4]);
      r.best_y = std::stod(f[5]);
      r.cpu_time = std::stod(f[6]);
      r.memory_bytes = std::stod(f[7]);
      if (!f[8].empty()) r.rank = std::stod(f[8]);
    } catch (const std::logic_error&) {
      throw MalformedInput(path.string() + ": line " + std::to_string(lineno) + " has a bad number");
    }
    if (f[9] == "true") out.baseline = r.pipeline;
    if (f[0] == kGroundTruth)
      out.ground_truth.push_back(std::move(r));
    else if (f[0] == kSimulation)
      out.simulation.push_back(std::move(r));
    else
      throw MalformedInput(path.string() + ": unknown objective type '" + f[0] + "'");
  }
  if (out.ground_truth.empty() && out.simulation.empty()) throw MalformedInput(path.string() + " holds no records");
  return out;
}

namespace {

std::vector<EvaluationRecord> ensure_ranked(std::vector<EvaluationRecord> recs) {
  if (std::all_of(recs.begin(), recs.end(), [](const auto& r) { return r.rank.has_value(); })) return recs;
  return rank_algorithms(std::move(recs));
}

// Per-budget ratings of one objective type under each weight scenario.
void rating_tables(std::ostream& text, std::ostream& csv, const std::vector<EvaluationRecord>& recs,
                   const std::string& baseline, const std::vector<RatingWeights>& scenarios) {
  std::set<std::size_t> budgets;
  for (const auto& r : recs) budgets.insert(r.budget);
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const auto& w = scenarios[si];
    text << "\nAggregate ranks, weights " << weights_label(w) << "\n";
    for (std::size_t b : budgets) {
      std::vector<EvaluationRecord> at;
      for (const auto& r : recs)
        if (r.budget == b) at.push_back(r);
      const auto res = rate_pipelines(at, baseline, w);
      text << "  budget " << b << ":";
      if (res.table.survivors.empty()) text << " no pipeline beats the baseline (empty survivor set)";
      for (const auto& id : res.table.survivors)
        text << " " << *res.table.find(id)->rank << "." << id << " (" << fixed(res.table.find(id)->aggregate, 3)
             << ")";
      text << "\n";
      std::ostringstream rows;
      write_rating_csv(rows, res.table);
      std::string row;
      std::istringstream rs(rows.str());
      std::getline(rs, row);
      while (std::getline(rs, row))
        csv << (si + 1) << ',' << format_double(w.objective) << ',' << format_double(w.memory) << ','
            << format_double(w.cpu) << ',' << b << ',' << row << '\n';
    }
  }
}

std::string campaign_report(const fs::path& records, const RunConfig& cfg, const fs::path& out) {
  CampaignCsv c = read_records_csv(records);
  if (c.baseline.empty()) throw MalformedInput(records.string() + " flags no baseline pipeline");
  c.ground_truth = ensure_ranked(std::move(c.ground_truth));
  c.simulation = ensure_ranked(std::move(c.simulation));
  const auto gt = mean_ranks(c.ground_truth);
  const auto sim = mean_ranks(c.simulation);

  std::ostringstream text;
  text << "Campaign report for " << records.filename().string() << "\n";
  text << "Baseline: " << c.baseline << "\n\n";
  std::vector<double> a, b;
  for (const auto& [k, v] : gt) {
    const auto it = sim.find(k);
    if (it == sim.end()) continue;
    a.push_back(v);
    b.push_back(it->second);
  }
  text << "Pearson correlation of ground-truth and simulation ranks\n";
  try {
    const auto p = pearson_correlation(a, b);
    text << "  r = " << fixed(p.r, 4) << ", 95% CI [" << fixed(p.ci_lo, 3) << ", " << fixed(p.ci_hi, 3)
         << "], t = " << fixed(p.t, 3) << ", df = " << p.df << ", p = " << sci(p.p) << "\n";
    auto os = open_out(out / "correlation.csv");
    os << "r,ci_lo,ci_hi,t,df,p,n\n"
       << format_double(p.r) << ',' << format_double(p.ci_lo) << ',' << format_double(p.ci_hi) << ','
       << format_double(p.t) << ',' << p.df << ',' << format_double(p.p) << ',' << a.size() << '\n';
  } catch (const DegenerateInput& ex) {
    text << "  undefined: " << ex.what() << "\n";
  }

  {
    auto csv = open_out(out / "aggregate_ranks.csv");
    csv << "scenario,w_objective,w_memory,w_cpu,budget,"
           "pipeline,improvement,mem_ratio,cpu_ratio,norm_obj,norm_mem,norm_cpu,aggregate,rank,status\n";
    text << "\nGround truth";
    rating_tables(text, csv, c.ground_truth, c.baseline, cfg.scenarios);
  }

  {
    auto csv = open_out(out / "trajectories.csv");
    csv << "objective_type,pipeline,budget,best_y,cpu_time,memory_bytes\n";
    for (const auto* set : {&c.ground_truth, &c.simulation}) {
      struct Acc {
        double y = 0, cpu = 0, mem = 0;
        int n = 0;
      };
      std::map<std::pair<std::string, std::size_t>, Acc> acc;
      for (const auto& r : *set) {
        auto& x = acc[{r.pipeline, r.budget}];
        x.y += r.best_y;
        x.cpu += r.cpu_time;
        x.mem += r.memory_bytes;
        ++x.n;
      }
      const std::string type = set == &c.ground_truth ? kGroundTruth : kSimulation;
      for (const auto& [k, x] : acc)
        csv << type << ',' << k.first << ',' << k.second << ',' << format_double(x.y / x.n) << ','
            << format_double(x.cpu / x.n) << ',' << format_double(x.mem / x.n) << '\n';
    }
  }
  return text.str();
}

std::string runlog_report(const fs::path& log_path, const RunConfig& cfg, const fs::path& out) {
  std::ifstream in(log_path);
  if (!in) throw IOError("cannot read '" + log_path.string() + "'");
  struct Cycle {
    std::size_t cycle;
    std::optional<std::size_t> iteration;
    double x, objective;
  };
  struct Selection {
    std::size_t iteration, after_cycle;
    std::string p_best;
    std::vector<std::string> survivors;
    std::vector<EvaluationRecord> records;
  };
  std::vector<Cycle> cycles;
  std::vector<Selection> selections;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = log_path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "cycle") {
        Cycle c{j.at("cycle").get<std::size_t>(), std::nullopt, j.at("x").get<double>(),
                j.at("objective").get<double>()};
        if (!j.at("iteration").is_null()) c.iteration = j["iteration"].get<std::size_t>();
        if (!cycles.empty() && c.cycle <= cycles.back().cycle)
          throw MalformedInput(where + ": cycle indices must increase");
        cycles.push_back(c);
      } else if (type == "selection") {
        Selection s{j.at("iteration").get<std::size_t>(), j.at("after_cycle").get<std::size_t>(),
                    j.at("p_best").is_null() ? std::string() : j["p_best"].get<std::string>(),
                    j.at("survivors").get<std::vector<std::string>>(),
                    {}};
        const std::size_t seen = cycles.empty() ? 0 : cycles.back().cycle;
        if (s.after_cycle > seen) throw MalformedInput(where + ": selection refers to unlogged cycles");
        for (const auto& r : j.at("records")) {
          EvaluationRecord e;
          e.pipeline = r.at("pipeline").get<std::string>();
          e.instance = r.at("instance").get<std::string>();
          e.budget = r.at("budget").get<std::size_t>();
          e.best_y = r.at("best_y").get<double>();
          e.memory_bytes = r.at("memory_bytes").get<double>();
          e.cpu_time = r.at("cpu_time").get<double>();
          s.records.push_back(std::move(e));
        }
        selections.push_back(std::move(s));
      } else {
        throw MalformedInput(where + ": unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw MalformedInput(where + ": " + ex.what());
    }
  }
  if (cycles.empty()) throw MalformedInput(log_path.string() + " holds no cycles");

  std::size_t bootstrap_cycles = 0;
  double initial_best = std::numeric_limits<double>::infinity();
  for (const auto& c : cycles)
    if (!c.iteration) {
      ++bootstrap_cycles;
      initial_best = std::min(initial_best, c.objective);
    }
  {
    auto csv = open_out(out / "cycles.csv");
    csv << "cycle,iteration,x,objective,normalized,best_so_far\n";
    std::vector<double> hist;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cycles) {
      hist.push_back(c.objective);
      best = std::min(best, c.objective);
      csv << c.cycle << ',' << (c.iteration ? std::to_string(*c.iteration) : std::string()) << ','
          << format_double(c.x) << ',' << format_double(c.objective) << ','
          << format_double(normalize_signal(c.objective, hist)) << ',' << format_double(best) << '\n';
    }
  }
  {
    auto csv = open_out(out / "selections.csv");
    csv << "iteration,after_cycle,p_best,survivors\n";
    for (const auto& s : selections) {
      std::string surv;
      for (const auto& id : s.survivors) surv += (surv.empty() ? "" : ";") + id;
      csv << s.iteration << ',' << s.after_cycle << ',' << s.p_best << ',' << surv << '\n';
    }
  }

  double final_best = initial_best;
  for (const auto& c : cycles) final_best = std::min(final_best, c.objective);
  std::ostringstream text;
  text << "Run report for " << log_path.filename().string() << "\n";
  text << "Cycles: " << cycles.size() << " (" << bootstrap_cycles << " initial design)\n";
  text << "Selection cycles: " << selections.size() << "\n";
  if (bootstrap_cycles > 0) text << "Best aggregate of the initial design: " << fixed(initial_best, 6) << "\n";
  text << "Best aggregate overall: " << fixed(final_best, 6) << "\n";
  auto csv = open_out(out / "aggregate_ranks.csv");
  csv << "scenario,w_objective,w_memory,w_cpu,iteration,"
         "pipeline,improvement,mem_ratio,cpu_ratio,norm_obj,norm_mem,norm_cpu,aggregate,rank,status\n";
  for (const auto& s : selections) {
    text << "\nSelection at step " << s.iteration << " (after cycle " << s.after_cycle
         << "): p_best = " << (s.p_best.empty() ? "none" : s.p_best) << "\n";
    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
      const auto& w = cfg.scenarios[si];
      std::string baseline = cfg.cognition.baseline;
      const auto res = rate_pipelines(s.records, baseline, w);
      text << "  weights " << weights_label(w) << ":";
      if (res.table.survivors.empty()) text << " empty survivor set";
      for (const auto& id : res.table.survivors) text << " " << *res.table.find(id)->rank << "." << id;
      text << "\n";
      std::ostringstream rows;
      write_rating_csv(rows, res.table);
      std::istringstream rs(rows.str());
      std::string row;
      std::getline(rs, row);
      while (std::getline(rs, row))
        csv << (si + 1) << ',' << format_double(w.objective) << ',' << format_double(w.memory) << ','
            << format_double(w.cpu) << ',' << s.iteration << ',' << row << '\n';
    }
  }
  return text.str();
}

}  // namespace

std::string cmd_report(const fs::path& input, const RunConfig& cfg, const fs::path& out, bool force) {
  fs::path source = input;
  if (fs::is_directory(input)) {
    if (fs::exists(input / "records.csv"))
      source = input / "records.csv";
    else if (fs::exists(input / "run.jsonl"))
      source = input / "run.jsonl";
    else
      throw IOError(input.string() + " holds neither records.csv nor run.jsonl");
  }
  if (!fs::exists(source)) throw IOError("cannot read '" + source.string() + "'");
  const bool campaign = source.extension() == ".csv";
  if (campaign)
    prepare_out(out, {"report.txt", "correlation.csv", "aggregate_ranks.csv", "trajectories.csv"}, force);
  else
    prepare_out(out, {"report.txt", "cycles.csv", "selections.csv", "aggregate_ranks.csv"}, force);
  const std::string text = campaign ? campaign_report(source, cfg, out) : runlog_report(source, cfg, out);
  auto os = open_out(out / "report.txt");
  os << text;
  return text;
}

void cmd_simulate(const RunConfig& cfg, bool force) {
  cfg.validate();
  const auto rows = load_configured_seed(cfg);
  VpsSettings ps = cfg.plant;
  ps.noise_sd = 0.0;
  const VpsSimulator vps(rows, ps);
  const std::size_t k = cfg.campaign.k_instances;
  prepare_out(cfg.out_dir, {"ground_truth.csv", "instance_0.csv"}, force);
  {
    auto os = open_out(cfg.out_dir / "ground_truth.csv");
    os << "x,f1,f2,f3,aggregate\n";
    const auto& grid = vps.curves()[0].grid;
    for (double x : grid) {
      const auto f = vps.ground_truth(x);
      os << format_double(x) << ',' << format_double(f[0]) << ',' << format_double(f[1]) << ','
         << format_double(f[2]) << ',' << format_double(vps.weighted(f)) << '\n';
    }
  }
  const Dataset data = seed_dataset(rows, ps.bounds, ps.weights);
  const auto S = generate_test_functions(data, k, cfg.campaign.method, cfg.seed, true, ps.grid_size);
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto os = open_out(cfg.out_dir / ("instance_" + std::to_string(i) + ".csv"));
    S.instances[i].write_csv(os);
  }
  spdlog::info("wrote the ground truth and {} instances to {}", S.size(), cfg.out_dir.string());
}

// --- entry point ------------------------------------------------------------

namespace {

void setup_logging() {
  auto logger = spdlog::get("caai");
  if (!logger) logger = spdlog::stderr_color_mt("caai");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("CAAI_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    throw ConfigError("CAAI_LOG_LEVEL must be error, info or debug, got '" + level + "'");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Online algorithm selection for a simulated production process", "caai"};
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  app.add_option("--config", config_path, "YAML run configuration");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--force", force, "Overwrite existing outputs");
  app.require_subcommand(1, 1);
  app.fallthrough();

  auto* init = app.add_subcommand("init", "Write a template knowledge base and run configuration");
  auto* run = app.add_subcommand("run", "Run the selection loop on the simulated plant");
  std::optional<std::size_t> cycles, theta;
  std::optional<double> epsilon;
  run->add_option("--cycles", cycles, "Loop steps after the initial design");
  run->add_option("--theta", theta, "Selection step size in cycles");
  run->add_option("--epsilon", epsilon, "Application threshold in parameter units");
  auto* bench = app.add_subcommand("benchmark", "Benchmark the portfolio on ground truth and simulations");
  auto* report = app.add_subcommand("report", "Summarize a campaign or a run log");
  std::string input;
  report->add_option("input", input, "records.csv, run.jsonl, or a directory holding one")->required();
  auto* simulate = app.add_subcommand("simulate", "Dump ground-truth curves and simulation instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    setup_logging();
    if (init->parsed()) {
      cmd_init(out.empty() ? fs::path(".") : fs::path(out), force);
      return 0;
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.apply_seed(*seed);
    if (!out.empty()) cfg.out_dir = out;
    if (run->parsed()) {
      if (cycles) cfg.cycles = *cycles;
      if (theta) cfg.cognition.theta = *theta;
      if (epsilon) cfg.cognition.epsilon = *epsilon;
      const auto res = cmd_run(cfg, force);
      std::cout << "wrote " << res.log_path.string() << " (" << res.state.d.size() << " cycles)\n";
    } else if (bench->parsed()) {
      const auto c = cmd_benchmark(cfg, force);
      const auto p = c.correlation();
      std::cout << "rank correlation r = " << fixed(p.r, 4) << ", p = " << sci(p.p) << "\n";
    } else if (report->parsed()) {
      const fs::path in(input);
      const fs::path dest = !out.empty() ? fs::path(out) : (fs::is_directory(in) ? in : in.parent_path());
      std::cout << cmd_report(in, cfg, dest.empty() ? fs::path(".") : dest, force);
    } else if (simulate->parsed()) {
      cmd_simulate(cfg, force);
    }
    return 0;
  } catch (const ConfigurationError& ex) {
    spdlog::error("{}", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 3;
  }
}

}  // namespace caai
