#pragma once

// Run configuration and the command implementations behind the caai binary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "caai/benchmark.hpp"
#include "caai/cognition.hpp"
#include "caai/plant.hpp"
#include "caai/rating.hpp"

namespace caai {

struct RunConfig {
  std::uint64_t seed = 1;
  /// Empty means the built-in knowledge base.
  std::filesystem::path kb_path;
  std::filesystem::path out_dir = "caai-out";
  std::size_t cycles = 36;
  CognitionConfig cognition;
  /// Weight scenarios for the aggregate-rank report.
  std::vector<RatingWeights> scenarios{{0.8, 0.1, 0.1}, {0.5, 0.25, 0.25}};
  VpsSettings plant;
  /// Start a new plant batch every this many loop steps; 0 never.
  std::size_t batch_every = 0;
  /// Empty means the bundled seed dataset.
  std::filesystem::path seed_data;
  CampaignSettings campaign;

  /// Pushes the master seed into every component.
  void apply_seed(std::uint64_t s);
  /// Throws ConfigurationError.
  void validate() const;
};

/// Relative paths in the document resolve against `base_dir`. Throws
/// ParseError or ConfigError.
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_yaml(const RunConfig& cfg);

KnowledgeBase load_configured_kb(const RunConfig& cfg);
std::vector<SeedRow> load_configured_seed(const RunConfig& cfg);

/// Writes kb.yaml and config.yaml. Existing files are only replaced with
/// `force`.
void cmd_init(const std::filesystem::path& dir, bool force);

struct RunOutcome {
  CognitionState state;
  KnowledgeBase kb;
  std::filesystem::path log_path;
};

/// Bootstraps the loop on the simulated plant, runs cfg.cycles steps, and
/// writes run.jsonl and the final kb.yaml into cfg.out_dir.
RunOutcome cmd_run(const RunConfig& cfg, bool force);

/// Campaign of every feasible knowledge-base pipeline on the noise-free
/// plant aggregate (ground truth) and on simulations of the seed data.
CampaignResult vps_campaign(const RunConfig& cfg);

/// Campaign on the plant ground truth and its simulations; writes
/// records.csv, summary.csv, ranks_ground_truth.csv, ranks_simulation.csv.
CampaignResult cmd_benchmark(const RunConfig& cfg, bool force);

/// Reads a campaign records.csv or a run.jsonl (or a directory holding one)
/// and writes report.txt plus CSV tables into `out`. Returns the report text.
std::string cmd_report(const std::filesystem::path& input, const RunConfig& cfg, const std::filesystem::path& out,
                       bool force);

/// Dumps the ground-truth curves and the simulation instances as CSV.
void cmd_simulate(const RunConfig& cfg, bool force);

/// Records of a campaign records.csv. Throws IOError or MalformedInput.
struct CampaignCsv {
  std::string baseline;
  std::vector<EvaluationRecord> ground_truth;
  std::vector<EvaluationRecord> simulation;
};
CampaignCsv read_records_csv(const std::filesystem::path& path);

/// Entry point of the binary; returns the process exit code (0 ok, 2
/// configuration error, 3 runtime error).
int run_cli(int argc, char** argv);

}  // namespace caai
