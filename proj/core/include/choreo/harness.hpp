#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "choreo/behaviours.hpp"
#include "choreo/choreographer.hpp"
#include "choreo/log.hpp"

namespace choreo::harness {

enum class ExperimentKind { StrategyCompare, Choreographer, ExpertCheck, OracleSuite };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::StrategyCompare;
  std::vector<behaviours::Strategy> strategies;  // StrategyCompare
  std::vector<choreographer::RewardMode> reward_modes;  // Choreographer
  std::vector<std::uint64_t> seeds;
  long strategy_budget = 20000;
  long choreographer_budget = 4000;
  long expert_episodes = 10000;
  std::string out_dir = "out";
  std::string behaviour_checkpoint;  // optional; Choreographer kind
  double threshold = 0.9;
  int window = 100;
  double bc_lr = 3e-4;
  double choreo_lr = 1e-4;
  double gamma = 0.99;
  double lambda = 0.95;
};

// Throws ConfigError on malformed input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plain key=value file; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

struct RunSummary {
  std::string name;  // strategy or reward-mode name
  std::uint64_t seed = 0;
  long episodes = 0;
  std::optional<long> episodes_to_threshold;  // on the full-task curve
  bool completed = false;
  long budget = 0;
};

// First cumulative episode index whose window success reaches the
// threshold, or nullopt.
std::optional<long> episodes_to_threshold(const std::vector<CurvePoint>& curve,
                                          double threshold);
// Same, restricted to full-task phases (d / choreographer).
std::optional<long> episodes_to_task_threshold(const std::vector<CurvePoint>& curve,
                                               double threshold);

struct StrategyRanking {
  struct Entry {
    behaviours::Strategy strategy;
    long median_episodes = 0;  // budget stands in for "never reached"
    bool reached = false;
  };
  std::vector<Entry> ordered;  // fastest first; Table-1 row order breaks ties
  bool separate_freezing_first = false;
};

// Throws std::invalid_argument with fewer than two strategies.
StrategyRanking compare_strategies(const std::vector<RunSummary>& summaries);

std::string ranking_report(const StrategyRanking& r);

// CSV: "# window_size=<n>" comment, then header episode,window_success,phase.
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     int window);

// Exit codes: 0 ok, 1 config error, 2 numeric failure, 3 threshold unmet.
int run(const ExperimentConfig& config);

std::vector<RunSummary> read_summary_file(const std::string& path);

}  // namespace choreo::harness
