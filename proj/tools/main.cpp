// Experiment runner for the behaviour-based pick-and-place lab.
//
// Exit codes: 0 success, 1 config error, 2 numeric failure,
// 3 acceptance threshold unmet.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "choreo/harness.hpp"
#include "choreo/oracles.hpp"

using choreo::harness::ConfigError;
using choreo::harness::ExperimentConfig;
using choreo::harness::ExperimentKind;

int main(int argc, char** argv) {
  CLI::App app{"choreo: behaviour-based pick-and-place experiments"};
  app.require_subcommand(1);

  // run <config>
  std::string config_path;
  std::vector<long long> seed_override;
  long long episodes_override = -1;
  std::string out_dir_override, strategy_override, reward_mode_override;
  auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
  run_cmd->add_option("config", config_path, "key=value config file")->required();
  run_cmd->add_option("--seed", seed_override, "override the seed list");
  run_cmd->add_option("--episodes", episodes_override,
                      "override the episode budget for the experiment kind");
  run_cmd->add_option("--out-dir", out_dir_override, "override the output directory");
  run_cmd->add_option("--strategy", strategy_override, "run only this strategy");
  run_cmd->add_option("--reward-mode", reward_mode_override, "dense, sparse or both");

  // expert-check
  long long expert_episodes = 10000;
  auto* expert_cmd =
      app.add_subcommand("expert-check", "success rate of the scripted expert chain");
  expert_cmd->add_option("--episodes", expert_episodes, "number of seeded episodes");

  // oracle-suite
  auto* oracle_cmd =
      app.add_subcommand("oracle-suite", "gradient and estimator oracle checks");

  // compare <summary...>
  std::vector<std::string> summary_paths;
  auto* compare_cmd = app.add_subcommand("compare", "rank strategies from summary files");
  compare_cmd->add_option("summaries", summary_paths, "summary.txt files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = choreo::harness::parse_config_file(config_path);
      if (!seed_override.empty()) {
        cfg.seeds.clear();
        for (long long s : seed_override) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
      if (!strategy_override.empty()) {
        auto s = choreo::behaviours::strategy_from_name(strategy_override);
        if (!s) throw ConfigError("unknown strategy: " + strategy_override);
        cfg.strategies = {*s};
      }
      if (!reward_mode_override.empty()) {
        using choreo::choreographer::RewardMode;
        if (reward_mode_override == "dense") cfg.reward_modes = {RewardMode::Dense};
        else if (reward_mode_override == "sparse") cfg.reward_modes = {RewardMode::Sparse};
        else if (reward_mode_override == "both")
          cfg.reward_modes = {RewardMode::Dense, RewardMode::Sparse};
        else throw ConfigError("unknown reward mode: " + reward_mode_override);
      }
      if (episodes_override > 0) {
        switch (cfg.kind) {
          case ExperimentKind::StrategyCompare: cfg.strategy_budget = episodes_override; break;
          case ExperimentKind::Choreographer: cfg.choreographer_budget = episodes_override; break;
          case ExperimentKind::ExpertCheck: cfg.expert_episodes = episodes_override; break;
          case ExperimentKind::OracleSuite: break;
        }
      }
      return choreo::harness::run(cfg);
    }
    if (*expert_cmd) {
      ExperimentConfig cfg;
      cfg.kind = ExperimentKind::ExpertCheck;
      cfg.expert_episodes = expert_episodes;
      return choreo::harness::run(cfg);
    }
    if (*oracle_cmd) {
      ExperimentConfig cfg;
      cfg.kind = ExperimentKind::OracleSuite;
      return choreo::harness::run(cfg);
    }
    if (*compare_cmd) {
      std::vector<choreo::harness::RunSummary> all;
      for (const auto& path : summary_paths) {
        auto part = choreo::harness::read_summary_file(path);
        all.insert(all.end(), part.begin(), part.end());
      }
      const auto ranking = choreo::harness::compare_strategies(all);
      std::cout << choreo::harness::ranking_report(ranking);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
