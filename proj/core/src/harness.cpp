#include "choreo/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "choreo/oracles.hpp"

namespace choreo::harness {

namespace fs = std::filesystem;
using behaviours::Strategy;
using choreographer::RewardMode;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    return std::stol(v);
  } catch (...) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    return std::stod(v);
  } catch (...) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
}

const char* reward_mode_name(RewardMode m) {
  return m == RewardMode::Dense ? "dense" : "sparse";
}

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
  std::vector<std::uint64_t> s = c.seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw ConfigError("seeds must be distinct");
  if (c.strategy_budget <= 0 || c.choreographer_budget <= 0 || c.expert_episodes <= 0)
    throw ConfigError("episode budgets must be positive");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0))
    throw ConfigError("threshold must be in (0,1]");
  if (c.window <= 0) throw ConfigError("window must be positive");
  if (c.kind == ExperimentKind::StrategyCompare && c.strategies.empty())
    throw ConfigError("strategy list must be non-empty");
  if (c.kind == ExperimentKind::Choreographer && c.reward_modes.empty())
    throw ConfigError("reward mode list must be non-empty");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  c.strategies = {Strategy::Sequential, Strategy::SequentialFreezing, Strategy::Separate,
                  Strategy::SeparateFreezing, Strategy::EndToEnd};
  c.reward_modes = {RewardMode::Dense, RewardMode::Sparse};
  c.seeds = {1, 2, 3};
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (value == "strategy_compare") c.kind = ExperimentKind::StrategyCompare;
      else if (value == "choreographer") c.kind = ExperimentKind::Choreographer;
      else if (value == "expert_check") c.kind = ExperimentKind::ExpertCheck;
      else if (value == "oracle_suite") c.kind = ExperimentKind::OracleSuite;
      else throw ConfigError("unknown kind: " + value);
    } else if (key == "strategies") {
      c.strategies.clear();
      if (value == "all") {
        c.strategies = {Strategy::Sequential, Strategy::SequentialFreezing,
                        Strategy::Separate, Strategy::SeparateFreezing, Strategy::EndToEnd};
      } else {
        for (const auto& name : split(value, ',')) {
          auto s = behaviours::strategy_from_name(trim(name));
          if (!s) throw ConfigError("unknown strategy: " + name);
          c.strategies.push_back(*s);
        }
      }
    } else if (key == "reward_mode") {
      c.reward_modes.clear();
      if (value == "dense") c.reward_modes = {RewardMode::Dense};
      else if (value == "sparse") c.reward_modes = {RewardMode::Sparse};
      else if (value == "both") c.reward_modes = {RewardMode::Dense, RewardMode::Sparse};
      else throw ConfigError("unknown reward_mode: " + value);
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split(value, ','))
        c.seeds.push_back(static_cast<std::uint64_t>(parse_long(trim(s), key)));
    } else if (key == "strategy_budget") {
      c.strategy_budget = parse_long(value, key);
    } else if (key == "choreographer_budget") {
      c.choreographer_budget = parse_long(value, key);
    } else if (key == "expert_episodes") {
      c.expert_episodes = parse_long(value, key);
    } else if (key == "out_dir") {
      c.out_dir = value;
    } else if (key == "behaviour_checkpoint") {
      c.behaviour_checkpoint = value;
    } else if (key == "threshold") {
      c.threshold = parse_double(value, key);
    } else if (key == "window") {
      c.window = static_cast<int>(parse_long(value, key));
    } else if (key == "bc_lr") {
      c.bc_lr = parse_double(value, key);
    } else if (key == "choreo_lr") {
      c.choreo_lr = parse_double(value, key);
    } else if (key == "gamma") {
      c.gamma = parse_double(value, key);
    } else if (key == "lambda") {
      c.lambda = parse_double(value, key);
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::optional<long> episodes_to_threshold(const std::vector<CurvePoint>& curve,
                                          double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must be in (0,1]");
  for (const auto& p : curve)
    if (p.window_success >= threshold) return p.episode;
  return std::nullopt;
}

std::optional<long> episodes_to_task_threshold(const std::vector<CurvePoint>& curve,
                                               double threshold) {
  // Crossings only count once the trailing window is full (100 task-level
  // points); a near-empty window rates a handful of lucky episodes as 1.0.
  constexpr int kMinPoints = 100;
  int task_points = 0;
  for (const auto& p : curve) {
    if (p.phase != PhaseLabel::D && p.phase != PhaseLabel::Choreographer) continue;
    ++task_points;
    if (task_points >= kMinPoints && p.window_success >= threshold) return p.episode;
  }
  return std::nullopt;
}

StrategyRanking compare_strategies(const std::vector<RunSummary>& summaries) {
  std::map<Strategy, std::vector<long>> by_strategy;
  for (const auto& s : summaries) {
    auto strat = behaviours::strategy_from_name(s.name);
    if (!strat) throw std::invalid_argument("not a strategy summary: " + s.name);
    by_strategy[*strat].push_back(
        s.episodes_to_threshold ? *s.episodes_to_threshold : s.budget);
  }
  if (by_strategy.size() < 2)
    throw std::invalid_argument("compare_strategies: need at least two strategies");
  StrategyRanking r;
  for (auto& [strat, vals] : by_strategy) {
    std::sort(vals.begin(), vals.end());
    StrategyRanking::Entry e;
    e.strategy = strat;
    e.median_episodes = vals[(vals.size() - 1) / 2];  // lower median
    e.reached = false;
    for (const auto& s : summaries)
      if (behaviours::strategy_from_name(s.name) == strat && s.episodes_to_threshold)
        e.reached = true;
    r.ordered.push_back(e);
  }
  // Ties resolve to the enum order.
  std::stable_sort(r.ordered.begin(), r.ordered.end(),
                   [](const auto& a, const auto& b) {
                     if (a.median_episodes != b.median_episodes)
                       return a.median_episodes < b.median_episodes;
                     return static_cast<int>(a.strategy) < static_cast<int>(b.strategy);
                   });
  r.separate_freezing_first =
      !r.ordered.empty() && r.ordered.front().strategy == Strategy::SeparateFreezing;
  return r;
}

std::string ranking_report(const StrategyRanking& r) {
  std::string out;
  int rank = 1;
  for (const auto& e : r.ordered) {
    out += std::to_string(rank++);
    out += ". ";
    out += behaviours::strategy_name(e.strategy);
    out += " median_episodes=" + std::to_string(e.median_episodes);
    out += e.reached ? "" : " (threshold never reached)";
    out += "\n";
  }
  out += std::string("separate_freezing_first=") +
         (r.separate_freezing_first ? "true" : "false") + "\n";
  return out;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     int window) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open CSV for writing: " + path);
  f << "# window_size=" << window << "\n";
  f << "episode,window_success,phase\n";
  char buf[32];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.4f", p.window_success);
    f << p.episode << "," << buf << "," << phase_label_name(p.phase) << "\n";
  }
  if (!f) throw std::runtime_error("CSV write failed: " + path);
}

namespace {

std::string summary_line(const RunSummary& s) {
  std::string out = "name=" + s.name + " seed=" + std::to_string(s.seed) +
                    " episodes=" + std::to_string(s.episodes) + " episodes_to_threshold=";
  out += s.episodes_to_threshold ? std::to_string(*s.episodes_to_threshold)
                                 : std::string("none");
  out += std::string(" completed=") + (s.completed ? "1" : "0");
  out += " budget=" + std::to_string(s.budget);
  return out;
}

int run_strategy_compare(const ExperimentConfig& cfg) {
  std::ofstream summary(fs::path(cfg.out_dir) / "summary.txt", std::ios::binary);
  summary << "# choreo summary kind=strategy_compare window=" << cfg.window
          << " threshold=" << cfg.threshold << "\n";
  std::vector<RunSummary> summaries;
  for (Strategy strat : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      behaviours::TrainOptions opts;
      opts.lr = cfg.bc_lr;
      opts.window = cfg.window;
      const auto slog = behaviours::run_strategy(
          behaviours::StrategyPlan::make(strat), cfg.strategy_budget, seed, opts);
      const std::string name = behaviours::strategy_name(strat);
      write_curve_csv(
          (fs::path(cfg.out_dir) / (name + "_seed" + std::to_string(seed) + ".csv")).string(),
          slog.log.curve, cfg.window);
      RunSummary rs{name, seed, slog.total_episodes,
                    episodes_to_task_threshold(slog.log.curve, cfg.threshold),
                    slog.completed, cfg.strategy_budget};
      summaries.push_back(rs);
      summary << summary_line(rs) << "\n";
      summary.flush();
    }
  }
  if (cfg.strategies.size() >= 2) {
    const auto ranking = compare_strategies(summaries);
    std::cout << ranking_report(ranking);
  }
  return 0;
}

int run_choreographer_kind(const ExperimentConfig& cfg) {
  std::ofstream summary(fs::path(cfg.out_dir) / "summary.txt", std::ios::binary);
  summary << "# choreo summary kind=choreographer window=" << cfg.window
          << " threshold=" << cfg.threshold << "\n";
  for (std::uint64_t seed : cfg.seeds) {
    std::string checkpoint;
    if (!cfg.behaviour_checkpoint.empty()) {
      std::ifstream f(cfg.behaviour_checkpoint, std::ios::binary);
      if (!f) throw ConfigError("cannot open checkpoint: " + cfg.behaviour_checkpoint);
      checkpoint.assign((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    } else {
      behaviours::TrainOptions opts;
      opts.lr = cfg.bc_lr;
      opts.window = cfg.window;
      checkpoint = behaviours::run_strategy(
                       behaviours::StrategyPlan::make(Strategy::SeparateFreezing),
                       cfg.strategy_budget, seed, opts)
                       .checkpoint;
    }
    nn::ParameterStore loaded;
    loaded.deserialize(checkpoint);
    const std::string feature_bytes = loaded.serialize("features");

    for (RewardMode mode : cfg.reward_modes) {
      Rng init_rng(seed ^ 0x5eedf00dULL);
      behaviours::BehaviourNet bnet;
      bnet.init(init_rng);
      bnet.store.deserialize(checkpoint);
      choreographer::ChoreographerNet cnet;
      Rng cnet_rng(seed ^ 0x5eedf00dULL);
      cnet.init(feature_bytes, cnet_rng);
      choreographer::ChoreoOptions opts;
      opts.gamma = cfg.gamma;
      opts.lambda = cfg.lambda;
      opts.coefs.lr = cfg.choreo_lr;
      opts.window = cfg.window;
      const auto log = choreographer::train_choreographer(
          cnet, bnet, mode, cfg.choreographer_budget, seed, opts);
      const std::string name = reward_mode_name(mode);
      write_curve_csv(
          (fs::path(cfg.out_dir) / ("choreo_" + name + "_seed" + std::to_string(seed) + ".csv"))
              .string(),
          log.curve, cfg.window);
      RunSummary rs{name, seed, log.episodes_used,
                    episodes_to_task_threshold(log.curve, cfg.threshold), log.completed,
                    cfg.choreographer_budget};
      summary << summary_line(rs) << "\n";
      summary.flush();
      cnet.store.save(
          (fs::path(cfg.out_dir) / ("choreo_" + name + "_seed" + std::to_string(seed) + ".ckpt"))
              .string());
    }
  }
  return 0;
}

}  // namespace

std::vector<RunSummary> read_summary_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open summary file: " + path);
  std::vector<RunSummary> out;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    RunSummary rs;
    for (const auto& tok : split(line, ' ')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (key == "name") rs.name = value;
      else if (key == "seed") rs.seed = static_cast<std::uint64_t>(std::stoll(value));
      else if (key == "episodes") rs.episodes = std::stol(value);
      else if (key == "episodes_to_threshold")
        rs.episodes_to_threshold =
            value == "none" ? std::nullopt : std::optional<long>(std::stol(value));
      else if (key == "completed") rs.completed = (value == "1");
      else if (key == "budget") rs.budget = std::stol(value);
    }
    out.push_back(rs);
  }
  return out;
}

int run(const ExperimentConfig& cfg) {
  try {
    validate(cfg);
    fs::create_directories(cfg.out_dir);
    switch (cfg.kind) {
      case ExperimentKind::StrategyCompare:
        return run_strategy_compare(cfg);
      case ExperimentKind::Choreographer:
        return run_choreographer_kind(cfg);
      case ExperimentKind::ExpertCheck: {
        const double rate = behaviours::expert_chain_success(cfg.expert_episodes);
        std::cout << "expert_chain_success=" << rate << " episodes=" << cfg.expert_episodes
                  << "\n";
        return rate >= 0.99 ? 0 : 3;
      }
      case ExperimentKind::OracleSuite: {
        const auto report = oracles::run_oracle_suite();
        for (const auto& [name, ok] : report.checks)
          std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        return report.all_pass ? 0 : 3;
      }
    }
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace choreo::harness
