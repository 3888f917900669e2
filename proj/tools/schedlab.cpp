// Command-line front end: train a scheduler, evaluate it against the
// baseline, run the baseline or the exhaustive oracle alone, export CDF
// data, or run the invariant self-check.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "schedlab/harness.hpp"

namespace {

struct CommonArgs {
  std::string profile = "desk";
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

schedlab::ScenarioConfig resolve_config(const CommonArgs& args) {
  schedlab::ScenarioConfig cfg = schedlab::load_scenario(args.profile, args.config_path);
  if (args.seed.has_value()) cfg.seed = *args.seed;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--profile", args.profile, "scenario profile: desk or paper")
      ->default_val("desk");
  cmd->add_option("--config", args.config_path, "JSON config overriding the profile");
  cmd->add_option("--seed", args.seed, "override the scenario seed");
}

int cmd_train(const CommonArgs& args, const std::string& out_dir) {
  const auto cfg = resolve_config(args);
  schedlab::run_training(cfg, out_dir, &std::cout);
  std::cout << "checkpoints and metrics written to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint_path,
                 const std::string& out_path, int n_envs) {
  const auto cfg = resolve_config(args);
  const auto net = schedlab::load_checkpoint(checkpoint_path);
  const int n = n_envs > 0 ? n_envs : cfg.schedule.eval_envs;
  const auto report = schedlab::evaluate_against_baseline(cfg, net, n);
  std::cout << "environments: " << report.per_env.size()
            << ", baseline-zero excluded: " << report.n_baseline_zero
            << "\nmedian ratio: " << report.median_ratio
            << ", mean ratio: " << report.mean_ratio
            << "\nmean learned reward: " << report.mean_learned
            << ", mean baseline reward: " << report.mean_baseline << "\n";
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open " + out_path + " for writing");
    os << schedlab::report_to_json(report).dump(2) << "\n";
    std::cout << "report written to " << out_path << "\n";
  }
  return 0;
}

int cmd_baseline(const CommonArgs& args, int n_envs) {
  const auto cfg = resolve_config(args);
  const schedlab::TbsTable table;
  const schedlab::MiBlepModel model(table);
  const auto scenario = schedlab::make_env_scenario(cfg, table);
  const int n = n_envs > 0 ? n_envs : cfg.schedule.eval_envs;
  schedlab::Rng root = schedlab::Rng(cfg.seed).fork(4);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto env = schedlab::sample_environment(scenario, root.fork(i));
    const auto alloc = schedlab::pftf_schedule(env, cfg.max_coscheduled, table, model);
    acc += schedlab::evaluate_decision(env, alloc, cfg.max_coscheduled, table, model)
               .reward;
  }
  std::cout << "mean baseline reward over " << n << " environments: " << acc / n << "\n";
  return 0;
}

int cmd_oracle(const CommonArgs& args, int n_envs, double budget) {
  const auto cfg = resolve_config(args);
  const schedlab::TbsTable table;
  const schedlab::MiBlepModel model(table);
  const schedlab::ActionTable actions(cfg.n_user, cfg.max_coscheduled);
  const auto scenario = schedlab::make_env_scenario(cfg, table);
  const int n = n_envs > 0 ? n_envs : 10;
  schedlab::Rng root = schedlab::Rng(cfg.seed).fork(4);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto env = schedlab::sample_environment(scenario, root.fork(i));
    const auto oracle = schedlab::exhaustive_oracle(env, actions, table, model, budget);
    std::cout << "env " << i << ": optimal reward " << oracle.max_reward << "\n";
    acc += oracle.max_reward;
  }
  std::cout << "mean optimal reward over " << n << " environments: " << acc / n << "\n";
  return 0;
}

int cmd_export_cdf(const std::string& report_path, const std::string& out_path) {
  std::ifstream is(report_path);
  if (!is) throw std::runtime_error("cannot open " + report_path);
  nlohmann::json j;
  is >> j;
  std::vector<double> ratios;
  for (const auto& e : j.at("per_env")) {
    const double baseline = e.at("baseline_reward").get<double>();
    if (baseline > 0.0) ratios.push_back(e.at("ratio").get<double>());
  }
  schedlab::export_cdf(ratios, out_path);
  std::cout << ratios.size() << " ratios exported to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MU-MIMO downlink scheduling laboratory"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, base_args, oracle_args;
  std::string train_out = "runs/latest";
  std::string eval_checkpoint, eval_out;
  int eval_envs = 0, base_envs = 0, oracle_envs = 0;
  double oracle_budget = 1e6;
  std::string cdf_report, cdf_out = "cdf.csv";

  auto* train = app.add_subcommand("train", "self-play training run");
  add_common(train, train_args);
  train->add_option("--out", train_out, "output directory for checkpoints and metrics");

  auto* evaluate = app.add_subcommand("evaluate", "greedy model vs baseline comparison");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  evaluate->add_option("--out", eval_out, "write the full JSON report here");
  evaluate->add_option("--n-envs", eval_envs, "environment count (default: profile)");

  auto* baseline = app.add_subcommand("baseline", "baseline scheduler alone");
  add_common(baseline, base_args);
  baseline->add_option("--n-envs", base_envs, "environment count (default: profile)");

  auto* oracle = app.add_subcommand("oracle", "exhaustive optimal scheduling");
  add_common(oracle, oracle_args);
  oracle->add_option("--n-envs", oracle_envs, "environment count (default: 10)");
  oracle->add_option("--budget", oracle_budget, "maximum leaves to enumerate");

  auto* cdf = app.add_subcommand("export-cdf", "normalized-reward CDF from a report");
  cdf->add_option("--report", cdf_report, "JSON report from evaluate --out")->required();
  cdf->add_option("--out", cdf_out, "CSV output path");

  auto* selfcheck = app.add_subcommand("selfcheck", "run the invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args, train_out);
    if (evaluate->parsed())
      return cmd_evaluate(eval_args, eval_checkpoint, eval_out, eval_envs);
    if (baseline->parsed()) return cmd_baseline(base_args, base_envs);
    if (oracle->parsed()) return cmd_oracle(oracle_args, oracle_envs, oracle_budget);
    if (cdf->parsed()) return cmd_export_cdf(cdf_report, cdf_out);
    if (selfcheck->parsed()) return schedlab::run_selfcheck(std::cout) ? 0 : 2;
  } catch (const schedlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
