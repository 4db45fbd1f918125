// Command-line front end: `sweep` traces the accuracy-disparity trajectory
// over the penalty weight grid, `fit` runs a single penalized fit, and
// `consistency-sim` reproduces the synthetic large-sample behaviour of the
// estimator.  Exit codes: 0 ok, 2 configuration error, 3 data error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairglm/fairglm.hpp"

namespace {

struct SweepCli {
  fairglm::SweepConfig cfg;
  std::string out_dir;
  std::string strategy = "equal_counts";
  std::string kappa = "nominal";
  std::vector<double> grid;
  bool plain_split = false;
  bool dump_penalty = false;
};

void add_common_data_options(CLI::App* cmd, fairglm::SweepConfig& cfg) {
  cmd->add_option("--schema", cfg.schema_path, "dataset schema JSON")
      ->required();
  cmd->add_option("--data", cfg.data_path, "training CSV")->required();
  cmd->add_option("--test-data", cfg.test_data_path,
                  "predefined test CSV; skips random splitting");
  cmd->add_option("--seed", cfg.seed, "master seed (replicate r uses seed+r)");
  cmd->add_option("--test-fraction", cfg.test_fraction,
                  "held-out fraction for random splits")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--max-segments", cfg.max_segments,
                  "segment budget for continuous outcomes")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--exact-pairs", cfg.exact_pairs,
                "assemble the penalty by the direct pairwise sum");
  cmd->add_option("--pair-cap", cfg.pair_cap,
                  "per-cell pair budget (0 = unlimited)");
}

int run_sweep_cmd(const SweepCli& cli) {
  fairglm::SweepConfig cfg = cli.cfg;
  cfg.strategy = fairglm::strategy_from_name(cli.strategy);
  cfg.kappa_policy = fairglm::kappa_policy_from_name(cli.kappa);
  cfg.stratified = !cli.plain_split;
  if (!cli.grid.empty()) cfg.lambda_grid = cli.grid;

  fairglm::SweepResult result = fairglm::run_sweep(cfg);
  fairglm::write_outputs(result, cli.out_dir);
  std::cout << "wrote " << result.rows.size() << " trade-off rows to "
            << cli.out_dir << "\n";
  return 0;
}

int run_fit_cmd(const SweepCli& cli, double lambda, const std::string& out_json) {
  fairglm::SweepConfig cfg = cli.cfg;
  cfg.strategy = fairglm::strategy_from_name(cli.strategy);
  cfg.kappa_policy = fairglm::kappa_policy_from_name(cli.kappa);
  cfg.stratified = !cli.plain_split;
  cfg.lambda_grid = {lambda};
  cfg.replicates = 1;

  fairglm::SweepResult result = fairglm::run_sweep(cfg);
  if (result.rows.empty())
    throw fairglm::data_error("fit produced no result row (see manifest)");
  const fairglm::TradeoffPoint& pt = result.rows.front();

  nlohmann::ordered_json j;
  j["lambda"] = pt.lambda;
  j["converged"] = pt.converged;
  j["iterations"] = pt.iterations;
  j["final_grad_norm"] = pt.final_grad_norm;
  j["train_nll"] = pt.train_nll;
  j["train_penalty"] = pt.train_penalty;
  j["train_d_ell"] = pt.train_d_ell;
  j["train_d_eo"] = pt.train_d_eo;
  j["test_nll"] = pt.test_nll;
  j["test_d_ell"] = pt.test_d_ell;
  j["test_d_eo"] = pt.test_d_eo;
  if (pt.sigma2_hat) j["sigma2_hat"] = *pt.sigma2_hat;
  if (pt.test_auroc) j["test_auroc"] = *pt.test_auroc;
  if (pt.test_mae) j["test_mae"] = *pt.test_mae;
  if (pt.test_misclass) j["test_misclass"] = *pt.test_misclass;
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < pt.per_group.size(); ++g) {
    nlohmann::ordered_json jg;
    jg["group"] = result.group_levels[g];
    jg["nll"] = pt.per_group[g].nll;
    if (pt.per_group[g].metric) jg["metric"] = *pt.per_group[g].metric;
    groups.push_back(jg);
  }
  j["per_group"] = groups;

  if (out_json.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_json);
    if (!out) throw fairglm::data_error("cannot write '" + out_json + "'");
    out << j.dump(2) << "\n";
  }
  return 0;
}

int run_consistency_cmd(const fairglm::ConsistencySimConfig& cfg,
                        const std::string& out_csv) {
  const fairglm::ConsistencyReport report = fairglm::run_consistency_sim(cfg);
  std::printf("%10s %14s %18s %18s %22s\n", "n", "lambda_n", "mean|beta-beta*|",
              "mean|D-Delta|", "mean|beta-beta(0)|");
  for (const auto& row : report.rows)
    std::printf("%10d %14.6g %18.6g %18.6g %22.6g\n", row.n, row.lambda_n,
                row.mean_beta_err, row.mean_d_delta_err,
                row.mean_gap_unpenalized);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw fairglm::data_error("cannot write '" + out_csv + "'");
    out << "n,lambda_n,mean_beta_err,mean_d_delta_err,mean_gap_unpenalized\n";
    for (const auto& row : report.rows) {
      out << row.n << ',' << fairglm::format_double(row.lambda_n) << ','
          << fairglm::format_double(row.mean_beta_err) << ','
          << fairglm::format_double(row.mean_d_delta_err) << ','
          << fairglm::format_double(row.mean_gap_unpenalized) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-fair generalized linear models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fairglm::version_string());

  SweepCli sweep_cli;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "trace the accuracy-disparity trajectory over a lambda grid");
  add_common_data_options(sweep, sweep_cli.cfg);
  sweep->add_option("--out", sweep_cli.out_dir,
                    "output directory (trajectory.csv, manifest.json)")
      ->required();
  sweep->add_option("--lambda-grid", sweep_cli.grid,
                    "comma-separated penalty weights")
      ->delimiter(',');
  sweep->add_option("--replicates", sweep_cli.cfg.replicates,
                    "number of split replicates")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--strategy", sweep_cli.strategy,
                    "continuous segmentation: equal_counts|equal_lengths");
  sweep->add_option("--kappa", sweep_cli.kappa,
                    "penalty normalizer: nominal|nonempty");
  sweep->add_option("--threads", sweep_cli.cfg.threads,
                    "worker threads (output is identical for any value)")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--plain-split", sweep_cli.plain_split,
                  "plain random splits instead of stratified ones");

  SweepCli fit_cli;
  double fit_lambda = 0.0;
  std::string fit_out;
  CLI::App* fitc =
      app.add_subcommand("fit", "single penalized fit on one split");
  add_common_data_options(fitc, fit_cli.cfg);
  fitc->add_option("--lambda", fit_lambda, "penalty weight")
      ->check(CLI::NonNegativeNumber);
  fitc->add_option("--strategy", fit_cli.strategy,
                   "continuous segmentation: equal_counts|equal_lengths");
  fitc->add_option("--kappa", fit_cli.kappa,
                   "penalty normalizer: nominal|nonempty");
  fitc->add_flag("--plain-split", fit_cli.plain_split,
                 "plain random split instead of a stratified one");
  fitc->add_option("--out", fit_out, "write the JSON report here");

  fairglm::ConsistencySimConfig sim_cfg;
  std::string sim_family = "gaussian";
  std::string sim_out;
  CLI::App* sim = app.add_subcommand(
      "consistency-sim", "synthetic large-sample check of the estimator");
  sim->add_option("--family", sim_family, "gaussian|bernoulli");
  sim->add_option("--group-gap", sim_cfg.group_gap, "group mean separation");
  sim->add_option("--n-grid", sim_cfg.n_grid, "sample sizes")->delimiter(',');
  sim->add_option("--lambda0", sim_cfg.lambda0,
                  "penalty scale (lambda_n = lambda0/sqrt(n))");
  sim->add_option("--trials", sim_cfg.trials, "Monte Carlo trials")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_cfg.seed, "RNG seed");
  sim->add_option("--features", sim_cfg.n_features, "feature count")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sweep->parsed()) return run_sweep_cmd(sweep_cli);
    if (fitc->parsed()) return run_fit_cmd(fit_cli, fit_lambda, fit_out);
    if (sim->parsed()) {
      if (sim_family == "gaussian")
        sim_cfg.family = fairglm::FamilyKind::gaussian;
      else if (sim_family == "bernoulli")
        sim_cfg.family = fairglm::FamilyKind::bernoulli;
      else
        throw fairglm::config_error("family must be gaussian or bernoulli");
      return run_consistency_cmd(sim_cfg, sim_out);
    }
  } catch (const fairglm::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const fairglm::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
