#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fairglm/fairglm.hpp"

using namespace fairglm;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

struct TempDataset {
  std::string schema_path;
  std::string data_path;
  std::string extra_path;  // second sample from the same process
};

// binary outcome, two groups with shifted feature distributions
TempDataset make_dataset(int n, std::uint64_t seed) {
  const auto dir = fs::temp_directory_path();
  TempDataset td;
  td.schema_path = (dir / ("fairglm_sweep_schema_" + std::to_string(seed) + ".json")).string();
  td.data_path = (dir / ("fairglm_sweep_data_" + std::to_string(seed) + ".csv")).string();
  td.extra_path = (dir / ("fairglm_sweep_extra_" + std::to_string(seed) + ".csv")).string();

  std::ofstream schema(td.schema_path);
  schema << R"({
  "outcome": "y", "outcome_type": "binary", "sensitive": "g",
  "features": [
    {"name": "x1", "kind": "continuous"},
    {"name": "x2", "kind": "continuous"},
    {"name": "x3", "kind": "continuous"}
  ]
})";
  schema.close();

  Rng rng(seed);
  for (const std::string* path : {&td.data_path, &td.extra_path}) {
    std::ofstream out(*path);
    out << "y,g,x1,x2,x3\n";
    for (int i = 0; i < n; ++i) {
      const int g = rng.uniform() < 0.5 ? 0 : 1;
      const double shift = g == 0 ? -0.4 : 0.4;
      const double x1 = rng.normal() + shift;
      const double x2 = rng.normal();
      const double x3 = rng.normal() - shift;
      const double eta = 0.2 + 0.9 * x1 - 0.6 * x2 + 0.3 * x3;
      const int y = rng.uniform() < logistic(eta) ? 1 : 0;
      out << y << ',' << (g == 0 ? "a" : "b") << ',' << format_double(x1)
          << ',' << format_double(x2) << ',' << format_double(x3) << '\n';
    }
  }
  return td;
}

SweepConfig small_config(const TempDataset& td) {
  SweepConfig cfg;
  cfg.schema_path = td.schema_path;
  cfg.data_path = td.data_path;
  cfg.lambda_grid = {0.0, 0.1, 1.0};
  cfg.replicates = 2;
  cfg.seed = 11;
  return cfg;
}

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

bool rows_identical(const std::vector<TradeoffPoint>& a,
                    const std::vector<TradeoffPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TradeoffPoint& x = a[i];
    const TradeoffPoint& y = b[i];
    if (x.replicate != y.replicate || x.lambda != y.lambda ||
        x.converged != y.converged || x.iterations != y.iterations ||
        x.final_grad_norm != y.final_grad_norm || x.train_nll != y.train_nll ||
        x.train_penalty != y.train_penalty || x.train_d_ell != y.train_d_ell ||
        x.train_d_eo != y.train_d_eo || x.test_nll != y.test_nll ||
        x.test_mse != y.test_mse || x.test_d_ell != y.test_d_ell ||
        x.test_d_eo != y.test_d_eo)
      return false;
    if (!same_opt(x.sigma2_hat, y.sigma2_hat) ||
        !same_opt(x.test_mae, y.test_mae) ||
        !same_opt(x.test_auroc, y.test_auroc) ||
        !same_opt(x.test_misclass, y.test_misclass) ||
        !same_opt(x.test_d_metric, y.test_d_metric))
      return false;
    if (x.per_group.size() != y.per_group.size()) return false;
    for (std::size_t g = 0; g < x.per_group.size(); ++g) {
      if (x.per_group[g].nll != y.per_group[g].nll ||
          !same_opt(x.per_group[g].metric, y.per_group[g].metric))
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("default grid is zero plus twenty log-spaced weights") {
  const auto grid = default_lambda_grid();
  REQUIRE(grid.size() == 21);
  CHECK(grid[0] == 0.0);
  CHECK(grid[1] == Approx(1e-3).margin(1e-18));
  CHECK(grid.back() == Approx(10.0).margin(1e-12));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("parallel dispatch covers every index once and surfaces errors") {
  std::vector<int> hits(100, 0);
  detail::parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(detail::parallel_for(20, 4,
                                       [&](std::size_t i) {
                                         if (i == 13)
                                           throw std::runtime_error("boom");
                                       }),
                  std::runtime_error);
}

TEST_CASE("sweep rows come out ordered with one penalty build per replicate") {
  const TempDataset td = make_dataset(200, 5);
  const SweepConfig cfg = small_config(td);
  const auto before = penalty_build_counter().load();
  const SweepResult res = run_sweep(cfg);
  CHECK(penalty_build_counter().load() - before == 2);
  CHECK(res.manifest.at("penalty_builds").get<std::uint64_t>() == 2);

  REQUIRE(res.rows.size() == 6);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    CHECK(res.rows[i].replicate == static_cast<int>(i / 3));
    CHECK(res.rows[i].lambda == cfg.lambda_grid[i % 3]);
    CHECK(res.rows[i].converged);
    CHECK(res.rows[i].per_group.size() == 2);
    CHECK(res.rows[i].test_auroc.has_value());
    CHECK_FALSE(res.rows[i].sigma2_hat.has_value());
  }
  CHECK(res.group_levels == std::vector<std::string>{"a", "b"});

  // the penalized ends of each replicate trade likelihood for fairness
  for (int r = 0; r < 2; ++r) {
    const TradeoffPoint& base = res.rows[r * 3];
    const TradeoffPoint& top = res.rows[r * 3 + 2];
    CHECK(top.train_penalty <= base.train_penalty + 1e-8);
    CHECK(top.train_nll >= base.train_nll - 1e-8);
  }
  CHECK(res.manifest.at("monotonicity").at("train_penalty_nonincreasing").get<bool>());
  CHECK(res.manifest.at("monotonicity").at("train_nll_nondecreasing").get<bool>());
  CHECK(res.manifest.at("replicates").size() == 2);
  CHECK(res.manifest.at("replicates")[0].at("seed").get<std::uint64_t>() == 11);
  CHECK(res.manifest.at("replicates")[1].at("seed").get<std::uint64_t>() == 12);
  CHECK_FALSE(res.manifest.contains("timing"));
  CHECK_FALSE(res.manifest.contains("threads"));
}

TEST_CASE("sweep rows reproduce a standalone pipeline run") {
  const TempDataset td = make_dataset(200, 6);
  const SweepConfig cfg = small_config(td);
  const SweepResult res = run_sweep(cfg);

  // redo replicate 0 by hand with the same protocol
  const DatasetSchema schema = DatasetSchema::from_json_file(cfg.schema_path);
  const Dataset data = load_csv(cfg.data_path, schema);
  SplitOptions sopt;
  sopt.test_fraction = cfg.test_fraction;
  sopt.seed = cfg.seed;
  const auto [train_d, test_d] = split(data, sopt);
  const auto [train, test] = encode(train_d, test_d);
  const Family fam = family_for_outcome(schema.outcome_type, 0);
  const Segmentation seg =
      discretize(train.y, train.groups, train.n_groups(), schema.outcome_type,
                 cfg.max_segments, cfg.strategy);
  PenaltyOptions popt;
  popt.subsample_seed = cfg.seed;
  const PenaltyMatrix pen = build_penalty_matrix(
      train.X, build_pair_sets(seg, train.y, train.groups, train.n_groups()),
      popt);

  for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
    FitConfig fc;
    fc.lambda = cfg.lambda_grid[li];
    const FittedModel model = fit(train.X, train.y, fam, pen.D, fc);
    const TradeoffPoint& row = res.rows[li];
    CHECK(row.iterations == model.iterations);
    CHECK(row.converged == model.converged);
    CHECK(row.final_grad_norm == model.final_gradient_norm);
    CHECK(row.train_penalty == model.train_penalty_value);
    CHECK(row.train_nll == Approx(model.train_nll).margin(1e-14));
  }

  // the lambda = 0 fit ignores the penalty matrix entirely
  const FittedModel plain = fit(train.X, train.y, fam, Matrix());
  FitConfig fc0;
  const FittedModel with_d = fit(train.X, train.y, fam, pen.D, fc0);
  CHECK((plain.beta.array() == with_d.beta.array()).all());
}

TEST_CASE("sweep output is independent of the thread count") {
  const TempDataset td = make_dataset(150, 7);
  SweepConfig cfg = small_config(td);
  cfg.threads = 1;
  const SweepResult one = run_sweep(cfg);
  cfg.threads = 4;
  const SweepResult four = run_sweep(cfg);
  CHECK(rows_identical(one.rows, four.rows));
  CHECK(one.manifest.dump() == four.manifest.dump());
}

TEST_CASE("a fixed test file bypasses the splitter") {
  const TempDataset td = make_dataset(150, 8);
  SweepConfig cfg = small_config(td);
  cfg.test_data_path = td.extra_path;
  const SweepResult res = run_sweep(cfg);
  REQUIRE(res.rows.size() == 6);
  // both replicates see identical data, so their rows coincide exactly
  for (int li = 0; li < 3; ++li) {
    CHECK(res.rows[li].train_nll == res.rows[3 + li].train_nll);
    CHECK(res.rows[li].test_nll == res.rows[3 + li].test_nll);
  }
  CHECK(res.manifest.at("replicates")[0].at("n_train").get<int>() == 150);
  CHECK(res.manifest.at("replicates")[0].at("n_test").get<int>() == 150);
}

TEST_CASE("trajectory files round-trip through the csv layer") {
  const TempDataset td = make_dataset(150, 9);
  const SweepConfig cfg = small_config(td);
  const SweepResult res = run_sweep(cfg);
  const auto out_dir =
      (fs::temp_directory_path() / "fairglm_sweep_out").string();
  fs::remove_all(out_dir);
  write_outputs(res, out_dir);

  const CsvTable t = read_csv(out_dir + "/trajectory.csv");
  REQUIRE(t.header == trajectory_header(2));
  REQUIRE(t.rows.size() == res.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    // 17 significant digits reproduce the doubles bit for bit
    CHECK(*detail::parse_double(t.rows[i][1]) == res.rows[i].lambda);
    CHECK(*detail::parse_double(t.rows[i][5]) == res.rows[i].train_nll);
    CHECK(*detail::parse_double(t.rows[i][15]) == res.rows[i].test_d_ell);
    CHECK(*detail::parse_double(t.rows[i][18]) == res.rows[i].per_group[0].nll);
    CHECK(t.rows[i][9].empty());  // sigma2_hat stays blank for bernoulli
  }

  std::ifstream mf(out_dir + "/manifest.json");
  REQUIRE(mf.good());
  nlohmann::json parsed;
  mf >> parsed;
  CHECK(parsed.at("version").get<std::string>() == version_string());
  CHECK(parsed.at("config").at("seed").get<std::uint64_t>() == 11);
}

TEST_CASE("sweep validates its configuration") {
  const TempDataset td = make_dataset(60, 10);
  SweepConfig cfg = small_config(td);
  cfg.replicates = 0;
  CHECK_THROWS_AS(run_sweep(cfg), config_error);
  cfg = small_config(td);
  cfg.threads = 0;
  CHECK_THROWS_AS(run_sweep(cfg), config_error);
  cfg = small_config(td);
  cfg.lambda_grid = {};
  CHECK_THROWS_AS(run_sweep(cfg), config_error);
  cfg = small_config(td);
  cfg.lambda_grid = {-1.0};
  CHECK_THROWS_AS(run_sweep(cfg), config_error);
  cfg = small_config(td);
  cfg.schema_path += ".nope";
  CHECK_THROWS_AS(run_sweep(cfg), config_error);
}

TEST_CASE("estimation error shrinks along the consistency schedule") {
  ConsistencySimConfig cfg;
  cfg.family = FamilyKind::gaussian;
  cfg.group_gap = 0.5;
  cfg.n_grid = {200, 800};
  cfg.trials = 3;
  cfg.seed = 13;
  const ConsistencyReport rep = run_consistency_sim(cfg);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].lambda_n == Approx(1.0 / std::sqrt(200.0)).margin(1e-15));
  CHECK(rep.rows[1].mean_beta_err < rep.rows[0].mean_beta_err);
  CHECK(rep.rows[1].mean_d_delta_err < rep.rows[0].mean_d_delta_err);
  CHECK(rep.rows[1].mean_gap_unpenalized < rep.rows[0].mean_gap_unpenalized);

  // the population limit is 2 I plus the rank-one group shift
  Matrix want = Matrix::Zero(4, 4);
  want.bottomRightCorner(3, 3) = 2.0 * Matrix::Identity(3, 3);
  Vector shift = Vector::Zero(4);
  for (int j = 1; j < 4; ++j) shift(j) = 0.5 / std::sqrt(3.0);
  want += shift * shift.transpose();
  CHECK((rep.delta - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("the logistic consistency generator also runs") {
  ConsistencySimConfig cfg;
  cfg.family = FamilyKind::bernoulli;
  cfg.group_gap = 1.0;
  cfg.n_grid = {300};
  cfg.trials = 2;
  cfg.seed = 3;
  const ConsistencyReport rep = run_consistency_sim(cfg);
  REQUIRE(rep.rows.size() == 1);
  CHECK(std::isfinite(rep.rows[0].mean_beta_err));
  CHECK(rep.rows[0].mean_beta_err < 2.0);
  CHECK(rep.rows[0].mean_d_delta_err < 2.0);

  ConsistencySimConfig bad = cfg;
  bad.family = FamilyKind::poisson;
  CHECK_THROWS_AS(run_consistency_sim(bad), config_error);
  bad = cfg;
  bad.trials = 0;
  CHECK_THROWS_AS(run_consistency_sim(bad), config_error);
  bad = cfg;
  bad.n_features = 1;
  CHECK_THROWS_AS(run_consistency_sim(bad), config_error);
}
