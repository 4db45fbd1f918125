#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "fairglm/fairglm.hpp"

using namespace fairglm;
using Catch::Approx;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

Segmentation binary_segments() {
  Segmentation seg;
  seg.kind = Segmentation::Kind::per_value;
  seg.values = {0.0, 1.0};
  return seg;
}

// identity design: eta(i) = x(i) with beta = (0, 1)
struct HandCase {
  Matrix X;
  Vector y;
  IntVector groups;
  Matrix beta;
};

HandCase hand_case(const std::vector<double>& eta, const std::vector<double>& y,
                   const std::vector<int>& g) {
  HandCase hc;
  const auto n = static_cast<Eigen::Index>(eta.size());
  hc.X.resize(n, 2);
  hc.y.resize(n);
  hc.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    hc.X(i, 0) = 1.0;
    hc.X(i, 1) = eta[i];
    hc.y(i) = y[i];
    hc.groups(i) = g[i];
  }
  hc.beta.resize(2, 1);
  hc.beta << 0.0, 1.0;
  return hc;
}

}  // namespace

TEST_CASE("log-likelihood disparity from hand-picked cell means") {
  // group 0's positives average ll -0.5, group 1's -0.7; negatives match
  const double e5 = logit(std::exp(-0.5));
  const double e7 = logit(std::exp(-0.7));
  const HandCase hc = hand_case({e5, e7, -1.3, -1.3}, {1, 1, 0, 0}, {0, 1, 0, 1});
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 2, binary_segments());
  CHECK(ev.per_cell.at({0, 1}).mean_loglik == Approx(-0.5).margin(1e-12));
  CHECK(ev.per_cell.at({1, 1}).mean_loglik == Approx(-0.7).margin(1e-12));
  CHECK(ev.d_ell == Approx(0.04).margin(1e-12));
  CHECK(ev.empty_pairs.empty());
}

TEST_CASE("outcome disparity from hand-picked predicted means") {
  // positives predicted at 0.6 vs 0.4; negatives identical across groups
  const HandCase hc = hand_case({logit(0.6), logit(0.4), -0.8, -0.8},
                                {1, 1, 0, 0}, {0, 1, 0, 1});
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 2, binary_segments());
  CHECK(ev.per_cell.at({0, 1}).mean_outcome(0) == Approx(0.6).margin(1e-12));
  CHECK(ev.per_cell.at({1, 1}).mean_outcome(0) == Approx(0.4).margin(1e-12));
  CHECK(ev.d_eo == Approx(0.04).margin(1e-12));
}

TEST_CASE("three groups accumulate every unordered pair") {
  Rng rng(88);
  std::vector<double> eta, y;
  std::vector<int> g;
  for (int i = 0; i < 60; ++i) {
    eta.push_back(rng.normal());
    y.push_back(i % 2);
    g.push_back(i % 3);
  }
  const HandCase hc = hand_case(eta, y, g);
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 3, binary_segments());
  double want_ell = 0.0, want_eo = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int l = k + 1; l < 3; ++l) {
      for (int s = 0; s < 2; ++s) {
        const auto& a = ev.per_cell.at({k, s});
        const auto& b = ev.per_cell.at({l, s});
        want_ell += (a.mean_loglik - b.mean_loglik) *
                    (a.mean_loglik - b.mean_loglik);
        want_eo += (a.mean_outcome - b.mean_outcome).squaredNorm();
      }
    }
  }
  CHECK(ev.d_ell == Approx(want_ell).margin(1e-14));
  CHECK(ev.d_eo == Approx(want_eo).margin(1e-14));
}

TEST_CASE("identical groups have zero disparity") {
  // the two groups hold literally the same rows
  const HandCase hc = hand_case({0.3, 0.3, -1.1, -1.1, 0.9, 0.9},
                                {1, 1, 0, 0, 1, 1}, {0, 1, 0, 1, 0, 1});
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 2, binary_segments());
  CHECK(ev.d_ell == 0.0);
  CHECK(ev.d_eo == 0.0);
  CHECK(ev.d_metric.has_value());
  CHECK(*ev.d_metric == 0.0);
}

TEST_CASE("disparities match a from-scratch recomputation") {
  Rng rng(660);
  const int n = 120, K = 3;
  Matrix X(n, 3);
  Vector y(n);
  IntVector g(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
    g(i) = i < K ? i : static_cast<int>(rng.below(K));
    y(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  Matrix beta(3, 1);
  beta << 0.2, 0.7, -0.4;
  const Segmentation seg = binary_segments();
  const GroupedEvaluation ev =
      evaluate(Family::bernoulli(), beta, 1.0, X, y, g, K, seg);

  // independent pass with explicit logistic formulas
  std::map<std::pair<int, int>, std::vector<int>> cells;
  for (int i = 0; i < n; ++i) cells[{g(i), static_cast<int>(y(i))}].push_back(i);
  auto cell_ll = [&](const std::vector<int>& rows) {
    double s = 0.0;
    for (int i : rows) {
      const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(beta.col(0))));
      s += y(i) == 1.0 ? std::log(p) : std::log(1.0 - p);
    }
    return s / static_cast<double>(rows.size());
  };
  auto cell_mu = [&](const std::vector<int>& rows) {
    double s = 0.0;
    for (int i : rows)
      s += 1.0 / (1.0 + std::exp(-X.row(i).dot(beta.col(0))));
    return s / static_cast<double>(rows.size());
  };
  double want_ell = 0.0, want_eo = 0.0, want_nll = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      for (int s = 0; s < 2; ++s) {
        if (!cells.count({k, s}) || !cells.count({l, s})) continue;
        const double dll = cell_ll(cells[{k, s}]) - cell_ll(cells[{l, s}]);
        const double dmu = cell_mu(cells[{k, s}]) - cell_mu(cells[{l, s}]);
        want_ell += dll * dll;
        want_eo += dmu * dmu;
      }
    }
  }
  for (const auto& [key, rows] : cells)
    want_nll -= cell_ll(rows) * static_cast<double>(rows.size());
  want_nll /= n;

  CHECK(ev.d_ell == Approx(want_ell).margin(1e-12));
  CHECK(ev.d_eo == Approx(want_eo).margin(1e-12));
  CHECK(ev.overall.nll == Approx(want_nll).margin(1e-12));

  // per-group records agree with direct loops
  for (int k = 0; k < K; ++k) {
    double se = 0.0, ae = 0.0, cnt = 0.0;
    for (int i = 0; i < n; ++i) {
      if (g(i) != k) continue;
      const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(beta.col(0))));
      se += (y(i) - p) * (y(i) - p);
      ae += std::abs(y(i) - p);
      cnt += 1.0;
    }
    CHECK(ev.per_group[k].mse == Approx(se / cnt).margin(1e-12));
    CHECK(*ev.per_group[k].mae == Approx(ae / cnt).margin(1e-12));
  }
}

TEST_CASE("overall nll equals the count-weighted cell means") {
  Rng rng(14);
  const int n = 80;
  Matrix X(n, 2);
  Vector y(n);
  IntVector g(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    y(i) = std::floor(3.0 * rng.uniform());
    g(i) = i % 2;
  }
  Matrix beta(2, 1);
  beta << 0.1, 0.3;
  Segmentation seg;
  seg.kind = Segmentation::Kind::per_value;
  seg.values = {0.0, 1.0, 2.0};
  const GroupedEvaluation ev =
      evaluate(Family::poisson(), beta, 1.0, X, y, g, 2, seg);
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [key, stat] : ev.per_cell) {
    weighted += stat.mean_loglik * static_cast<double>(stat.count);
    total += stat.count;
  }
  CHECK(total == static_cast<std::size_t>(n));
  CHECK(ev.overall.nll == Approx(-weighted / n).margin(1e-12));
}

TEST_CASE("disparities are invariant to group relabeling") {
  Rng rng(42);
  const int n = 90, K = 3;
  Matrix X(n, 2);
  Vector y(n);
  IntVector g(n), relabeled(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    y(i) = rng.uniform() < 0.4 ? 0.0 : 1.0;
    g(i) = i < K ? i : static_cast<int>(rng.below(K));
    relabeled(i) = (g(i) + 1) % K;
  }
  Matrix beta(2, 1);
  beta << -0.2, 0.9;
  const Segmentation seg = binary_segments();
  const GroupedEvaluation a =
      evaluate(Family::bernoulli(), beta, 1.0, X, y, g, K, seg);
  const GroupedEvaluation b =
      evaluate(Family::bernoulli(), beta, 1.0, X, y, relabeled, K, seg);
  CHECK(a.d_ell == Approx(b.d_ell).margin(1e-12));
  CHECK(a.d_eo == Approx(b.d_eo).margin(1e-12));
  REQUIRE(a.d_metric.has_value());
  REQUIRE(b.d_metric.has_value());
  CHECK(*a.d_metric == Approx(*b.d_metric).margin(1e-12));
}

TEST_CASE("group pairs with no shared segment are reported, not counted") {
  // group 0 only has negatives, group 1 only positives, group 2 both
  const HandCase hc = hand_case({-0.5, -0.4, 0.6, 0.7, -0.3, 0.5},
                                {0, 0, 1, 1, 0, 1}, {0, 0, 1, 1, 2, 2});
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 3, binary_segments());
  REQUIRE(ev.empty_pairs.size() == 1);
  CHECK(ev.empty_pairs[0] == std::pair<int, int>{0, 1});
  CHECK(ev.d_ell > 0.0);
}

TEST_CASE("auroc uses midranks and needs both classes") {
  CHECK(*detail::auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) ==
        Approx(0.75).margin(1e-15));
  CHECK(*detail::auroc({0.5, 0.5}, {0, 1}) == Approx(0.5).margin(1e-15));
  CHECK(*detail::auroc({0.2, 0.3, 0.9}, {0, 1, 1}) == Approx(1.0).margin(1e-15));
  CHECK_FALSE(detail::auroc({0.2, 0.3}, {1, 1}).has_value());
  CHECK_FALSE(detail::auroc({0.2, 0.3}, {0, 0}).has_value());
}

TEST_CASE("headline metric gap is absent when a group cannot score") {
  // group 1 is single-class, so its auroc (and the gap) is undefined
  const HandCase hc = hand_case({0.2, -0.4, 0.5, 0.8}, {1, 0, 1, 1},
                                {0, 0, 1, 1});
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), hc.beta, 1.0, hc.X,
                                        hc.y, hc.groups, 2, binary_segments());
  CHECK(ev.per_group[0].auroc.has_value());
  CHECK_FALSE(ev.per_group[1].auroc.has_value());
  CHECK_FALSE(ev.d_metric.has_value());
}

TEST_CASE("equalized-odds style gaps for a binary outcome") {
  Rng rng(31);
  const int n = 60;
  Matrix X(n, 2);
  Vector y(n);
  IntVector g(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal() + (i % 2 == 0 ? 0.5 : -0.5);
    y(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    g(i) = i % 2;
  }
  Matrix beta(2, 1);
  beta << 0.1, 1.2;
  const GroupedEvaluation ev = evaluate(Family::bernoulli(), beta, 1.0, X, y, g,
                                        2, binary_segments());
  // soft true/false positive rates per group
  double rate[2][2] = {{0, 0}, {0, 0}}, cnt[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(beta.col(0))));
    rate[g(i)][static_cast<int>(y(i))] += p;
    cnt[g(i)][static_cast<int>(y(i))] += 1.0;
  }
  const double fpr_gap = rate[0][0] / cnt[0][0] - rate[1][0] / cnt[1][0];
  const double tpr_gap = rate[0][1] / cnt[0][1] - rate[1][1] / cnt[1][1];
  CHECK(ev.d_eo == Approx(fpr_gap * fpr_gap + tpr_gap * tpr_gap).margin(1e-12));
}

TEST_CASE("multinomial evaluation sums per-class prediction gaps") {
  const Family fam = Family::multinomial(2);
  const int n = 4;
  Matrix X = Matrix::Identity(n, n);
  Matrix beta(n, 2);
  beta << 0.4, -0.2,
          0.1, 0.3,
          -0.5, 0.8,
          0.9, 0.0;
  Vector y(n);
  y << 1, 1, 1, 1;  // a single outcome segment
  IntVector g(n);
  g << 0, 0, 1, 1;
  Segmentation seg;
  seg.kind = Segmentation::Kind::per_value;
  seg.values = {1.0};

  const GroupedEvaluation ev = evaluate(fam, beta, 1.0, X, y, g, 2, seg);
  auto soft = [&](int i, int c) {
    const double e1 = std::exp(beta(i, 0)), e2 = std::exp(beta(i, 1));
    return (c == 1 ? e1 : e2) / (1.0 + e1 + e2);
  };
  Vector mean0(2), mean1(2);
  mean0 << (soft(0, 1) + soft(1, 1)) / 2, (soft(0, 2) + soft(1, 2)) / 2;
  mean1 << (soft(2, 1) + soft(3, 1)) / 2, (soft(2, 2) + soft(3, 2)) / 2;
  CHECK(ev.d_eo == Approx((mean0 - mean1).squaredNorm()).margin(1e-12));

  auto ll = [&](int i) { return std::log(soft(i, 1)); };
  const double gap = (ll(0) + ll(1)) / 2 - (ll(2) + ll(3)) / 2;
  CHECK(ev.d_ell == Approx(gap * gap).margin(1e-12));
}

TEST_CASE("multinomial misclassification picks the argmax class") {
  const Family fam = Family::multinomial(2);
  Matrix X = Matrix::Identity(3, 3);
  Matrix beta(3, 2);
  beta << -4.0, -4.0,   // reference wins
           3.0,  0.0,   // class 1 wins
           0.0,  3.0;   // class 2 wins
  Vector y(3);
  y << 0, 1, 1;
  IntVector g(3);
  g << 0, 1, 0;
  Segmentation seg;
  seg.kind = Segmentation::Kind::per_value;
  seg.values = {0.0, 1.0};
  const GroupedEvaluation ev = evaluate(fam, beta, 1.0, X, y, g, 2, seg);
  REQUIRE(ev.overall.misclassification.has_value());
  // rows predict 0, 1, 2 against truth 0, 1, 1: one miss in three
  CHECK(*ev.overall.misclassification == Approx(1.0 / 3.0).margin(1e-15));
  // Brier-style mse covers all three classes
  CHECK(ev.overall.mse > 0.0);
  CHECK_FALSE(ev.overall.mae.has_value());
}

TEST_CASE("gaussian evaluation respects the dispersion estimate") {
  Matrix X(2, 2);
  X << 1, 0,
       1, 1;
  Matrix beta(2, 1);
  beta << 0.0, 1.0;
  Vector y(2);
  y << 1.0, 0.0;  // residuals 1 and -1
  IntVector g(2);
  g << 0, 1;
  Segmentation seg;
  seg.kind = Segmentation::Kind::interval;
  seg.boundaries = {0.0, 2.0};
  const double s2 = 2.0;
  const GroupedEvaluation ev =
      evaluate(Family::gaussian(), beta, s2, X, y, g, 2, seg);
  const double want =
      0.5 / s2 + 0.5 * (std::log(2.0 * M_PI) + std::log(s2));
  CHECK(ev.overall.nll == Approx(want).margin(1e-14));
  CHECK(ev.overall.mse == Approx(1.0).margin(1e-15));
  CHECK(*ev.overall.mae == Approx(1.0).margin(1e-15));
}
