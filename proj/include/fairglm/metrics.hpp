#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairglm/family.hpp"
#include "fairglm/segmentation.hpp"

namespace fairglm {

struct CellStat {
  std::size_t count = 0;
  double mean_loglik = 0.0;
  Vector mean_outcome;  // length m (predicted mean per class column)
};

struct PerformanceRecord {
  double nll = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mae;                // scalar families
  std::optional<double> auroc;              // binary, needs both classes
  std::optional<double> misclassification;  // multiclass argmax
};

// Everything the trade-off table needs from one model on one split: the
// per-(group, segment) cell table, overall and per-group performance, and the
// two squared-gap disparity statistics.
struct GroupedEvaluation {
  std::map<std::pair<int, int>, CellStat> per_cell;  // (group, segment)
  PerformanceRecord overall;
  std::vector<PerformanceRecord> per_group;
  double d_ell = 0.0;
  double d_eo = 0.0;
  std::optional<double> d_metric;  // max pairwise gap of the headline metric
  // group pairs whose cells never overlapped (contribute 0, reported)
  std::vector<std::pair<int, int>> empty_pairs;
};

namespace detail {

// Mann-Whitney AUROC with midranks for ties; empty when one class is absent
inline std::optional<double> auroc(const std::vector<double>& score,
                                   const std::vector<double>& label) {
  const std::size_t n = score.size();
  std::size_t n_pos = 0;
  for (double y : label) n_pos += y == 1.0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (label[order[k]] == 1.0) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline PerformanceRecord performance_on(const Family& fam, const Vector& y,
                                        const Matrix& mu, const Vector& ll,
                                        const std::vector<Eigen::Index>& rows) {
  PerformanceRecord rec;
  if (rows.empty()) return rec;
  const auto n = static_cast<double>(rows.size());

  double ll_sum = 0.0, se = 0.0, ae = 0.0, miss = 0.0;
  std::vector<double> score, label;
  for (Eigen::Index i : rows) {
    ll_sum += ll(i);
    if (fam.is_multinomial()) {
      double ref = 1.0;
      int argmax = 0;
      double best = 0.0;
      for (int c = 0; c < fam.m; ++c) {
        ref -= mu(i, c);
        if (mu(i, c) > best) {
          best = mu(i, c);
          argmax = c + 1;
        }
      }
      best = std::max(best, ref);
      if (ref >= best) argmax = 0;  // ties prefer the reference
      for (int c = 0; c <= fam.m; ++c) {
        const double p = c == 0 ? ref : mu(i, c - 1);
        const double ind = y(i) == c ? 1.0 : 0.0;
        se += (ind - p) * (ind - p);
      }
      miss += argmax == static_cast<int>(y(i)) ? 0.0 : 1.0;
    } else {
      const double r = y(i) - mu(i, 0);
      se += r * r;
      ae += std::abs(r);
      if (fam.kind == FamilyKind::bernoulli) {
        score.push_back(mu(i, 0));
        label.push_back(y(i));
      }
    }
  }
  rec.nll = -ll_sum / n;
  rec.mse = se / n;
  if (!fam.is_multinomial()) rec.mae = ae / n;
  if (fam.kind == FamilyKind::bernoulli) rec.auroc = auroc(score, label);
  if (fam.is_multinomial()) rec.misclassification = miss / n;
  return rec;
}

// the figure-of-merit each task is usually judged by
inline std::optional<double> headline_metric(const Family& fam,
                                             const PerformanceRecord& rec) {
  switch (fam.kind) {
    case FamilyKind::bernoulli: return rec.auroc;
    case FamilyKind::gaussian:
    case FamilyKind::poisson: return rec.mae;
    case FamilyKind::multinomial: return rec.misclassification;
  }
  return std::nullopt;
}

}  // namespace detail

// Evaluates a fitted coefficient matrix on one split, reusing the training
// segmentation.  sigma2 feeds the gaussian log-likelihood only.
inline GroupedEvaluation evaluate(const Family& fam, const Matrix& beta,
                                  double sigma2, const Matrix& X, const Vector& y,
                                  const IntVector& groups, int n_groups,
                                  const Segmentation& seg) {
  const Matrix eta = X * beta;
  const Matrix mu = mean(fam, eta);
  const Vector ll = log_likelihood(fam, y, eta, sigma2);
  const int m = fam.predictor_cols();

  GroupedEvaluation ev;

  // cell accumulation
  std::map<std::pair<int, int>, std::pair<double, Vector>> sums;
  std::map<std::pair<int, int>, std::size_t> counts;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto key = std::make_pair(groups(i), seg.segment_of(y(i)));
    auto& [ll_sum, mu_sum] = sums[key];
    if (mu_sum.size() == 0) mu_sum = Vector::Zero(m);
    ll_sum += ll(i);
    mu_sum += mu.row(i).transpose();
    ++counts[key];
  }
  for (const auto& [key, sum] : sums) {
    CellStat stat;
    stat.count = counts[key];
    stat.mean_loglik = sum.first / static_cast<double>(stat.count);
    stat.mean_outcome = sum.second / static_cast<double>(stat.count);
    ev.per_cell[key] = stat;
  }

  // squared cell-mean gaps over group pairs and segments
  const int S = seg.n_segments();
  for (int k = 0; k < n_groups; ++k) {
    for (int l = k + 1; l < n_groups; ++l) {
      bool any = false;
      for (int s = 0; s < S; ++s) {
        const auto a = ev.per_cell.find({k, s});
        const auto b = ev.per_cell.find({l, s});
        if (a == ev.per_cell.end() || b == ev.per_cell.end()) continue;
        any = true;
        const double gap = a->second.mean_loglik - b->second.mean_loglik;
        ev.d_ell += gap * gap;
        ev.d_eo +=
            (a->second.mean_outcome - b->second.mean_outcome).squaredNorm();
      }
      if (!any) ev.empty_pairs.emplace_back(k, l);
    }
  }

  // overall and per-group performance
  std::vector<Eigen::Index> all(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) all[i] = i;
  ev.overall = detail::performance_on(fam, y, mu, ll, all);
  std::vector<std::vector<Eigen::Index>> by_group(n_groups);
  for (Eigen::Index i = 0; i < y.size(); ++i) by_group[groups(i)].push_back(i);
  for (int g = 0; g < n_groups; ++g)
    ev.per_group.push_back(detail::performance_on(fam, y, mu, ll, by_group[g]));

  // headline-metric spread across groups
  double best_gap = -1.0;
  for (int k = 0; k < n_groups; ++k) {
    const auto mk = detail::headline_metric(fam, ev.per_group[k]);
    if (!mk) continue;
    for (int l = k + 1; l < n_groups; ++l) {
      const auto ml = detail::headline_metric(fam, ev.per_group[l]);
      if (!ml) continue;
      best_gap = std::max(best_gap, std::abs(*mk - *ml));
    }
  }
  if (best_gap >= 0.0) ev.d_metric = best_gap;

  return ev;
}

inline double disparity_ell(const Family& fam, const Matrix& beta, double sigma2,
                            const Matrix& X, const Vector& y,
                            const IntVector& groups, int n_groups,
                            const Segmentation& seg) {
  return evaluate(fam, beta, sigma2, X, y, groups, n_groups, seg).d_ell;
}

inline double disparity_eo(const Family& fam, const Matrix& beta,
                           const Matrix& X, const Vector& y,
                           const IntVector& groups, int n_groups,
                           const Segmentation& seg) {
  return evaluate(fam, beta, 1.0, X, y, groups, n_groups, seg).d_eo;
}

}  // namespace fairglm
