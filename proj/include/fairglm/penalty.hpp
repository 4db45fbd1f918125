#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fairglm/errors.hpp"
#include "fairglm/family.hpp"
#include "fairglm/rng.hpp"
#include "fairglm/segmentation.hpp"

namespace fairglm {

enum class KappaPolicy { nominal, nonempty };

inline KappaPolicy kappa_policy_from_name(const std::string& s) {
  if (s == "nominal") return KappaPolicy::nominal;
  if (s == "nonempty") return KappaPolicy::nonempty;
  throw config_error("unknown kappa policy '" + s + "'");
}

// Counts how many times a penalty matrix has been assembled; the sweep
// asserts one build per replicate through this.
inline std::atomic<std::uint64_t>& penalty_build_counter() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

// Row indices per (segment, group) cell.  A cross-group pair set for a cell
// (k, l, segment) is the full cross product of the two groups' member lists.
struct PairSets {
  int n_groups = 0;
  int n_segments = 0;
  // members[seg * n_groups + g] = rows of group g in segment seg
  std::vector<std::vector<Eigen::Index>> members;

  const std::vector<Eigen::Index>& cell(int g, int seg) const {
    return members[static_cast<std::size_t>(seg) * n_groups + g];
  }

  // explicit pair list for one cell; intended for small oracle checks
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs(int k, int l,
                                                           int seg) const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (Eigen::Index i : cell(k, seg))
      for (Eigen::Index j : cell(l, seg)) out.emplace_back(i, j);
    return out;
  }
};

inline PairSets build_pair_sets(const Segmentation& seg, const Vector& y,
                                const IntVector& groups, int n_groups) {
  if (n_groups < 2) throw config_error("build_pair_sets: need at least 2 groups");
  PairSets ps;
  ps.n_groups = n_groups;
  ps.n_segments = seg.n_segments();
  ps.members.resize(static_cast<std::size_t>(ps.n_segments) * n_groups);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int s = seg.segment_of(y(i));
    ps.members[static_cast<std::size_t>(s) * n_groups + groups(i)].push_back(i);
  }
  return ps;
}

struct PenaltyOptions {
  KappaPolicy kappa_policy = KappaPolicy::nominal;
  bool exact_pairs = false;     // force the direct pairwise sum
  std::size_t pair_cap = 0;     // per-cell pair budget; 0 = unlimited
  std::uint64_t subsample_seed = 0;
};

struct PenaltyMatrix {
  Matrix D;
  double kappa = 0.0;
  // (k, l, segment) -> pair count actually used
  std::map<std::tuple<int, int, int>, std::size_t> cell_counts;
  std::vector<std::tuple<int, int, int>> skipped_cells;  // empty cells

  // Binary cache: p, kappa, cell count header, then row-major float64.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write penalty dump '" + path + "'");
    const std::uint64_t p = static_cast<std::uint64_t>(D.rows());
    const std::uint64_t cells = cell_counts.size();
    out.write(reinterpret_cast<const char*>(&p), sizeof p);
    out.write(reinterpret_cast<const char*>(&kappa), sizeof kappa);
    out.write(reinterpret_cast<const char*>(&cells), sizeof cells);
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
      const Eigen::RowVectorXd row = D.row(i);  // contiguous copy
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double)) * D.cols());
    }
    if (!out) throw data_error("short write on penalty dump '" + path + "'");
  }

  static PenaltyMatrix load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read penalty dump '" + path + "'");
    std::uint64_t p = 0, cells = 0;
    PenaltyMatrix pm;
    in.read(reinterpret_cast<char*>(&p), sizeof p);
    in.read(reinterpret_cast<char*>(&pm.kappa), sizeof pm.kappa);
    in.read(reinterpret_cast<char*>(&cells), sizeof cells);
    pm.D.resize(p, p);
    for (std::uint64_t i = 0; i < p; ++i) {
      Eigen::RowVectorXd row(p);
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double)) * p);
      pm.D.row(static_cast<Eigen::Index>(i)) = row;
    }
    if (!in) throw data_error("truncated penalty dump '" + path + "'");
    return pm;
  }
};

namespace detail {

// canonical accumulation order: sort cell rows by content so the assembled
// matrix is bit-identical under any input row permutation
inline std::vector<Eigen::Index> content_sorted(const Matrix& X,
                                                std::vector<Eigen::Index> idx) {
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (X(a, c) < X(b, c)) return true;
      if (X(a, c) > X(b, c)) return false;
    }
    return false;
  });
  return idx;
}

inline std::vector<Eigen::Index> subsample(const std::vector<Eigen::Index>& idx,
                                           std::size_t keep, Rng& rng) {
  std::vector<Eigen::Index> pool = idx;
  rng.shuffle(pool);
  pool.resize(keep);
  return pool;
}

}  // namespace detail

// Assembles D = (1/kappa) * sum over group pairs k<l and segments y of the
// mean squared cross-pair row difference
//   D^{kly} = (1/n^{kly}) sum_{(i,j)} (x_i - x_j)' (x_i - x_j).
// The default path expands each cell as
//   n_l * G_k + n_k * G_l - M_k' M_l - M_l' M_k
// with G the cell Gram matrix and M the cell column sums, which costs
// O((n_k + n_l) p^2) instead of O(n_k n_l p^2).  Column 0 of X is the
// intercept by contract; its row and column of D are zero.
inline PenaltyMatrix build_penalty_matrix(const Matrix& X, const PairSets& ps,
                                          const PenaltyOptions& opt = {}) {
  const int K = ps.n_groups;
  const int S = ps.n_segments;
  if (K < 2) throw config_error("build_penalty_matrix: need at least 2 groups");
  const Eigen::Index p = X.cols();

  PenaltyMatrix pm;
  pm.D = Matrix::Zero(p, p);

  std::size_t nonempty = 0;
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      for (int s = 0; s < S; ++s) {
        std::vector<Eigen::Index> rows_k = ps.cell(k, s);
        std::vector<Eigen::Index> rows_l = ps.cell(l, s);
        if (rows_k.empty() || rows_l.empty()) {
          pm.skipped_cells.emplace_back(k, l, s);
          continue;
        }
        if (opt.pair_cap > 0 &&
            rows_k.size() * rows_l.size() > opt.pair_cap) {
          const double r = std::sqrt(static_cast<double>(opt.pair_cap) /
                                     (static_cast<double>(rows_k.size()) *
                                      static_cast<double>(rows_l.size())));
          Rng rng(mix_seed(opt.subsample_seed, k, l, s));
          const auto keep_k = std::max<std::size_t>(
              1, static_cast<std::size_t>(rows_k.size() * r));
          const auto keep_l = std::max<std::size_t>(
              1, static_cast<std::size_t>(rows_l.size() * r));
          rows_k = detail::subsample(rows_k, keep_k, rng);
          rows_l = detail::subsample(rows_l, keep_l, rng);
        }
        rows_k = detail::content_sorted(X, std::move(rows_k));
        rows_l = detail::content_sorted(X, std::move(rows_l));

        const auto nk = static_cast<double>(rows_k.size());
        const auto nl = static_cast<double>(rows_l.size());
        const double n_pairs = nk * nl;
        pm.cell_counts[{k, l, s}] = rows_k.size() * rows_l.size();
        ++nonempty;

        Matrix cell = Matrix::Zero(p, p);
        if (opt.exact_pairs) {
          Vector diff(p);
          for (Eigen::Index i : rows_k) {
            for (Eigen::Index j : rows_l) {
              diff = X.row(i) - X.row(j);
              cell.noalias() += diff * diff.transpose();
            }
          }
        } else {
          Matrix gram_k = Matrix::Zero(p, p), gram_l = Matrix::Zero(p, p);
          Eigen::RowVectorXd sum_k = Eigen::RowVectorXd::Zero(p);
          Eigen::RowVectorXd sum_l = Eigen::RowVectorXd::Zero(p);
          for (Eigen::Index i : rows_k) {
            gram_k.noalias() += X.row(i).transpose() * X.row(i);
            sum_k += X.row(i);
          }
          for (Eigen::Index j : rows_l) {
            gram_l.noalias() += X.row(j).transpose() * X.row(j);
            sum_l += X.row(j);
          }
          // cross terms combined first so each element of the cell matrix is
          // assembled in a symmetric order (keeps D bitwise symmetric)
          Matrix cross = sum_k.transpose() * sum_l;
          cross += sum_l.transpose() * sum_k;
          cell.noalias() = nl * gram_k + nk * gram_l;
          cell -= cross;
        }
        pm.D.noalias() += cell / n_pairs;
      }
    }
  }

  pm.kappa = opt.kappa_policy == KappaPolicy::nominal
                 ? static_cast<double>(S) * K * (K - 1) / 2.0
                 : static_cast<double>(nonempty);
  if (pm.kappa > 0) pm.D /= pm.kappa;

  // zero in exact arithmetic; enforce so downstream sees it exactly
  pm.D.row(0).setZero();
  pm.D.col(0).setZero();

  penalty_build_counter().fetch_add(1, std::memory_order_relaxed);
  return pm;
}

}  // namespace fairglm
