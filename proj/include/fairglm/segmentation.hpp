#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairglm/errors.hpp"
#include "fairglm/family.hpp"

namespace fairglm {

enum class SegmentStrategy { equal_counts, equal_lengths };

inline std::string strategy_name(SegmentStrategy s) {
  return s == SegmentStrategy::equal_counts ? "equal_counts" : "equal_lengths";
}

inline SegmentStrategy strategy_from_name(const std::string& s) {
  if (s == "equal_counts") return SegmentStrategy::equal_counts;
  if (s == "equal_lengths") return SegmentStrategy::equal_lengths;
  throw config_error("unknown segmentation strategy '" + s + "'");
}

// Maps every outcome value to a segment index in [0, n_segments).  Built on
// training outcomes; evaluation data reuses the trained boundaries, with
// out-of-range values clamped into the nearest segment so the map is total.
struct Segmentation {
  enum class Kind { per_value, interval, count_clip };

  Kind kind = Kind::per_value;
  std::vector<double> values;      // per_value: sorted distinct outcomes
  std::vector<double> boundaries;  // interval: t+1 ascending edges
  long long clip_lo = 0;           // count_clip window [lo, hi]
  long long clip_hi = 0;

  int n_segments() const {
    switch (kind) {
      case Kind::per_value: return static_cast<int>(values.size());
      case Kind::interval: return static_cast<int>(boundaries.size()) - 1;
      case Kind::count_clip: return static_cast<int>(clip_hi - clip_lo) + 1;
    }
    return 0;
  }

  int segment_of(double y) const {
    switch (kind) {
      case Kind::per_value: {
        // exact match expected; otherwise nearest value, ties downward
        auto it = std::lower_bound(values.begin(), values.end(), y);
        if (it == values.end()) return static_cast<int>(values.size()) - 1;
        if (it == values.begin() || *it == y)
          return static_cast<int>(it - values.begin());
        auto lo = it - 1;
        return static_cast<int>((y - *lo <= *it - y ? lo : it) - values.begin());
      }
      case Kind::interval: {
        // [b_i, b_{i+1}) half-open; count interior edges <= y
        auto first = boundaries.begin() + 1, last = boundaries.end() - 1;
        return static_cast<int>(std::upper_bound(first, last, y) - first);
      }
      case Kind::count_clip: {
        const long long v = std::llround(y);
        return static_cast<int>(std::clamp(v, clip_lo, clip_hi) - clip_lo);
      }
    }
    return 0;
  }
};

namespace detail {

// true when every segment holds at least one sample from every group
inline bool covers_all_groups(const Segmentation& seg, const Vector& y,
                              const IntVector& groups, int n_groups) {
  const int t = seg.n_segments();
  std::vector<char> seen(static_cast<std::size_t>(t) * n_groups, 0);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    seen[static_cast<std::size_t>(seg.segment_of(y(i))) * n_groups + groups(i)] = 1;
  return std::find(seen.begin(), seen.end(), 0) == seen.end();
}

// Equal-count edges: interior cut i lands just above the value at rank
// round(n*i/t), so boundary ties fall into the lower segment.  Returns
// nothing when the cuts collide (t infeasible for this sample).
inline std::optional<std::vector<double>> equal_count_edges(
    std::vector<double> sorted, int t) {
  const auto n = static_cast<double>(sorted.size());
  std::vector<double> edges;
  edges.push_back(sorted.front());
  for (int i = 1; i < t; ++i) {
    const auto rank = static_cast<std::size_t>(std::llround(n * i / t));
    if (rank == 0 || rank >= sorted.size()) return std::nullopt;
    const double at = sorted[rank - 1];
    auto next = std::upper_bound(sorted.begin(), sorted.end(), at);
    if (next == sorted.end()) return std::nullopt;
    if (*next <= edges.back()) return std::nullopt;
    edges.push_back(*next);
  }
  // the last segment is closed, so a final cut at the maximum is still fine
  edges.push_back(sorted.back());
  return edges;
}

inline std::optional<std::vector<double>> equal_length_edges(double lo,
                                                             double hi, int t) {
  if (!(hi > lo) && t > 1) return std::nullopt;
  std::vector<double> edges(t + 1);
  for (int i = 0; i <= t; ++i) edges[i] = lo + (hi - lo) * i / t;
  return edges;
}

// Count outcomes: clip into the widest integer window [L, U] such that after
// clipping every segment still holds every group (interior integers need
// exact hits; the end segments collect the clipped tails).  Ties prefer the
// smallest L.
inline Segmentation widest_count_window(const Vector& y, const IntVector& groups,
                                        int n_groups) {
  long long lo = std::llround(y.minCoeff());
  long long hi = std::llround(y.maxCoeff());
  if (hi - lo > 100000)
    throw data_error("count outcome range too wide to segment");

  const auto range = static_cast<std::size_t>(hi - lo + 1);
  std::vector<char> present(range * n_groups, 0);
  std::vector<long long> gmin(n_groups, hi), gmax(n_groups, lo);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const long long v = std::llround(y(i));
    const int g = groups(i);
    present[static_cast<std::size_t>(v - lo) * n_groups + g] = 1;
    gmin[g] = std::min(gmin[g], v);
    gmax[g] = std::max(gmax[g], v);
  }
  const long long min_l = *std::max_element(gmin.begin(), gmin.end());
  const long long max_u = *std::min_element(gmax.begin(), gmax.end());

  auto all_present = [&](long long v) {
    for (int g = 0; g < n_groups; ++g)
      if (!present[static_cast<std::size_t>(v - lo) * n_groups + g]) return false;
    return true;
  };

  long long best_l = lo, best_u = lo;  // width-0 window is always feasible
  for (long long L = min_l; L <= max_u; ++L) {
    long long U = L + 1;
    while (U <= max_u && (U - 1 <= L || all_present(U - 1))) {
      if (U - L > best_u - best_l) {
        best_l = L;
        best_u = U;
      }
      ++U;
    }
  }

  Segmentation seg;
  seg.kind = Segmentation::Kind::count_clip;
  seg.clip_lo = best_l;
  seg.clip_hi = best_u;
  return seg;
}

}  // namespace detail

// Builds the outcome segmentation on training data.  Binary and multiclass
// outcomes get one segment per observed label.  Continuous outcomes start at
// max_segments and decrease until every segment holds every group.  Count
// outcomes are clipped into the widest feasible integer window.
inline Segmentation discretize(const Vector& y, const IntVector& groups,
                               int n_groups, OutcomeType type, int max_segments,
                               SegmentStrategy strategy) {
  if (n_groups < 2) throw config_error("discretize: need at least 2 groups");
  if (max_segments < 1) throw config_error("discretize: max_segments must be >= 1");
  if (y.size() == 0) throw data_error("discretize: empty outcome vector");

  std::vector<long long> group_count(n_groups, 0);
  for (Eigen::Index i = 0; i < groups.size(); ++i) {
    if (groups(i) < 0 || groups(i) >= n_groups)
      throw data_error("discretize: group index out of range at row " +
                       std::to_string(i));
    ++group_count[groups(i)];
  }
  for (int g = 0; g < n_groups; ++g) {
    if (group_count[g] == 0)
      throw data_error("discretize: group " + std::to_string(g) +
                       " has no samples; no segmentation is feasible");
  }

  if (type == OutcomeType::binary || type == OutcomeType::multiclass) {
    Segmentation seg;
    seg.kind = Segmentation::Kind::per_value;
    seg.values.assign(y.data(), y.data() + y.size());
    std::sort(seg.values.begin(), seg.values.end());
    seg.values.erase(std::unique(seg.values.begin(), seg.values.end()),
                     seg.values.end());
    return seg;
  }

  if (type == OutcomeType::count)
    return detail::widest_count_window(y, groups, n_groups);

  // continuous: largest feasible t <= max_segments
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());
  for (int t = max_segments; t >= 1; --t) {
    auto edges = strategy == SegmentStrategy::equal_counts
                     ? detail::equal_count_edges(sorted, t)
                     : detail::equal_length_edges(sorted.front(), sorted.back(), t);
    if (!edges) continue;
    Segmentation seg;
    seg.kind = Segmentation::Kind::interval;
    seg.boundaries = std::move(*edges);
    if (detail::covers_all_groups(seg, y, groups, n_groups)) return seg;
  }
  // unreachable: t = 1 is feasible once every group has a sample
  throw data_error("discretize: no feasible segmentation");
}

}  // namespace fairglm
