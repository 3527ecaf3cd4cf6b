#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mat/gate3dii.hpp"

namespace mat {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track, detection), ascending track
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

namespace detail {

// Shortest-augmenting-path Hungarian method on a rows <= cols matrix.
// Returns the column assigned to each row.
inline std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; index 0 is the virtual root.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> owner(cols + 1, 0), way(cols + 1, 0);
  std::vector<double> minv(cols + 1);
  std::vector<char> used(cols + 1);

  for (std::size_t i = 1; i <= rows; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(rows, 0);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

// Minimum-cost matching that never uses a forbidden pair. Forbidden entries are
// priced above any feasible total, so the solver first maximizes the number of
// admissible matches and then minimizes their cost; forbidden pairs it is forced
// into are dropped afterwards.
inline Assignment km_solve(const GatedCost& cost) {
  Assignment out;
  const std::size_t rows = cost.rows;
  const std::size_t cols = cost.cols;

  std::vector<char> row_matched(rows, 0), col_matched(cols, 0);
  if (rows > 0 && cols > 0 && !cost.entries.empty()) {
    double max_abs = 0.0;
    for (const auto& e : cost.entries) max_abs = std::max(max_abs, std::abs(e.cost));
    const bool transpose = rows > cols;
    const std::size_t r = transpose ? cols : rows;
    const std::size_t c = transpose ? rows : cols;
    const double forbidden = static_cast<double>(r) * (max_abs + 1.0) + 1.0;

    std::vector<double> dense(r * c, forbidden);
    for (const auto& e : cost.entries) {
      if (transpose) {
        dense[e.col * c + e.row] = e.cost;
      } else {
        dense[e.row * c + e.col] = e.cost;
      }
    }
    const auto assigned = detail::hungarian(dense, r, c);
    for (std::size_t i = 0; i < r; ++i) {
      const std::size_t j = assigned[i];
      if (dense[i * c + j] >= forbidden) continue;
      const std::size_t track = transpose ? j : i;
      const std::size_t det = transpose ? i : j;
      out.matches.emplace_back(track, det);
      row_matched[track] = 1;
      col_matched[det] = 1;
    }
    std::sort(out.matches.begin(), out.matches.end());
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!row_matched[i]) out.unmatched_tracks.push_back(i);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (!col_matched[j]) out.unmatched_detections.push_back(j);
  }
  return out;
}

inline double total_cost(const GatedCost& cost, const Assignment& a) {
  double sum = 0.0;
  for (const auto& [t, d] : a.matches) sum += cost.at(t, d);
  return sum;
}

}  // namespace mat
