#pragma once

#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace rtrack {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;

  double total_cost(const Matrix& cost) const {
    double sum = 0.0;
    for (const auto& [r, c] : pairs) sum += cost(r, c);
    return sum;
  }
};

namespace detail {

// Shortest-augmenting-path Hungarian method with row/column potentials.
// Requires rows <= cols; returns the column assigned to each row.
inline std::vector<int> hungarian_rows_le_cols(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based bookkeeping; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline Assignment make_assignment(std::vector<std::pair<int, int>> pairs, int rows, int cols) {
  std::sort(pairs.begin(), pairs.end());
  Assignment a;
  std::vector<char> row_used(rows, 0), col_used(cols, 0);
  for (const auto& [r, c] : pairs) {
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (int r = 0; r < rows; ++r)
    if (!row_used[r]) a.unmatched_rows.push_back(r);
  for (int c = 0; c < cols; ++c)
    if (!col_used[c]) a.unmatched_cols.push_back(c);
  a.pairs = std::move(pairs);
  return a;
}

}  // namespace detail

/// Minimum-cost one-to-one assignment of size min(rows, cols).
/// Rows are augmented in index order and columns scanned in index order with
/// strict comparisons, so equal-cost optima resolve the same way every run.
inline Assignment solve(const Matrix& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!std::isfinite(cost(i, j)))
        throw Error(ErrorCode::InvalidCost,
                    "non-finite entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");

  std::vector<std::pair<int, int>> pairs;
  if (rows > 0 && cols > 0) {
    if (rows <= cols) {
      const auto r2c = detail::hungarian_rows_le_cols(cost);
      for (int r = 0; r < rows; ++r) pairs.emplace_back(r, r2c[r]);
    } else {
      const Matrix t = cost.transpose();
      const auto c2r = detail::hungarian_rows_le_cols(t);
      for (int c = 0; c < cols; ++c) pairs.emplace_back(c2r[c], c);
    }
  }
  return detail::make_assignment(std::move(pairs), rows, cols);
}

/// Drops pairs whose IoU is below tau; their endpoints become unmatched.
inline Assignment gate(const Assignment& a, const Matrix& iou, double tau) {
  std::vector<std::pair<int, int>> kept;
  kept.reserve(a.pairs.size());
  for (const auto& pr : a.pairs)
    if (iou(pr.first, pr.second) >= tau) kept.push_back(pr);

  Assignment out;
  out.pairs = std::move(kept);
  out.unmatched_rows = a.unmatched_rows;
  out.unmatched_cols = a.unmatched_cols;
  for (const auto& [r, c] : a.pairs) {
    if (iou(r, c) < tau) {
      out.unmatched_rows.push_back(r);
      out.unmatched_cols.push_back(c);
    }
  }
  std::sort(out.unmatched_rows.begin(), out.unmatched_rows.end());
  std::sort(out.unmatched_cols.begin(), out.unmatched_cols.end());
  return out;
}

/// Cost convention used wherever IoU drives matching.
inline Matrix iou_cost(const Matrix& iou) { return (1.0 - iou.array()).matrix(); }

/// Maximum-IoU matching restricted to pairs with IoU >= tau. Entries below the
/// gate are zeroed before solving so that a sub-gate pair never displaces a
/// valid one; the result then equals the best gated matching.
inline Assignment solve_gated(const Matrix& iou, double tau) {
  const Matrix masked = (iou.array() >= tau).select(iou, 0.0);
  return gate(solve(iou_cost(masked)), iou, tau);
}

}  // namespace rtrack
