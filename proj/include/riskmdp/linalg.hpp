#pragma once

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "riskmdp/rational.hpp"

namespace riskmdp {

using Matrix = std::vector<std::vector<Rational>>;

/// Solves A X = B exactly by Gaussian elimination (A square, B with any
/// number of columns).  Throws std::domain_error if A is singular.
Matrix solve_linear(Matrix a, Matrix b);

/// Row of a sparse matrix: (column, value) pairs sorted by column.
using SparseRow = std::vector<std::pair<std::size_t, Rational>>;

/// Solves A x = b exactly for a square sparse A given by its rows, pivoting on
/// sparse columns first to limit fill-in.  Throws std::domain_error if A is
/// singular.
std::vector<Rational> solve_sparse(std::vector<SparseRow> rows, std::vector<Rational> rhs);

namespace detail {

// Shared by the exact solver and floating-point callers.  The pivot row is
// the shortest one whose entry is within a factor 10 of the column's largest
// `magnitude`.
template <class T, class IsZero, class Magnitude>
std::vector<T> solve_sparse(std::vector<std::vector<std::pair<std::size_t, T>>> rows, std::vector<T> rhs,
                            IsZero is_zero, Magnitude magnitude) {
  const std::size_t n = rows.size();
  if (rhs.size() != n) throw std::invalid_argument("right-hand side has wrong row count");
  std::vector<std::set<std::size_t>> col_rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [c, v] : rows[i]) {
      if (c >= n) throw std::invalid_argument("sparse system: column out of range");
      col_rows[c].insert(i);
    }
  }
  std::vector<bool> col_done(n, false);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (row, column)
  order.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t col = n;
    std::size_t count = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < n; ++c) {
      if (!col_done[c] && col_rows[c].size() < count) {
        col = c;
        count = col_rows[c].size();
      }
    }
    if (count == 0 || count == std::numeric_limits<std::size_t>::max()) throw std::domain_error("singular linear system");
    auto entry = [&](std::size_t r) -> const T& {
      return std::find_if(rows[r].begin(), rows[r].end(), [&](const auto& e) { return e.first == col; })->second;
    };
    double largest = 0;
    for (std::size_t r : col_rows[col]) largest = std::max(largest, magnitude(entry(r)));
    std::size_t row = n;
    for (std::size_t r : col_rows[col]) {
      if (magnitude(entry(r)) < 0.1 * largest) continue;
      if (row == n || rows[r].size() < rows[row].size()) row = r;
    }
    col_done[col] = true;
    for (const auto& [c, v] : rows[row]) col_rows[c].erase(row);
    const T inv = T(1) / entry(row);
    const std::vector<std::size_t> others(col_rows[col].begin(), col_rows[col].end());
    for (std::size_t i : others) {
      const T f = entry(i) * inv;
      std::vector<std::pair<std::size_t, T>> out;
      out.reserve(rows[i].size() + rows[row].size());
      auto a = rows[i].begin();
      auto b = rows[row].begin();
      while (a != rows[i].end() || b != rows[row].end()) {
        if (b == rows[row].end() || (a != rows[i].end() && a->first < b->first)) {
          out.push_back(*a++);
        } else if (a == rows[i].end() || b->first < a->first) {
          out.emplace_back(b->first, -(f * b->second));
          col_rows[b->first].insert(i);
          ++b;
        } else {
          T v = b->first == col ? T() : a->second - f * b->second;
          if (is_zero(v)) {
            col_rows[a->first].erase(i);
          } else {
            out.emplace_back(a->first, std::move(v));
          }
          ++a;
          ++b;
        }
      }
      rows[i] = std::move(out);
      if (!is_zero(rhs[row])) rhs[i] -= f * rhs[row];
    }
    order.emplace_back(row, col);
  }
  std::vector<T> x(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto [row, col] = *it;
    T acc = rhs[row];
    T diag{};
    for (const auto& [c, v] : rows[row]) {
      if (c == col) {
        diag = v;
      } else {
        acc -= v * x[c];
      }
    }
    x[col] = acc / diag;
  }
  return x;
}

}  // namespace detail

}  // namespace riskmdp
