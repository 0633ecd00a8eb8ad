#include "riskmdp/linalg.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

namespace riskmdp {

Matrix solve_linear(Matrix a, Matrix b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("right-hand side has wrong row count");
  const std::size_t k = n == 0 ? 0 : b.front().size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = n;
    for (std::size_t r = col; r < n; ++r) {
      if (!a[r][col].is_zero()) {
        pivot = r;
        if (a[r][col].is_small()) break;
      }
    }
    if (pivot == n) throw std::domain_error("singular linear system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    Rational inv = a[col][col].reciprocal();
    for (std::size_t c = col; c < n; ++c) {
      if (!a[col][c].is_zero()) a[col][c] *= inv;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (!b[col][c].is_zero()) b[col][c] *= inv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col].is_zero()) continue;
      Rational f = a[r][col];
      for (std::size_t c = col; c < n; ++c) {
        if (!a[col][c].is_zero()) a[r][c] -= f * a[col][c];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (!b[col][c].is_zero()) b[r][c] -= f * b[col][c];
      }
    }
  }
  return b;
}

std::vector<Rational> solve_sparse(std::vector<SparseRow> rows, std::vector<Rational> rhs) {
  return detail::solve_sparse<Rational>(std::move(rows), std::move(rhs), [](const Rational& v) { return v.is_zero(); },
                                            [](const Rational&) { return 1.0; });
}

}  // namespace riskmdp
