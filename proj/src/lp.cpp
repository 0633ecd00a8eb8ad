#include "riskmdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "riskmdp/linalg.hpp"

namespace riskmdp {

std::size_t LinearProgram::add_variable(std::string name, bool nonneg) {
  std::size_t id = names_.size();
  if (!index_.emplace(name, id).second) throw std::invalid_argument("duplicate LP variable " + name);
  names_.push_back(std::move(name));
  nonneg_.push_back(nonneg);
  return id;
}

void LinearProgram::add_constraint(LinearExpr lhs, Relation rel, Rational rhs, std::string label) {
  for (const auto& [v, c] : lhs) {
    if (v >= names_.size()) throw std::invalid_argument("constraint uses undeclared variable");
  }
  constraints_.push_back(LpConstraint{std::move(lhs), rel, std::move(rhs), std::move(label)});
}

void LinearProgram::set_objective(LinearExpr expr, Sense sense) {
  for (const auto& [v, c] : expr) {
    if (v >= names_.size()) throw std::invalid_argument("objective uses undeclared variable");
  }
  objective_ = std::move(expr);
  sense_ = sense;
}

std::optional<std::size_t> LinearProgram::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string render(const LinearProgram& lp, const LinearExpr& expr) {
  if (expr.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [v, c] : expr) {
    if (!first) out += c.sign() < 0 ? " - " : " + ";
    Rational mag = first ? c : c.abs();
    first = false;
    if (mag == Rational(-1)) {
      out += "-";
    } else if (!mag.is_one()) {
      out += mag.str() + " ";
    }
    out += lp.name(v);
  }
  return out;
}

const char* symbol(Relation r) {
  switch (r) {
    case Relation::Le:
      return "<=";
    case Relation::Eq:
      return "=";
    case Relation::Ge:
      return ">=";
  }
  return "=";
}

}  // namespace

std::string LinearProgram::dump() const {
  std::ostringstream os;
  if (objective_) {
    os << (sense_ == Sense::Maximize ? "maximize " : "minimize ") << render(*this, *objective_) << "\n";
  } else {
    os << "feasibility\n";
  }
  os << "subject to\n";
  for (const auto& c : constraints_) {
    os << "  ";
    if (!c.label.empty()) os << c.label << ": ";
    os << render(*this, c.lhs) << " " << symbol(c.rel) << " " << c.rhs.str() << "\n";
  }
  os << "bounds\n";
  for (std::size_t v = 0; v < names_.size(); ++v) {
    os << "  " << names_[v] << (nonneg_[v] ? " >= 0" : " free") << "\n";
  }
  return os.str();
}

namespace {

template <class T>
struct Arith;

template <>
struct Arith<Rational> {
  static int sign(const Rational& v) { return v.sign(); }
  static bool zero(const Rational& v) { return v.is_zero(); }
  static bool one(const Rational& v) { return v.is_one(); }
  static Rational inv(const Rational& v) { return v.reciprocal(); }
  static bool pivotable(const Rational& v) { return v.sign() > 0; }
  static const Rational& clamp(const Rational& v) { return v; }
  static double magnitude(const Rational&) { return 1; }
};

// Floating-point arithmetic for the fast passes; their answers are only candidates.
template <class F>
struct Tol;

template <class F>
struct FloatArith {
  static int sign(F v) { return v > Tol<F>::kZero ? 1 : (v < -Tol<F>::kZero ? -1 : 0); }
  static bool zero(F v) { return std::abs(v) <= Tol<F>::kZero; }
  static bool one(F v) { return v == F(1); }
  static F inv(F v) { return F(1) / v; }
  static bool pivotable(F v) { return v > Tol<F>::kPivot; }
  static F clamp(F v) { return v < 0 ? F(0) : v; }
  static double magnitude(F v) { return static_cast<double>(std::abs(v)); }
};

template <>
struct Tol<double> {
  static constexpr double kZero = 1e-11;
  static constexpr double kPivot = 1e-9;
};

template <>
struct Tol<long double> {
  static constexpr long double kZero = 1e-14L;
  static constexpr long double kPivot = 1e-11L;
};

template <>
struct Arith<double> : FloatArith<double> {};
template <>
struct Arith<long double> : FloatArith<long double> {};

template <class F>
F to_float(const Rational& v) {
  if (v.is_small()) {
    mpq_class q = v.to_mpq();
    if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p()) {
      return static_cast<F>(q.get_num().get_si()) / static_cast<F>(q.get_den().get_si());
    }
  }
  return static_cast<F>(v.to_double());
}

template <class T>
using Row = std::vector<std::pair<std::size_t, T>>;

template <class T>
const T* lookup(const Row<T>& row, std::size_t col) {
  auto it = std::lower_bound(row.begin(), row.end(), col,
                             [](const auto& e, std::size_t c) { return e.first < c; });
  if (it == row.end() || it->first != col) return nullptr;
  return &it->second;
}

// out = row - f * pivot, both sorted by column.
template <class T>
void subtract_scaled(const Row<T>& row, const T& f, const Row<T>& pivot, Row<T>& out) {
  out.clear();
  out.reserve(row.size() + pivot.size());
  auto a = row.begin();
  auto b = pivot.begin();
  while (a != row.end() || b != pivot.end()) {
    if (b == pivot.end() || (a != row.end() && a->first < b->first)) {
      out.push_back(*a++);
    } else if (a == row.end() || b->first < a->first) {
      T v = -(f * b->second);
      if (!Arith<T>::zero(v)) out.emplace_back(b->first, std::move(v));
      ++b;
    } else {
      T v = a->second - f * b->second;
      if (!Arith<T>::zero(v)) out.emplace_back(a->first, std::move(v));
      ++a;
      ++b;
    }
  }
}

enum class Phase { Optimal, Unbounded, Stalled };

// Dense-cost, sparse-row tableau simplex for min c^T x, A x = b, x >= 0, b >= 0.
template <class T>
class Tableau {
 public:
  Tableau(std::vector<Row<T>> rows, std::vector<T> rhs, std::vector<std::size_t> basis, std::size_t cols)
      : rows_(std::move(rows)), rhs_(std::move(rhs)), basis_(std::move(basis)), banned_(cols, false), cols_(cols) {
    for (std::size_t i = 0; i < rows_.size(); ++i) row_ids_.push_back(i);
  }

  void set_pivot_limit(std::size_t limit) { limit_ = limit; }

  // Small distinct positive shifts of the current basic values, used only in
  // the ratio test so the float pass does not stall on degenerate vertices.
  void perturb(T scale) {
    shift_.assign(rows_.size(), T{});
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      shift_[i] = scale * (T(1) + T(static_cast<double>((i * 7919) % 1009) / 1009));
    }
  }

  // Drops the shifts, then restores non-negative basic values by dual simplex
  // pivots, which keep the reduced costs non-negative.  False if that fails
  // or takes more pivots than there are rows.
  bool unperturb() {
    shift_.clear();
    const std::size_t budget = std::min(limit_, pivots_ + rows_.size());
    for (;;) {
      std::size_t r = rows_.size();
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (Arith<T>::sign(rhs_[i]) < 0 && (r == rows_.size() || rhs_[i] < rhs_[r])) r = i;
      }
      if (r == rows_.size()) return true;
      if (pivots_ >= budget) return false;
      // Ties within tolerance go to the largest |a|, which keeps the
      // repair from cycling through degenerate dual pivots.
      std::size_t enter = cols_;
      T best{};
      T size{};
      for (const auto& [j, a] : rows_[r]) {
        if (banned_[j] || Arith<T>::sign(a) >= 0 || Arith<T>::pivotable(-a) == false) continue;
        T ratio = Arith<T>::clamp(reduced_[j]) / -a;
        const T gap = ratio - best;
        if (enter == cols_ || Arith<T>::sign(gap) < 0 || (Arith<T>::zero(gap) && -a > size)) {
          enter = j;
          best = std::move(ratio);
          size = -a;
        }
      }
      if (enter == cols_) return false;
      pivot(r, enter);
    }
  }

  void set_costs(const std::vector<T>& cost) {
    cost_ = cost;
    reduced_ = cost;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const T& cb = cost[basis_[i]];
      if (Arith<T>::zero(cb)) continue;
      for (const auto& [j, v] : rows_[i]) reduced_[j] -= cb * v;
    }
  }

  Phase optimize() {
    std::size_t degenerate_run = 0;
    bool bland = false;
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (banned_[j] || Arith<T>::sign(reduced_[j]) >= 0) continue;
        if (enter == cols_ || (!bland && reduced_[j] < reduced_[enter])) enter = j;
        if (bland) break;
      }
      if (enter == cols_) return Phase::Optimal;
      if (pivots_ >= limit_) return Phase::Stalled;
      std::size_t leave = rows_.size();
      T best{};
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const T* a = lookup(rows_[i], enter);
        if (!a || !Arith<T>::pivotable(*a)) continue;
        T ratio = Arith<T>::clamp(shift_.empty() ? rhs_[i] : rhs_[i] + shift_[i]) / *a;
        if (leave == rows_.size() || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = std::move(ratio);
        }
      }
      if (leave == rows_.size()) {
        entering_ = enter;
        return Phase::Unbounded;
      }
      if (Arith<T>::zero(best)) {
        // Long degenerate stretches switch to Bland's rule for good, which cannot cycle.
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t j) {
    ++pivots_;
    T inv = Arith<T>::inv(*lookup(rows_[r], j));
    if (!Arith<T>::one(inv)) {
      for (auto& [c, v] : rows_[r]) v *= inv;
      rhs_[r] *= inv;
      if (!shift_.empty()) shift_[r] *= inv;
    }
    const Row<T>& prow = rows_[r];
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i == r) continue;
      const T* a = lookup(rows_[i], j);
      if (!a) continue;
      T f = *a;
      subtract_scaled(rows_[i], f, prow, scratch_);
      rows_[i].swap(scratch_);
      if (!Arith<T>::zero(rhs_[r])) rhs_[i] -= f * rhs_[r];
      if (!shift_.empty()) shift_[i] -= f * shift_[r];
    }
    if (!Arith<T>::zero(reduced_[j])) {
      T f = reduced_[j];
      for (const auto& [c, v] : prow) reduced_[c] -= f * v;
    }
    basis_[r] = j;
  }

  T objective_value() const {
    T z{};
    for (std::size_t i = 0; i < rows_.size(); ++i) z += cost_[basis_[i]] * rhs_[i];
    return z;
  }

  // Pivots basic columns in `artificial` out of the basis where possible and
  // drops rows that turn out to be redundant.
  void expel(const std::vector<bool>& artificial) {
    for (std::size_t i = 0; i < rows_.size();) {
      if (!artificial[basis_[i]]) {
        ++i;
        continue;
      }
      std::size_t enter = cols_;
      double size = 0;
      for (const auto& [c, v] : rows_[i]) {
        if (!artificial[c] && Arith<T>::magnitude(v) > size) {
          enter = c;
          size = Arith<T>::magnitude(v);
        }
      }
      if (enter == cols_) {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(i));
        rhs_.erase(rhs_.begin() + static_cast<std::ptrdiff_t>(i));
        if (!shift_.empty()) shift_.erase(shift_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
        row_ids_.erase(row_ids_.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      pivot(i, enter);
      ++i;
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      if (artificial[j]) banned_[j] = true;
    }
  }

  std::vector<T> primal() const {
    std::vector<T> x(cols_);
    for (std::size_t i = 0; i < rows_.size(); ++i) x[basis_[i]] = rhs_[i];
    return x;
  }

  const std::vector<std::size_t>& basis() const { return basis_; }
  const Row<T>& row(std::size_t i) const { return rows_[i]; }
  const T& reduced(std::size_t j) const { return reduced_[j]; }
  bool banned(std::size_t j) const { return banned_[j]; }
  const std::vector<std::size_t>& row_ids() const { return row_ids_; }
  std::size_t entering() const { return entering_; }
  std::size_t pivots() const { return pivots_; }

 private:
  std::vector<Row<T>> rows_;
  std::vector<T> rhs_;
  Row<T> scratch_;
  std::vector<T> shift_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> row_ids_;  // original row of each remaining row
  std::vector<T> cost_;
  std::vector<T> reduced_;
  std::vector<bool> banned_;
  std::size_t cols_;
  std::size_t pivots_ = 0;
  std::size_t limit_ = std::numeric_limits<std::size_t>::max();
  std::size_t entering_ = 0;
};

struct StandardForm {
  std::vector<SparseRow> rows;
  std::vector<Rational> rhs;
  std::vector<std::size_t> basis;
  std::vector<bool> artificial;
  std::vector<std::size_t> pos;  // variable -> positive column
  std::vector<std::optional<std::size_t>> neg;
  std::size_t cols = 0;
};

StandardForm standardize(const LinearProgram& lp) {
  StandardForm f;
  for (std::size_t v = 0; v < lp.num_variables(); ++v) {
    f.pos.push_back(f.cols++);
    f.neg.push_back(lp.nonneg(v) ? std::nullopt : std::optional<std::size_t>(f.cols++));
  }
  struct Pending {
    SparseRow row;
    Rational rhs;
    Relation rel;
  };
  std::vector<Pending> pending;
  for (const auto& c : lp.constraints()) {
    SparseRow row;
    for (const auto& [v, coef] : c.lhs) {
      row.emplace_back(f.pos[v], coef);
      if (f.neg[v]) row.emplace_back(*f.neg[v], -coef);
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseRow merged;
    for (auto& e : row) {
      if (!merged.empty() && merged.back().first == e.first) {
        merged.back().second += e.second;
      } else {
        merged.push_back(std::move(e));
      }
    }
    std::erase_if(merged, [](const auto& e) { return e.second.is_zero(); });
    Rational rhs = c.rhs;
    Relation rel = c.rel;
    if (rhs.sign() < 0) {
      for (auto& [j, v] : merged) v = -v;
      rhs = -rhs;
      if (rel == Relation::Le) {
        rel = Relation::Ge;
      } else if (rel == Relation::Ge) {
        rel = Relation::Le;
      }
    }
    pending.push_back(Pending{std::move(merged), std::move(rhs), rel});
  }
  std::vector<std::size_t> artificial;
  for (auto& p : pending) {
    if (p.rel == Relation::Le) {
      std::size_t slack = f.cols++;
      p.row.emplace_back(slack, Rational(1));
      f.basis.push_back(slack);
    } else {
      if (p.rel == Relation::Ge) p.row.emplace_back(f.cols++, Rational(-1));
      std::size_t art = f.cols++;
      p.row.emplace_back(art, Rational(1));
      f.basis.push_back(art);
      artificial.push_back(art);
    }
    f.rows.push_back(std::move(p.row));
    f.rhs.push_back(std::move(p.rhs));
  }
  f.artificial.assign(f.cols, false);
  for (std::size_t j : artificial) f.artificial[j] = true;
  return f;
}

LpSolution recover(const LinearProgram& lp, const StandardForm& f, const std::vector<Rational>& x) {
  LpSolution sol;
  for (std::size_t v = 0; v < lp.num_variables(); ++v) {
    Rational val = x[f.pos[v]];
    if (f.neg[v]) val -= x[*f.neg[v]];
    sol.values.push_back(std::move(val));
  }
  return sol;
}

std::vector<Rational> phase_one_costs(const StandardForm& f) {
  std::vector<Rational> c(f.cols);
  for (std::size_t j = 0; j < f.cols; ++j) {
    if (f.artificial[j]) c[j] = Rational(1);
  }
  return c;
}

std::vector<Rational> phase_two_costs(const LinearProgram& lp, const StandardForm& f) {
  std::vector<Rational> cost(f.cols);
  const bool maximize = lp.sense() == Sense::Maximize;
  for (const auto& [v, c] : *lp.objective()) {
    Rational cc = maximize ? -c : c;
    cost[f.pos[v]] += cc;
    if (f.neg[v]) cost[*f.neg[v]] -= cc;
  }
  return cost;
}

void finish(const LinearProgram& lp, const StandardForm& f, const std::vector<Rational>& x, LpResult& result) {
  result.solution = recover(lp, f, x);
  if (lp.objective()) result.objective = evaluate(*lp.objective(), result.solution);
}

LpResult run_exact(const LinearProgram& lp, const StandardForm& f, bool optimize, std::size_t pivots_so_far) {
  Tableau<Rational> t(f.rows, f.rhs, f.basis, f.cols);
  t.set_costs(phase_one_costs(f));
  t.optimize();
  LpResult result;
  if (t.objective_value().sign() > 0) {
    result.status = LpStatus::Infeasible;
    result.pivots = pivots_so_far + t.pivots();
    return result;
  }
  t.expel(f.artificial);
  if (optimize) {
    t.set_costs(phase_two_costs(lp, f));
    if (t.optimize() == Phase::Unbounded) {
      result.status = LpStatus::Unbounded;
      result.pivots = pivots_so_far + t.pivots();
      return result;
    }
    result.status = LpStatus::Optimal;
  } else {
    result.status = LpStatus::Feasible;
  }
  finish(lp, f, t.primal(), result);
  result.pivots = pivots_so_far + t.pivots();
  return result;
}

// Exact checks of a basis proposed by the floating-point pass.  `rows` are the
// standard-form rows the basis is square over; `basis[k]` is basic in row k.
class BasisCheck {
 public:
  BasisCheck(const StandardForm& f, std::vector<std::size_t> rows, std::vector<std::size_t> basis)
      : f_(f), rows_(std::move(rows)), basis_(std::move(basis)), slot_(f.cols, kNone) {
    for (std::size_t k = 0; k < basis_.size(); ++k) slot_[basis_[k]] = k;
  }

  // Values of all standard-form columns at the basic solution.
  std::vector<Rational> primal() const {
    std::vector<SparseRow> b(rows_.size());
    std::vector<Rational> rhs;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (const auto& [j, v] : f_.rows[rows_[i]]) {
        if (slot_[j] != kNone) b[i].emplace_back(slot_[j], v);
      }
      std::sort(b[i].begin(), b[i].end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      rhs.push_back(f_.rhs[rows_[i]]);
    }
    auto xb = solve_sparse(std::move(b), std::move(rhs));
    std::vector<Rational> x(f_.cols);
    for (std::size_t k = 0; k < basis_.size(); ++k) x[basis_[k]] = std::move(xb[k]);
    return x;
  }

  // Non-negative, artificial columns at zero, every row met.
  bool feasible(const std::vector<Rational>& x) const {
    for (std::size_t j = 0; j < f_.cols; ++j) {
      if (x[j].sign() < 0 || (f_.artificial[j] && !x[j].is_zero())) return false;
    }
    for (std::size_t r = 0; r < f_.rows.size(); ++r) {
      Rational lhs;
      for (const auto& [j, v] : f_.rows[r]) {
        if (!x[j].is_zero()) lhs += v * x[j];
      }
      if (lhs != f_.rhs[r]) return false;
    }
    return true;
  }

  // Row multipliers y with y^T B = c_B.
  std::vector<Rational> duals(const std::vector<Rational>& cost) const {
    std::vector<Rational> cb;
    for (std::size_t k : basis_) cb.push_back(cost[k]);
    return duals_for(std::move(cb));
  }

  // y with y^T B = target (one entry per basic column).
  std::vector<Rational> duals_for(std::vector<Rational> target) const {
    std::vector<SparseRow> bt(basis_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (const auto& [j, v] : f_.rows[rows_[i]]) {
        if (slot_[j] != kNone) bt[slot_[j]].emplace_back(i, v);
      }
    }
    return solve_sparse(std::move(bt), std::move(target));
  }

  bool basic(std::size_t j) const { return slot_[j] != kNone; }

  std::vector<Rational> reduced_costs(const std::vector<Rational>& cost, const std::vector<Rational>& y) const {
    std::vector<Rational> d = cost;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (y[i].is_zero()) continue;
      for (const auto& [j, v] : f_.rows[rows_[i]]) d[j] -= y[i] * v;
    }
    return d;
  }

  Rational dual_objective(const std::vector<Rational>& y) const {
    Rational z;
    for (std::size_t i = 0; i < rows_.size(); ++i) z += y[i] * f_.rhs[rows_[i]];
    return z;
  }

  // B z = column `enter` of A.
  std::vector<Rational> column_solve(std::size_t enter) const {
    std::vector<SparseRow> b(rows_.size());
    std::vector<Rational> rhs(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (const auto& [j, v] : f_.rows[rows_[i]]) {
        if (slot_[j] != kNone) b[i].emplace_back(slot_[j], v);
        if (j == enter) rhs[i] = v;
      }
      std::sort(b[i].begin(), b[i].end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    }
    return solve_sparse(std::move(b), std::move(rhs));
  }

  // Row `k` of B^-1 A, over all columns.
  std::vector<Rational> row_solve(std::size_t k) const {
    std::vector<Rational> unit(basis_.size());
    unit[k] = Rational(1);
    auto rho = duals_for(unit);
    std::vector<Rational> alpha(f_.cols);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rho[i].is_zero()) continue;
      for (const auto& [j, v] : f_.rows[rows_[i]]) alpha[j] += rho[i] * v;
    }
    return alpha;
  }

  // Direction that raises column `enter` by one and keeps every row balanced;
  // nullopt unless it stays non-negative with artificial columns at zero.
  std::optional<std::vector<Rational>> ray(std::size_t enter) const {
    auto z = column_solve(enter);
    std::vector<Rational> d(f_.cols);
    d[enter] = Rational(1);
    for (std::size_t k = 0; k < basis_.size(); ++k) d[basis_[k]] = -z[k];
    for (std::size_t j = 0; j < f_.cols; ++j) {
      if (d[j].sign() < 0 || (f_.artificial[j] && !d[j].is_zero())) return std::nullopt;
    }
    for (const auto& row : f_.rows) {
      Rational lhs;
      for (const auto& [j, v] : row) lhs += v * d[j];
      if (!lhs.is_zero()) return std::nullopt;
    }
    return d;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  const StandardForm& f_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> slot_;
};

// Exact-guided pivots allowed before a pass gives up.  Each costs an exact
// solve, so the double pass hands over to long double early.
template <class F>
constexpr std::size_t kPolishLimit = 60;
template <>
constexpr std::size_t kPolishLimit<double> = 8;

enum class Polish { Optimal, Unbounded, GaveUp };

struct Polished {
  Polish end = Polish::GaveUp;
  std::vector<Rational> x;
};

// Finishes a float pass whose basis is nearly optimal.  Basic values and the
// final optimality test are exact; the float tableau, pivoted in step, only
// proposes pivots.  Dual pivots while some exact basic value is negative,
// primal pivots afterwards.  Gives up after `limit` pivots or when no pivot applies.
template <class F>
Polished polish(Tableau<F>& t, const StandardForm& f, const std::vector<Rational>& cost, std::size_t limit) {
  using A = Arith<F>;
  Polished out;
  for (std::size_t it = 0; it <= limit; ++it) {
    BasisCheck check(f, t.row_ids(), t.basis());
    auto x = check.primal();
    const auto& basis = t.basis();
    std::size_t low = basis.size();
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Rational& v = x[basis[k]];
      if (t.banned(basis[k]) && v.sign() > 0) return out;
      if (v.sign() < 0 && (low == basis.size() || v < x[basis[low]])) low = k;
    }
    if (low != basis.size()) {
      if (it == limit) return out;
      std::size_t enter = f.cols;
      F best = 0, size = 0;
      for (const auto& [j, a] : t.row(low)) {
        if (t.banned(j) || check.basic(j) || !A::pivotable(-a)) continue;
        F ratio = A::clamp(t.reduced(j)) / -a;
        if (enter == f.cols || ratio < best || (ratio == best && -a > size)) {
          enter = j;
          best = ratio;
          size = -a;
        }
      }
      if (enter == f.cols) return out;
      t.pivot(low, enter);
      continue;
    }
    auto d = check.reduced_costs(cost, check.duals(cost));
    std::size_t enter = f.cols;
    for (std::size_t j = 0; j < f.cols; ++j) {
      if (t.banned(j) || check.basic(j) || d[j].sign() >= 0) continue;
      if (enter == f.cols || d[j] < d[enter]) enter = j;
    }
    if (enter == f.cols) {
      out.end = Polish::Optimal;
      out.x = std::move(x);
      return out;
    }
    if (it == limit) return out;
    std::size_t leave = basis.size();
    F best = 0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const F* a = lookup(t.row(k), enter);
      if (!a || !A::pivotable(*a)) continue;
      F ratio = to_float<F>(x[basis[k]]) / *a;
      if (leave == basis.size() || ratio < best) {
        leave = k;
        best = ratio;
      }
    }
    if (leave == basis.size()) {
      if (auto ray = check.ray(enter)) {
        out.end = Polish::Unbounded;
        out.x = std::move(x);
      }
      return out;
    }
    t.pivot(leave, enter);
  }
  return out;
}

template <class F>
std::vector<F> to_floats(const std::vector<Rational>& v) {
  std::vector<F> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(to_float<F>(x));
  return out;
}

// Simplex in floating point, then exact certificates for whatever it claims.
// Returns nullopt when a certificate fails; the caller then runs the exact tableau.
template <class F>
std::optional<LpResult> run_float(const LinearProgram& lp, const StandardForm& f, bool optimize,
                                  std::size_t& pivots) {
  std::vector<Row<F>> rows;
  for (const auto& r : f.rows) {
    Row<F> d;
    for (const auto& [j, v] : r) d.emplace_back(j, to_float<F>(v));
    rows.push_back(std::move(d));
  }
  auto rhs = to_floats<F>(f.rhs);
  Tableau<F> t(std::move(rows), std::move(rhs), f.basis, f.cols);
  t.set_pivot_limit(20 * (f.rows.size() + f.cols) + 1000);
  const auto phase1 = phase_one_costs(f);
  t.set_costs(to_floats<F>(phase1));
  t.perturb(F(1e-9));
  const Phase first = t.optimize();
  const bool repaired = first == Phase::Optimal && t.unperturb();
  pivots = t.pivots();
  if (!repaired) return std::nullopt;
  LpResult result;
  try {
    BasisCheck start(f, t.row_ids(), t.basis());
    auto x = start.primal();
    if (!start.feasible(x)) {
      // Farkas certificate: y^T A <= 0 on the original columns and y^T b > 0.
      auto y = start.duals(phase1);
      auto d = start.reduced_costs(phase1, y);
      bool farkas = start.dual_objective(y).sign() > 0;
      for (std::size_t j = 0; j < f.cols && farkas; ++j) farkas = f.artificial[j] || d[j].sign() >= 0;
      if (!farkas) {
        // An exactly optimal phase-one basis decides feasibility by its value.
        auto p = polish(t, f, phase1, kPolishLimit<F>);
        pivots = t.pivots();
        if (p.end != Polish::Optimal) return std::nullopt;
        Rational value;
        for (std::size_t j = 0; j < f.cols; ++j) value += phase1[j] * p.x[j];
        farkas = value.sign() > 0;
        x = std::move(p.x);
      }
      if (farkas) {
        result.status = LpStatus::Infeasible;
        result.pivots = pivots;
        return result;
      }
    }
    if (!optimize) {
      result.status = LpStatus::Feasible;
      finish(lp, f, x, result);
      result.pivots = pivots;
      return result;
    }
    t.expel(f.artificial);
    const auto cost = phase_two_costs(lp, f);
    t.set_costs(to_floats<F>(cost));
    t.perturb(F(1e-9));
    const Phase second = t.optimize();
    const bool settled = second == Phase::Unbounded || (second == Phase::Optimal && t.unperturb());
    pivots = t.pivots();
    if (!settled) return std::nullopt;
    BasisCheck check(f, t.row_ids(), t.basis());
    x = check.primal();
    bool certified = check.feasible(x);
    if (certified && second == Phase::Unbounded) {
      auto d = check.ray(t.entering());
      if (d) {
        Rational slope;
        for (std::size_t j = 0; j < f.cols; ++j) slope += cost[j] * (*d)[j];
        if (slope.sign() < 0) {
          result.status = LpStatus::Unbounded;
          result.pivots = pivots;
          return result;
        }
      }
      certified = false;
    }
    if (certified) {
      auto d = check.reduced_costs(cost, check.duals(cost));
      for (std::size_t j = 0; j < f.cols && certified; ++j) certified = f.artificial[j] || d[j].sign() >= 0;
    }
    if (!certified) {
      auto p = polish(t, f, cost, kPolishLimit<F>);
      pivots = t.pivots();
      if (p.end == Polish::GaveUp) return std::nullopt;
      if (p.end == Polish::Unbounded) {
        result.status = LpStatus::Unbounded;
        result.pivots = pivots;
        return result;
      }
      x = std::move(p.x);
      if (!BasisCheck(f, t.row_ids(), t.basis()).feasible(x)) return std::nullopt;
    }
    result.status = LpStatus::Optimal;
    finish(lp, f, x, result);
    result.pivots = pivots;
    return result;
  } catch (const std::domain_error&) {
    return std::nullopt;  // the proposed basis is singular in exact arithmetic
  }
}

// Double, then long double, then the exact tableau, which always settles.
LpResult run(const LinearProgram& lp, bool optimize) {
  StandardForm f = standardize(lp);
  std::size_t pivots = 0;
  std::size_t total = 0;
  if (auto fast = run_float<double>(lp, f, optimize, pivots)) return *fast;
  total += pivots;
  if (auto fast = run_float<long double>(lp, f, optimize, pivots)) {
    fast->pivots += total;
    return *fast;
  }
  total += pivots;
  return run_exact(lp, f, optimize, total);
}

}  // namespace

LpResult solve_feasibility(const LinearProgram& lp) { return run(lp, false); }

LpResult solve_optimize(const LinearProgram& lp) {
  if (!lp.objective()) throw std::invalid_argument("solve_optimize needs an objective");
  return run(lp, true);
}

Rational evaluate(const LinearExpr& expr, const LpSolution& sol) {
  Rational sum;
  for (const auto& [v, c] : expr) sum += c * sol[v];
  return sum;
}

bool check_solution(const LinearProgram& lp, const LpSolution& sol) {
  if (sol.values.size() != lp.num_variables()) return false;
  for (std::size_t v = 0; v < lp.num_variables(); ++v) {
    if (lp.nonneg(v) && sol[v].sign() < 0) return false;
  }
  for (const auto& c : lp.constraints()) {
    Rational lhs = evaluate(c.lhs, sol);
    switch (c.rel) {
      case Relation::Le:
        if (lhs > c.rhs) return false;
        break;
      case Relation::Eq:
        if (lhs != c.rhs) return false;
        break;
      case Relation::Ge:
        if (lhs < c.rhs) return false;
        break;
    }
  }
  return true;
}

}  // namespace riskmdp
