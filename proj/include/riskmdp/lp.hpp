#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "riskmdp/rational.hpp"

namespace riskmdp {

enum class Relation { Le, Eq, Ge };
enum class Sense { Minimize, Maximize };

using LinearExpr = std::vector<std::pair<std::size_t, Rational>>;

struct LpConstraint {
  LinearExpr lhs;
  Relation rel = Relation::Eq;
  Rational rhs;
  std::string label;
};

/// Linear program over named variables with exact rational coefficients.
class LinearProgram {
 public:
  std::size_t add_variable(std::string name, bool nonneg = true);
  void add_constraint(LinearExpr lhs, Relation rel, Rational rhs, std::string label = {});
  void set_objective(LinearExpr expr, Sense sense);

  std::size_t num_variables() const { return names_.size(); }
  const std::string& name(std::size_t v) const { return names_[v]; }
  bool nonneg(std::size_t v) const { return nonneg_[v]; }
  std::optional<std::size_t> find(const std::string& name) const;
  const std::vector<LpConstraint>& constraints() const { return constraints_; }
  const std::optional<LinearExpr>& objective() const { return objective_; }
  Sense sense() const { return sense_; }

  /// Plain-text dump, one inequality per line.
  std::string dump() const;

 private:
  std::vector<std::string> names_;
  std::vector<bool> nonneg_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<LpConstraint> constraints_;
  std::optional<LinearExpr> objective_;
  Sense sense_ = Sense::Minimize;
};

struct LpSolution {
  std::vector<Rational> values;
  const Rational& operator[](std::size_t v) const { return values[v]; }
};

enum class LpStatus { Optimal, Feasible, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  LpSolution solution;
  Rational objective;
  std::size_t pivots = 0;

  bool feasible() const { return status == LpStatus::Optimal || status == LpStatus::Feasible; }
};

/// Phase one of the two-phase simplex only.
LpResult solve_feasibility(const LinearProgram& lp);
/// Both phases; requires an objective.
LpResult solve_optimize(const LinearProgram& lp);

/// Exact re-check of every constraint and sign restriction.
bool check_solution(const LinearProgram& lp, const LpSolution& sol);
Rational evaluate(const LinearExpr& expr, const LpSolution& sol);

}  // namespace riskmdp
