#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskmdp/rational.hpp"

namespace riskmdp {

/// Finite discrete distribution: value -> positive probability, summing to 1.
class FiniteDistribution {
 public:
  FiniteDistribution() = default;
  /// Merges equal values and drops zero-probability atoms.  Throws
  /// std::invalid_argument on negative mass or if the total differs from 1.
  explicit FiniteDistribution(const std::vector<std::pair<Rational, Rational>>& atoms);
  FiniteDistribution(std::initializer_list<std::pair<Rational, Rational>> atoms)
      : FiniteDistribution(std::vector<std::pair<Rational, Rational>>(atoms)) {}

  static FiniteDistribution point(const Rational& value);

  const std::map<Rational, Rational>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const Rational& min() const { return atoms_.begin()->first; }
  const Rational& max() const { return atoms_.rbegin()->first; }
  Rational probability(const Rational& value) const;

  std::string str() const;
  friend bool operator==(const FiniteDistribution&, const FiniteDistribution&) = default;

 private:
  std::map<Rational, Rational> atoms_;
};

/// F(r) = P[X <= r].
Rational cdf(const FiniteDistribution& d, const Rational& r);
/// P[X < r].
Rational cdf_below(const FiniteDistribution& d, const Rational& r);

/// sup{r : F(r) <= p}.  Returns std::nullopt for +infinity (only at p = 1).
std::optional<Rational> var(const FiniteDistribution& d, const Rational& p);
Rational cvar(const FiniteDistribution& d, const Rational& p);
Rational expectation(const FiniteDistribution& d);

/// lambda * d1 + (1 - lambda) * d2.
FiniteDistribution mix(const FiniteDistribution& d1, const FiniteDistribution& d2, const Rational& lambda);

/// True iff d1 stochastically dominates d2, i.e. cdf(d1, r) <= cdf(d2, r) for all r.
bool dominates(const FiniteDistribution& d1, const FiniteDistribution& d2);

struct WeightedPart {
  Rational weight;
  FiniteDistribution dist;
};

/// Decomposition of CVaR over a partition of the outcome space into parts
/// W_i.  `selected` lists parts that carry lower-tail mass; `levels[k]` is
/// the conditional level used for part `selected[k]`.
struct PartitionDecomposition {
  std::vector<std::size_t> selected;
  std::vector<Rational> levels;
};

FiniteDistribution mixture(const std::vector<WeightedPart>& parts);

/// Throws std::invalid_argument if weights are not positive or do not sum to 1.
PartitionDecomposition partition_decompose(const std::vector<WeightedPart>& parts, const Rational& p);

/// Right-hand side of the decomposition identity:
/// (1/p) * sum_k w_k p_k CVaR_{p_k}(X | W_k) for p > 0, and the selected
/// part's CVaR_0 for p = 0.  Equals cvar(mixture(parts), p).
Rational partition_value(const std::vector<WeightedPart>& parts, const PartitionDecomposition& dec,
                         const Rational& p);

}  // namespace riskmdp
