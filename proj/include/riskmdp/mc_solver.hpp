#pragma once

#include <map>
#include <optional>
#include <vector>

#include "riskmdp/model.hpp"
#include "riskmdp/risk.hpp"

namespace riskmdp {

/// One finite payoff distribution per reward dimension.
struct PayoffLaw {
  std::vector<FiniteDistribution> dims;

  std::size_t dimensions() const { return dims.size(); }
  const FiniteDistribution& operator[](std::size_t j) const { return dims[j]; }
};

/// Probability of first hitting each target from the initial distribution.
std::map<std::size_t, Rational> reach_probabilities(const MarkovChain& mc);

/// Law of the reward of the first visited target; mass that never reaches a
/// target is reported at value 0.
PayoffLaw payoff_law_reach(const MarkovChain& mc);

struct BsccGain {
  std::vector<std::size_t> states;
  std::vector<Rational> stationary;
  std::vector<Rational> gain;
};

std::vector<BsccGain> bscc_mean_payoff(const MarkovChain& mc);
PayoffLaw payoff_law_mean(const MarkovChain& mc);
PayoffLaw payoff_law(const MarkovChain& mc, Objective objective);

/// Probability of eventually being absorbed in each labelled group.  States
/// with a label are treated as sinks; mass ending in unlabelled bottom
/// components is not counted.
std::vector<Rational> absorption_by_label(const MarkovChain& mc,
                                          const std::vector<std::optional<std::size_t>>& label,
                                          std::size_t label_count);

struct Measures {
  Rational expectation;
  std::optional<Rational> var;  // nullopt when no VaR level was requested
  std::optional<Rational> cvar;
};

Measures measures(const FiniteDistribution& d, const std::optional<Rational>& p, const std::optional<Rational>& q);

/// True iff every constraint of the query holds for the law.
bool satisfies(const PayoffLaw& law, const Query& query);
/// Human-readable list of violated constraints (empty if satisfied).
std::vector<std::string> violations(const PayoffLaw& law, const Query& query);

Verdict decide_mc(const MarkovChain& mc, const Query& query);

}  // namespace riskmdp
