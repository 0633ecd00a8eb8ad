#pragma once

#include <optional>
#include <vector>

#include "riskmdp/graph.hpp"
#include "riskmdp/mc_solver.hpp"
#include "riskmdp/model.hpp"

namespace riskmdp {

/// Flow values read off an LP solution.
struct FlowSolution {
  std::vector<Rational> y;     // per action: expected uses before switching
  std::vector<Rational> x;     // per state: mass that switches (settles) there
  std::vector<Rational> freq;  // per action: long-run frequency (mean-payoff LPs only)
};

/// Expected visits to each state under the flow: [s = s0] + sum_a y_a * delta(a, s).
std::vector<Rational> inflow(const Mdp& mdp, const FlowSolution& flow);

/// Memoryless strategy playing a with probability y_a / sum of y over Av(s).
StrategySpec strategy_from_reach_flow(const Mdp& mdp, const FlowSolution& flow);

/// Memory {search, remain}.  In search the transient flow is followed and on
/// arrival at s the strategy switches to remain with probability x_s / inflow(s);
/// in remain the inner strategy of the current MEC is played.
StrategySpec two_memory_strategy(const Mdp& mdp, const FlowSolution& flow, const MecDecomposition& mecs,
                                 const std::vector<StrategySpec>& inner);

/// Completes a flow given on the actions that are not internal to a MEC (for
/// instance a flow on the MEC quotient) with internal flow that routes the
/// entering mass to the leaving actions and to `stay[i]` mass switching at
/// the representative (lexicographically least state) of MEC i.
FlowSolution lift_flow(const Mdp& mdp, const MecDecomposition& mecs, const std::vector<Rational>& y,
                       const std::vector<Rational>& stay);

/// Memoryless strategy inside `mec` with action shares proportional to `freq`
/// (states without frequency are steered into its support).  Returns nullopt
/// when the induced chain has bottom components with differing gains.
/// Throws std::invalid_argument if `freq` is not a balanced frequency vector.
std::optional<StrategySpec> mec_constant_strategy(const Mdp& mdp, const Mec& mec, const std::vector<Rational>& freq);

/// Memoryless strategy that never leaves `mec` (first internal action per state).
StrategySpec stay_strategy(const Mdp& mdp, const Mec& mec);

/// Long-run action frequencies of the uniform strategy over the MEC's actions.
std::vector<Rational> uniform_frequencies(const Mdp& mdp, const Mec& mec);

/// Lexicographically least action name available at s.
std::size_t least_action(const Mdp& mdp, std::size_t s);

PayoffLaw evaluate(const Mdp& mdp, const StrategySpec& strategy, Objective objective);

/// Value of the single constraint of `query` under `law` (E, CVaR_p or VaR_q).
Rational constraint_value(const PayoffLaw& law, const Query& query);

/// Deterministic memoryless strategy whose value for the query's single
/// constraint is at least that of the memoryless input strategy.
StrategySpec determinize_single_constraint(const Mdp& mdp, const StrategySpec& strategy, const Query& query);

}  // namespace riskmdp
