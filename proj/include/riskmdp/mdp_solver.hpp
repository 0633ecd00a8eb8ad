#pragma once

#include <optional>
#include <vector>

#include "riskmdp/graph.hpp"
#include "riskmdp/lp.hpp"
#include "riskmdp/model.hpp"
#include "riskmdp/synthesis.hpp"

namespace riskmdp {

struct SolverOptions {
  /// Worker threads for the guess enumeration.
  std::size_t threads = 1;
  /// Points inserted between consecutive MEC gain extremes in the
  /// mean-payoff guess grid.
  std::size_t grid_subdivisions = 16;
};

/// Per-dimension guesses of the VaR at the CVaR level (t_c) and at the VaR
/// level (t_v).  A missing guess drops the corresponding constraint block.
struct VarGuess {
  std::vector<std::optional<Rational>> t_c;
  std::vector<std::optional<Rational>> t_v;
};

/// Reachability LP over a model without non-target end components (targets
/// absorbing).  y[a] is the expected use of action a, x[s] the probability of
/// ending in s; for every guessed block a split variable per target below or
/// at the guess selects the lower tail.  Single-dimension form.
LinearProgram build_reach_lp(const Mdp& mdp, const Query& query, const std::optional<Rational>& t_c,
                             const std::optional<Rational>& t_v);
LinearProgram build_reach_lp_multi(const Mdp& mdp, const Query& query, const VarGuess& guess);

/// Largest (smallest) long-run average of dimension j achievable inside the MEC.
Rational mec_gain(const Mdp& mdp, const Mec& mec, std::size_t j);
Rational mec_min_gain(const Mdp& mdp, const Mec& mec, std::size_t j);

struct GainOptimum {
  Rational value;
  std::vector<Rational> freq;  // per action, nonzero only inside the MEC
};

/// Optimal long-run frequencies for weights . r inside the MEC.
GainOptimum mec_gain_optimum(const Mdp& mdp, const Mec& mec, const std::vector<Rational>& weights, Sense sense);

enum class MecClass { Below, At, Above };
std::string to_string(MecClass c);

/// Per dimension (empty for dimensions without a CVaR constraint), per MEC.
struct MecClassification {
  std::vector<std::vector<MecClass>> per_dim;
};

/// Mean-payoff LP with transient flow y, switch mass per MEC state, and
/// recurrent frequencies per MEC action; CVaR is encoded through the guess
/// and the MEC classification.
LinearProgram build_mean_lp_multi(const Mdp& mdp, const MecDecomposition& mecs, const Query& query,
                                  const VarGuess& guess, const MecClassification& cls);

Verdict decide_reach_single(const Mdp& mdp, const Query& query, const SolverOptions& options = {});
Verdict decide_reach_multi(const Mdp& mdp, const Query& query, const SolverOptions& options = {});
Verdict decide_mean_single(const Mdp& mdp, const Query& query, const SolverOptions& options = {});
Verdict decide_mean_multi(const Mdp& mdp, const Query& query, const SolverOptions& options = {});

/// Dispatches on the objective and the number of constrained dimensions.
/// Throws std::invalid_argument for unsupported queries (VaR with mean payoff
/// in several dimensions) and malformed input.
Verdict decide(const Mdp& mdp, const Query& query, const SolverOptions& options = {});

/// Model where targets keep their reward, all other states get 0, and
/// targets are absorbing: its mean payoff equals the reachability payoff.
Mdp reach_as_mean_payoff(const Mdp& mdp);

}  // namespace riskmdp
