#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "riskmdp/rational.hpp"

namespace riskmdp {

/// Sparse probability distribution over indices (states, actions or memory
/// elements).  Kept sorted by index with strictly positive entries.
using Distribution = std::vector<std::pair<std::size_t, Rational>>;

/// Sorts by index, merges duplicate indices and drops zero entries.
Distribution canonical(Distribution dist);
Rational total_mass(const Distribution& dist);
Distribution dirac(std::size_t index);

struct StateInfo {
  std::string name;
  std::vector<Rational> rewards;
  bool target = false;
};

struct ActionInfo {
  std::string name;
  std::size_t state = 0;
  Distribution successors;
};

struct ValidationReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
  std::string str() const;
};

/// Finite MDP with d-dimensional state rewards and an optional target set.
/// Every action belongs to exactly one state.  The object is immutable once
/// built; `available(s)` is derived in the constructor.
class Mdp {
 public:
  Mdp() = default;
  Mdp(std::vector<StateInfo> states, std::vector<ActionInfo> actions, std::size_t initial);

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t dimensions() const { return states_.empty() ? 0 : states_.front().rewards.size(); }

  const StateInfo& state(std::size_t s) const { return states_[s]; }
  const ActionInfo& action(std::size_t a) const { return actions_[a]; }
  const std::vector<StateInfo>& states() const { return states_; }
  const std::vector<ActionInfo>& actions() const { return actions_; }
  const std::vector<std::size_t>& available(std::size_t s) const { return available_[s]; }

  std::size_t initial() const { return initial_; }
  bool is_target(std::size_t s) const { return states_[s].target; }
  bool has_targets() const;
  const Rational& reward(std::size_t s, std::size_t j) const { return states_[s].rewards[j]; }

  std::optional<std::size_t> find_state(const std::string& name) const;
  std::optional<std::size_t> find_action(const std::string& name) const;

 private:
  std::vector<StateInfo> states_;
  std::vector<ActionInfo> actions_;
  std::vector<std::vector<std::size_t>> available_;
  std::size_t initial_ = 0;
};

/// Redirects every action enabled at a target state to a self-loop.
Mdp make_targets_absorbing(const Mdp& mdp);

class MarkovChain {
 public:
  MarkovChain() = default;
  MarkovChain(std::vector<StateInfo> states, std::vector<Distribution> rows, Distribution initial);

  std::size_t num_states() const { return states_.size(); }
  std::size_t dimensions() const { return states_.empty() ? 0 : states_.front().rewards.size(); }
  const StateInfo& state(std::size_t s) const { return states_[s]; }
  const std::vector<StateInfo>& states() const { return states_; }
  const Distribution& row(std::size_t s) const { return rows_[s]; }
  const Distribution& initial() const { return initial_; }
  bool is_target(std::size_t s) const { return states_[s].target; }
  const Rational& reward(std::size_t s, std::size_t j) const { return states_[s].rewards[j]; }

 private:
  std::vector<StateInfo> states_;
  std::vector<Distribution> rows_;
  Distribution initial_;
};

ValidationReport validate(const Mdp& mdp);
ValidationReport validate(const MarkovChain& mc);

enum class Objective { Reachability, MeanPayoff };

struct CvarBound {
  Rational p;
  Rational c;
};

struct VarBound {
  Rational q;
  Rational v;
};

/// Lower-bound constraints on one reward dimension; absent members are trivially met.
struct DimConstraint {
  std::optional<Rational> e;
  std::optional<CvarBound> cvar;
  std::optional<VarBound> var;

  bool empty() const { return !e && !cvar && !var; }
  std::size_t count() const { return (e ? 1 : 0) + (cvar ? 1 : 0) + (var ? 1 : 0); }
};

struct Query {
  Objective objective = Objective::Reachability;
  std::vector<DimConstraint> dims;

  std::size_t dimensions() const { return dims.size(); }
  std::size_t constraint_count() const;
  bool has_var() const;
  bool has_cvar() const;
};

/// Throws std::invalid_argument if levels lie outside (0,1) or the
/// dimension count differs from the model's.
void validate_query(const Query& query, std::size_t model_dimensions);

/// Key of the memory-update kernel: (action taken, successor state, memory).
using UpdateKey = std::tuple<std::size_t, std::size_t, std::size_t>;

/// Finite-memory strategy with stochastic update.  next_move is indexed by
/// `state * memory.size() + m`.  Update keys without an entry keep the
/// current memory element.
struct StrategySpec {
  std::size_t num_states = 0;
  std::vector<std::string> memory;
  Distribution initial_memory;
  std::vector<Distribution> next_move;
  std::map<UpdateKey, Distribution> memory_update;

  std::size_t memory_size() const { return memory.size(); }
  const Distribution& move(std::size_t s, std::size_t m) const { return next_move[s * memory.size() + m]; }
  Distribution& move(std::size_t s, std::size_t m) { return next_move[s * memory.size() + m]; }
  Distribution update(std::size_t action, std::size_t succ, std::size_t m) const;

  bool is_memoryless() const { return memory.size() == 1; }
  bool is_deterministic() const;
};

/// Memoryless strategy from one action distribution per state.
StrategySpec memoryless_strategy(std::vector<Distribution> per_state);
/// Memoryless deterministic strategy from one action per state.
StrategySpec deterministic_strategy(const std::vector<std::size_t>& choice);

ValidationReport validate(const Mdp& mdp, const StrategySpec& strategy);

/// Tagged disjoint union of memories; s1 is picked with probability lambda.
/// Throws std::invalid_argument on mismatched state counts or lambda outside [0,1].
StrategySpec mix_strategies(const StrategySpec& s1, const StrategySpec& s2, const Rational& lambda);

struct InducedChain {
  MarkovChain chain;
  /// (state, memory, action) behind each chain state.
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> origin;
};

/// Product of the MDP with the strategy restricted to reachable triples.
InducedChain build_induced_chain(const Mdp& mdp, const StrategySpec& strategy);
MarkovChain induced_chain(const Mdp& mdp, const StrategySpec& strategy);

enum class Status { Sat, Unsat, Unknown };
std::string to_string(Status status);

struct Certificate {
  std::string procedure;
  std::vector<std::optional<Rational>> t_c;
  std::vector<std::optional<Rational>> t_v;
  /// Per dimension, per MEC: "<=", "=", ">" (mean-payoff classification only).
  std::vector<std::vector<std::string>> classification;
  std::vector<std::pair<std::string, Rational>> assignment;
};

struct Verdict {
  Status status = Status::Unknown;
  std::optional<StrategySpec> witness;
  std::optional<Certificate> certificate;
  std::string note;
};

}  // namespace riskmdp
