#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "riskmdp/model.hpp"

namespace riskmdp {

using Adjacency = std::vector<std::vector<std::size_t>>;

/// Tarjan's algorithm.  Components come out in reverse topological order:
/// every edge leaving a component points to one listed earlier.
std::vector<std::vector<std::size_t>> strongly_connected(const Adjacency& graph);

std::vector<std::vector<std::size_t>> sccs(const MarkovChain& mc);
std::vector<std::vector<std::size_t>> bsccs(const MarkovChain& mc);

struct Mec {
  std::vector<std::size_t> states;
  std::vector<std::size_t> actions;
};

struct MecDecomposition {
  std::vector<Mec> mecs;
  std::vector<std::optional<std::size_t>> state_to_mec;
  /// For every action, the MEC it stays inside (if any).
  std::vector<std::optional<std::size_t>> action_to_mec;
};

MecDecomposition mec_decomposition(const Mdp& mdp);

struct QuotientMap {
  Mdp quotient;
  /// Original state -> quotient state.
  std::vector<std::size_t> lift;
  /// Quotient action -> original action; empty for the synthetic self-loop
  /// added to MECs that have no leaving action.
  std::vector<std::optional<std::size_t>> action_origin;
  /// Quotient state -> MEC of the original model it stands for.
  std::vector<std::optional<std::size_t>> state_mec;
  MecDecomposition mecs;
};

/// Collapses every MEC into its lexicographically least member.  Actions that
/// stay inside a MEC disappear; all others are kept with lifted successors.
QuotientMap mec_quotient(const Mdp& mdp);

/// MECs that cannot reach a target become absorbing zero-reward targets.
Mdp cleanup(const Mdp& mdp);

/// States from which some target is reachable (over all actions).
std::vector<bool> can_reach_targets(const Mdp& mdp);

enum class Attraction { A1, A2, Both, Neither };
std::string to_string(Attraction a);

Attraction check_attraction(const Mdp& mdp);

}  // namespace riskmdp
