#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskmdp/model.hpp"

namespace riskmdp {

struct Example {
  Mdp mdp;
  Query query;
};

/// Named example models: "choice", "loop", "slow" (with parameter eps),
/// "negative".  Throws std::invalid_argument for unknown names.
Example example(const std::string& name, const Rational& eps = Rational(1, 8));

/// 3-CNF; literals are DIMACS-style: +k is x_k, -k its negation, k >= 1.
struct Cnf3 {
  std::size_t variables = 0;
  std::vector<std::array<int, 3>> clauses;
};

/// Parses "p cnf V C" followed by clauses terminated by 0.  Clauses with
/// fewer than three literals are padded by repeating the last one.
Cnf3 parse_dimacs(const std::string& text);
std::string to_dimacs(const Cnf3& cnf);

/// Brute-force satisfiability (variables <= 20).
bool brute_force_sat(const Cnf3& cnf);

/// Reduction of 3-SAT to a multi-dimensional weighted reachability query
/// (dimensions 0..M-1 for variables, M..M+N-1 for clauses).
/// Throws std::invalid_argument on literals of undeclared variables.
Example sat_reduction(const Cnf3& cnf);

struct RandomMdpConfig {
  std::size_t states = 10;
  std::size_t actions_per_state = 2;
  /// Chance that a given state is a successor of a given action.
  double density = 0.3;
  std::pair<std::int64_t, std::int64_t> reward_range{0, 10};
  std::size_t dimensions = 1;
  std::uint64_t seed = 1;
  /// Fraction of states turned into absorbing targets.
  double target_fraction = 0.0;
  /// When positive, states are grouped into blocks of this size and actions
  /// only move inside their block or forward, which keeps MECs small.
  std::size_t block_size = 0;
};

Mdp random_mdp(const RandomMdpConfig& cfg);
Mdp random_mdp(std::size_t states, std::size_t actions_per_state, double density,
               std::pair<std::int64_t, std::int64_t> reward_range, std::size_t d, std::uint64_t seed);

}  // namespace riskmdp
