#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <optional>
#include <set>
#include <vector>

#include "riskmdp/linalg.hpp"
#include "riskmdp/lp.hpp"
#include "riskmdp/model.hpp"

namespace oracle {

using riskmdp::Rational;

// Maximal end components by exhaustive enumeration of state subsets: a subset
// T is an end component when, using the actions of T that never leave T,
// every state keeps an action and the subgraph is strongly connected.
inline std::set<std::set<std::size_t>> brute_force_mecs(const riskmdp::Mdp& mdp) {
  const std::size_t n = mdp.num_states();
  std::vector<std::uint32_t> ecs;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    auto inside = [&](std::size_t s) { return (mask >> s) & 1u; };
    std::vector<std::vector<std::size_t>> adj(n);
    bool ok = true;
    for (std::size_t s = 0; s < n && ok; ++s) {
      if (!inside(s)) continue;
      bool any = false;
      for (std::size_t a : mdp.available(s)) {
        const auto& succ = mdp.action(a).successors;
        if (std::all_of(succ.begin(), succ.end(), [&](const auto& e) { return inside(e.first); })) {
          any = true;
          for (const auto& e : succ) adj[s].push_back(e.first);
        }
      }
      ok = any;
    }
    if (!ok) continue;
    for (std::size_t s = 0; s < n && ok; ++s) {
      if (!inside(s)) continue;
      std::vector<bool> seen(n, false);
      std::vector<std::size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adj[u]) {
          if (!seen[v]) {
            seen[v] = true;
            stack.push_back(v);
          }
        }
      }
      for (std::size_t t = 0; t < n; ++t) ok = ok && (!inside(t) || seen[t]);
    }
    if (ok) ecs.push_back(mask);
  }
  std::set<std::set<std::size_t>> out;
  for (std::uint32_t m : ecs) {
    bool maximal = std::none_of(ecs.begin(), ecs.end(), [&](std::uint32_t o) { return o != m && (o & m) == m; });
    if (!maximal) continue;
    std::set<std::size_t> states;
    for (std::size_t s = 0; s < n; ++s) {
      if ((m >> s) & 1u) states.insert(s);
    }
    out.insert(states);
  }
  return out;
}

struct VertexOptimum {
  bool feasible = false;
  Rational value;
};

// Optimum of a bounded LP with non-negative variables by enumerating every
// basic solution: choose n tight rows among constraints and sign bounds,
// solve the square system and keep the best feasible point.
inline VertexOptimum vertex_enumeration(const riskmdp::LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> rhs;
  for (const auto& c : lp.constraints()) {
    std::vector<Rational> row(n);
    for (const auto& [v, coef] : c.lhs) row[v] += coef;
    rows.push_back(row);
    rhs.push_back(c.rhs);
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<Rational> row(n);
    row[v] = Rational(1);
    rows.push_back(row);
    rhs.push_back(Rational(0));
  }
  auto feasible = [&](const std::vector<Rational>& x) {
    riskmdp::LpSolution sol{x};
    return riskmdp::check_solution(lp, sol);
  };
  VertexOptimum best;
  const bool maximize = lp.sense() == riskmdp::Sense::Maximize;
  std::vector<std::size_t> pick(n);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t from) {
    if (depth == n) {
      riskmdp::Matrix a, b;
      for (std::size_t k : pick) {
        a.push_back(rows[k]);
        b.push_back({rhs[k]});
      }
      try {
        auto x = riskmdp::solve_linear(a, b);
        std::vector<Rational> point(n);
        for (std::size_t v = 0; v < n; ++v) point[v] = x[v][0];
        if (!feasible(point)) return;
        Rational value = riskmdp::evaluate(*lp.objective(), riskmdp::LpSolution{point});
        if (!best.feasible || (maximize ? best.value < value : value < best.value)) best = {true, value};
      } catch (const std::domain_error&) {
      }
      return;
    }
    for (std::size_t k = from; k < rows.size(); ++k) {
      pick[depth] = k;
      rec(depth + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace oracle
