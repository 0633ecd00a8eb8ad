#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "riskmdp/gadgets.hpp"
#include "riskmdp/model.hpp"
#include "riskmdp/risk.hpp"

namespace fx {

using riskmdp::Rational;

inline Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

inline riskmdp::Example choice() { return riskmdp::example("choice"); }
inline riskmdp::Example loop() { return riskmdp::example("loop"); }

// Model state behind an induced-chain state name "state|memory|action".
inline std::string model_state(const std::string& chain_name) { return chain_name.substr(0, chain_name.find('|')); }

inline std::size_t action_of(const riskmdp::Mdp& mdp, const std::string& name) { return *mdp.find_action(name); }
inline std::size_t state_of(const riskmdp::Mdp& mdp, const std::string& name) { return *mdp.find_state(name); }

// Memoryless strategy: at s0 play a with probability `weight_a`, b otherwise;
// every other state plays its only action.
inline riskmdp::StrategySpec at_s0(const riskmdp::Mdp& mdp, const Rational& weight_a) {
  std::vector<riskmdp::Distribution> moves(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) moves[s] = riskmdp::dirac(mdp.available(s).front());
  riskmdp::Distribution d{{action_of(mdp, "a"), weight_a}, {action_of(mdp, "b"), Rational(1) - weight_a}};
  moves[state_of(mdp, "s0")] = riskmdp::canonical(std::move(d));
  return riskmdp::memoryless_strategy(std::move(moves));
}

inline riskmdp::FiniteDistribution d_a() { return riskmdp::FiniteDistribution::point(Rational(5)); }
inline riskmdp::FiniteDistribution d_b() { return {{Rational(0), R(1, 10)}, {Rational(10), R(9, 10)}}; }
// lambda * D_a + (1 - lambda) * D_b.
inline riskmdp::FiniteDistribution d_lambda(const Rational& lambda) { return riskmdp::mix(d_a(), d_b(), lambda); }

// Small random objects for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  Rational fraction(std::int64_t den = 20) { return Rational(range(0, den), den); }
  Rational level(std::int64_t den = 20) { return Rational(range(1, den - 1), den); }

  // Memoryless strategy with random positive weights on every available action.
  riskmdp::StrategySpec memoryless(const riskmdp::Mdp& mdp, std::int64_t max_weight = 4) {
    std::vector<riskmdp::Distribution> moves(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      riskmdp::Distribution d;
      for (std::size_t a : mdp.available(s)) d.emplace_back(a, Rational(range(1, max_weight)));
      Rational total = riskmdp::total_mass(d);
      for (auto& e : d) e.second /= total;
      moves[s] = riskmdp::canonical(std::move(d));
    }
    return riskmdp::memoryless_strategy(std::move(moves));
  }

  riskmdp::FiniteDistribution distribution(std::size_t max_atoms = 5, std::int64_t lo = -10, std::int64_t hi = 10) {
    std::size_t k = static_cast<std::size_t>(range(1, static_cast<std::int64_t>(max_atoms)));
    std::vector<std::int64_t> w;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      w.push_back(range(1, 9));
      total += w.back();
    }
    std::vector<std::pair<Rational, Rational>> atoms;
    for (std::size_t i = 0; i < k; ++i) atoms.emplace_back(Rational(range(lo, hi)), Rational(w[i], total));
    return riskmdp::FiniteDistribution(atoms);
  }
};

}  // namespace fx
