#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskmdp/model.hpp"

namespace riskmdp {

struct SimConfig {
  std::size_t runs = 10000;
  /// Step bound; reachability runs still unabsorbed at the horizon count as 0.
  std::size_t horizon = 10000;
  std::uint64_t seed = 1;
  /// Mean-payoff runs average rewards over steps burn_in..horizon.
  std::size_t burn_in = 1000;
  std::size_t threads = 1;
};

/// samples[j][i] is the payoff of run i in dimension j.
struct SampleSet {
  std::vector<std::vector<double>> samples;
  std::size_t unabsorbed = 0;  // reachability runs cut at the horizon
};

/// Runs are generated in fixed blocks of 1024, block k seeded from (seed, k)
/// with mt19937_64, so results do not depend on the number of threads.
SampleSet sample_payoffs(const Mdp& mdp, const StrategySpec& strategy, Objective objective, const SimConfig& cfg);

struct EmpiricalMeasures {
  double expectation = 0;
  std::optional<double> var;
  std::optional<double> cvar;
};

/// Measures of the empirical distribution (each sample has mass 1/n).
/// Throws std::invalid_argument on empty input.
EmpiricalMeasures empirical_measures(const std::vector<double>& samples, const std::optional<Rational>& p,
                                     const std::optional<Rational>& q);

std::string samples_csv(const SampleSet& set);

}  // namespace riskmdp
