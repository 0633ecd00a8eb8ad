#include <doctest.h>

#include <cmath>

#include "riskmdp/gadgets.hpp"
#include "riskmdp/mc_solver.hpp"
#include "riskmdp/simulation.hpp"
#include "support/fixtures.hpp"

using namespace riskmdp;
using fx::R;

namespace {

MarkovChain chain(std::vector<Distribution> rows, std::vector<Rational> rewards, std::vector<bool> targets = {}) {
  std::vector<StateInfo> states;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    states.push_back({"c" + std::to_string(s), {rewards[s]}, !targets.empty() && targets[s]});
  }
  return MarkovChain(states, rows, dirac(0));
}

Query one_dim(Objective objective, std::optional<Rational> e, std::optional<CvarBound> c, std::optional<VarBound> v) {
  Query q;
  q.objective = objective;
  q.dims.push_back(DimConstraint{e, c, v});
  return q;
}

MarkovChain mix_chain() {
  auto mdp = fx::choice().mdp;
  return induced_chain(mdp, mix_strategies(fx::at_s0(mdp, R(1)), fx::at_s0(mdp, R(0)), R(3, 4)));
}

}  // namespace

TEST_CASE("reach probabilities") {
  auto at_target = chain({dirac(0)}, {R(3)}, {true});
  auto p = reach_probabilities(at_target);
  CHECK(p == std::map<std::size_t, Rational>{{0, R(1)}});

  auto mdp = fx::choice().mdp;
  auto under_b = induced_chain(mdp, fx::at_s0(mdp, R(0)));
  std::map<std::string, Rational> named;
  for (const auto& [s, pr] : reach_probabilities(under_b)) named[fx::model_state(under_b.state(s).name)] = pr;
  CHECK(named == std::map<std::string, Rational>{{"s2", R(9, 10)}, {"s3", R(1, 10)}});

  // Symmetric walk 0 <- 1 <-> 2 <-> 3 -> 4 started in the middle.
  std::vector<Distribution> rows{dirac(0), {{0, R(1, 2)}, {2, R(1, 2)}}, {{1, R(1, 2)}, {3, R(1, 2)}},
                                 {{2, R(1, 2)}, {4, R(1, 2)}}, dirac(4)};
  std::vector<StateInfo> states;
  for (int s = 0; s < 5; ++s) states.push_back({"w" + std::to_string(s), {R(s)}, s == 0 || s == 4});
  MarkovChain walk(states, rows, dirac(2));
  auto pw = reach_probabilities(walk);
  CHECK(pw[0] == R(1, 2));
  CHECK(pw[4] == R(1, 2));
}

TEST_CASE("reachability payoff law") {
  CHECK(payoff_law_reach(mix_chain())[0] == fx::d_lambda(R(3, 4)));
  CHECK(payoff_law_reach(chain({dirac(0)}, {R(-2)}, {true}))[0] == FiniteDistribution::point(R(-2)));
  auto mdp = fx::choice().mdp;
  CHECK(payoff_law_reach(induced_chain(mdp, fx::at_s0(mdp, R(0))))[0] == fx::d_b());
  // Mass that never reaches a target counts as 0.
  auto stuck = chain({{{1, R(1, 2)}, {2, R(1, 2)}}, dirac(1), dirac(2)}, {R(0), R(4), R(7)}, {false, true, false});
  FiniteDistribution expected{{R(0), R(1, 2)}, {R(4), R(1, 2)}};
  CHECK(payoff_law_reach(stuck)[0] == expected);
}

TEST_CASE("bscc mean payoff") {
  auto loop5 = chain({dirac(0)}, {R(5)});
  CHECK(bscc_mean_payoff(loop5).front().gain == std::vector<Rational>{R(5)});
  auto cycle = chain({dirac(1), dirac(0)}, {R(0), R(10)});
  CHECK(bscc_mean_payoff(cycle).front().gain == std::vector<Rational>{R(5)});
  auto lazy = chain({{{0, R(3, 4)}, {1, R(1, 4)}}, {{0, R(1, 2)}, {1, R(1, 2)}}}, {R(0), R(6)});
  auto g = bscc_mean_payoff(lazy);
  REQUIRE(g.size() == 1);
  CHECK(g.front().stationary == std::vector<Rational>{R(2, 3), R(1, 3)});
  CHECK(g.front().gain == std::vector<Rational>{R(2)});
}

TEST_CASE("mean payoff law") {
  auto loop = fx::loop().mdp;
  CHECK(payoff_law_mean(induced_chain(loop, fx::at_s0(loop, R(1))))[0] == FiniteDistribution::point(R(5)));
  for (auto w : {R(0), R(1, 2), R(99, 100)}) {
    CHECK(payoff_law_mean(induced_chain(loop, fx::at_s0(loop, w)))[0] == fx::d_b());
  }
  auto cycle = chain({dirac(1), dirac(0)}, {R(1), R(2)});
  CHECK(payoff_law_mean(cycle)[0] == FiniteDistribution::point(R(3, 2)));
}

TEST_CASE("decide_mc") {
  auto mc = mix_chain();
  auto q = fx::choice().query;
  auto v = decide_mc(mc, q);
  CHECK(v.status == Status::Sat);
  CHECK(satisfies(payoff_law_reach(mc), q));
  q.dims[0].e = R(7);
  CHECK(decide_mc(mc, q).status == Status::Unsat);
  CHECK_FALSE(violations(payoff_law_reach(mc), q).empty());
  Query empty;
  empty.dims.resize(1);
  CHECK(decide_mc(mc, empty).status == Status::Sat);
}

TEST_CASE("measures") {
  auto m = measures(fx::d_lambda(R(3, 4)), R(1, 20), R(1, 20));
  CHECK(m.expectation == R(6));
  CHECK(m.cvar == R(5, 2));
  CHECK(m.var == R(5));
  CHECK_FALSE(measures(fx::d_b(), std::nullopt, std::nullopt).cvar.has_value());
}

TEST_CASE("absorption by label") {
  auto mc = chain({{{1, R(1, 3)}, {2, R(2, 3)}}, dirac(1), dirac(2)}, {R(0), R(0), R(0)});
  auto p = absorption_by_label(mc, {std::nullopt, 0, 1}, 2);
  CHECK(p == std::vector<Rational>{R(1, 3), R(2, 3)});
}

TEST_CASE("property: reach law sums to one and decisions are monotone") {
  fx::Gen gen(31);
  for (int i = 0; i < 500; ++i) {
    RandomMdpConfig cfg;
    cfg.states = static_cast<std::size_t>(gen.range(2, 7));
    cfg.actions_per_state = 1;
    cfg.density = 0.4;
    cfg.target_fraction = 0.4;
    cfg.seed = static_cast<std::uint64_t>(i + 7);
    cfg.reward_range = {-5, 5};
    Mdp mdp = random_mdp(cfg);
    std::vector<std::size_t> only(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) only[s] = mdp.available(s).front();
    auto mc = induced_chain(mdp, deterministic_strategy(only));
    for (auto objective : {Objective::Reachability, Objective::MeanPayoff}) {
      auto law = payoff_law(mc, objective);
      Rational total;
      for (const auto& [v, w] : law[0].atoms()) total += w;
      CHECK(total == R(1));
      Query q = one_dim(objective, Rational(gen.range(-5, 5)), CvarBound{gen.level(10), Rational(gen.range(-5, 5))},
                        VarBound{gen.level(10), Rational(gen.range(-5, 5))});
      auto strict = decide_mc(mc, q).status;
      Query relaxed = q;
      relaxed.dims[0].e = *q.dims[0].e - R(1);
      relaxed.dims[0].cvar->c -= R(1);
      relaxed.dims[0].var->v -= R(1);
      if (strict == Status::Sat) CHECK(decide_mc(mc, relaxed).status == Status::Sat);
    }
  }
}

TEST_CASE("property: mean law agrees with simulation") {
  fx::Gen gen(41);
  for (int i = 0; i < 30; ++i) {
    RandomMdpConfig cfg;
    cfg.states = static_cast<std::size_t>(gen.range(2, 6));
    cfg.actions_per_state = 1;
    cfg.density = 0.5;
    cfg.seed = static_cast<std::uint64_t>(i + 300);
    Mdp mdp = random_mdp(cfg);
    std::vector<std::size_t> only(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) only[s] = mdp.available(s).front();
    auto strategy = deterministic_strategy(only);
    auto law = payoff_law_mean(induced_chain(mdp, strategy));
    SimConfig sim;
    sim.runs = 2000;
    sim.horizon = 4000;
    sim.burn_in = 500;
    sim.seed = static_cast<std::uint64_t>(i);
    auto samples = sample_payoffs(mdp, strategy, Objective::MeanPayoff, sim).samples[0];
    double mean = 0, sq = 0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    for (double x : samples) sq += (x - mean) * (x - mean);
    double se = std::sqrt(sq / static_cast<double>(samples.size() - 1) / static_cast<double>(samples.size()));
    // Finite horizon adds a small bias on top of the sampling error.
    CHECK(std::abs(mean - expectation(law[0]).to_double()) <= 4 * se + 0.05);
  }
}
