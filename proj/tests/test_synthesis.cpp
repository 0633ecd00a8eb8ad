#include <doctest.h>

#include <functional>

#include "riskmdp/gadgets.hpp"
#include "riskmdp/graph.hpp"
#include "riskmdp/mc_solver.hpp"
#include "riskmdp/mdp_solver.hpp"
#include "riskmdp/synthesis.hpp"
#include "support/fixtures.hpp"

using namespace riskmdp;
using fx::R;

namespace {

FlowSolution empty_flow(const Mdp& mdp) {
  FlowSolution f;
  f.y.assign(mdp.num_actions(), Rational());
  f.x.assign(mdp.num_states(), Rational());
  return f;
}

FiniteDistribution law_mix_3_4() { return {{R(0), R(1, 40)}, {R(5), R(3, 4)}, {R(10), R(9, 40)}}; }

// m (3) and n (7) connected both ways, each with a self-loop.
Mdp two_room() {
  std::vector<StateInfo> s{{"m", {R(3)}, false}, {"n", {R(7)}, false}};
  std::vector<ActionInfo> a{{"to3", 0, {{0, R(1)}}}, {"go", 0, {{1, R(1)}}}, {"to7", 1, {{1, R(1)}}},
                            {"back", 1, {{0, R(1)}}}};
  return Mdp(s, a, 0);
}

std::vector<Rational> freq_of(const Mdp& mdp, std::initializer_list<std::pair<const char*, Rational>> items) {
  std::vector<Rational> f(mdp.num_actions());
  for (const auto& [name, v] : items) f[fx::action_of(mdp, name)] = v;
  return f;
}

// Switch masses of the 3/4-remain flow on the loop family with leaving rate eps.
FlowSolution loop_flow(const Mdp& mdp, const Rational& eps) {
  auto f = empty_flow(mdp);
  f.y[fx::action_of(mdp, "b")] = R(1, 4) / eps;
  f.x[fx::state_of(mdp, "s0")] = R(3, 4);
  f.x[fx::state_of(mdp, "s2")] = R(9, 40);
  f.x[fx::state_of(mdp, "s3")] = R(1, 40);
  return f;
}

std::vector<StrategySpec> stay_inners(const Mdp& mdp, const MecDecomposition& mecs) {
  std::vector<StrategySpec> inner;
  for (const auto& m : mecs.mecs) inner.push_back(stay_strategy(mdp, m));
  return inner;
}

Query single(std::optional<Rational> e, std::optional<CvarBound> c, std::optional<VarBound> v,
             Objective objective = Objective::Reachability) {
  Query q;
  q.objective = objective;
  q.dims.push_back(DimConstraint{e, c, v});
  return q;
}

}  // namespace

TEST_CASE("strategy from a reachability flow") {
  auto mdp = fx::choice().mdp;
  auto f = empty_flow(mdp);
  f.y[fx::action_of(mdp, "a")] = R(3, 4);
  f.y[fx::action_of(mdp, "b")] = R(1, 4);
  f.x[fx::state_of(mdp, "s1")] = R(3, 4);
  f.x[fx::state_of(mdp, "s2")] = R(9, 40);
  f.x[fx::state_of(mdp, "s3")] = R(1, 40);
  auto st = strategy_from_reach_flow(mdp, f);
  CHECK(st.move(0, 0) == Distribution{{fx::action_of(mdp, "a"), R(3, 4)}, {fx::action_of(mdp, "b"), R(1, 4)}});
  CHECK(evaluate(mdp, st, Objective::Reachability)[0] == law_mix_3_4());
  CHECK(inflow(mdp, f)[0] == R(1));
  CHECK(inflow(mdp, f)[fx::state_of(mdp, "s2")] == R(9, 40));

  auto dirac_flow = empty_flow(mdp);
  dirac_flow.y[fx::action_of(mdp, "b")] = R(1);
  CHECK(strategy_from_reach_flow(mdp, dirac_flow).is_deterministic());

  // No flow anywhere: every state takes its least action by name.
  auto none = strategy_from_reach_flow(mdp, empty_flow(mdp));
  CHECK(none.move(0, 0) == dirac(fx::action_of(mdp, "a")));
  CHECK(least_action(mdp, 0) == fx::action_of(mdp, "a"));
}

TEST_CASE("two-memory strategy on the loop model") {
  auto mdp = fx::loop().mdp;
  auto mecs = mec_decomposition(mdp);
  auto st = two_memory_strategy(mdp, loop_flow(mdp, R(1)), mecs, stay_inners(mdp, mecs));
  CHECK(validate(mdp, st).ok());
  CHECK(st.memory == std::vector<std::string>{"search", "remain"});
  CHECK(st.initial_memory == Distribution{{0, R(1, 4)}, {1, R(3, 4)}});
  CHECK(st.move(0, 0) == dirac(fx::action_of(mdp, "b")));
  CHECK(st.move(0, 1) == dirac(fx::action_of(mdp, "a")));
  CHECK(evaluate(mdp, st, Objective::MeanPayoff)[0] == law_mix_3_4());

  auto all_in = empty_flow(mdp);
  all_in.x[0] = R(1);
  auto stay = two_memory_strategy(mdp, all_in, mecs, stay_inners(mdp, mecs));
  CHECK(evaluate(mdp, stay, Objective::MeanPayoff)[0] == FiniteDistribution::point(R(5)));

  auto too_much = loop_flow(mdp, R(1));
  too_much.x[fx::state_of(mdp, "s2")] = R(1);
  CHECK_THROWS_AS(two_memory_strategy(mdp, too_much, mecs, stay_inners(mdp, mecs)), std::invalid_argument);
}

TEST_CASE("two-memory strategy on the slow family switches with probability about 3 eps") {
  for (auto eps : {R(1, 8), R(1, 20), R(1, 1000)}) {
    auto mdp = example("slow", eps).mdp;
    auto mecs = mec_decomposition(mdp);
    auto st = two_memory_strategy(mdp, loop_flow(mdp, eps), mecs, stay_inners(mdp, mecs));
    const Rational expected = R(3) * eps / (R(1) + R(3) * eps);
    CHECK(st.initial_memory == Distribution{{0, R(1) - expected}, {1, expected}});
    auto key = UpdateKey{fx::action_of(mdp, "b"), 0, 0};
    REQUIRE(st.memory_update.count(key));
    CHECK(st.memory_update.at(key) == Distribution{{0, R(1) - expected}, {1, expected}});
    CHECK(((expected / (R(3) * eps)) - R(1)).abs() <= R(3) * eps);
    CHECK(evaluate(mdp, st, Objective::MeanPayoff)[0] == law_mix_3_4());
  }
}

TEST_CASE("lifting a quotient flow") {
  auto mdp = two_room();
  auto mecs = mec_decomposition(mdp);
  REQUIRE(mecs.mecs.size() == 1);
  auto lifted = lift_flow(mdp, mecs, std::vector<Rational>(mdp.num_actions()), {R(1)});
  CHECK(lifted.x[0] == R(1));
  CHECK(lifted.x[1] == R(0));
}

TEST_CASE("MEC-constant strategies") {
  Mdp five({{"f", {R(5)}, false}}, {{"stay", 0, {{0, R(1)}}}}, 0);
  auto m5 = mec_decomposition(five).mecs.front();
  auto d5 = mec_constant_strategy(five, m5, {R(1)});
  REQUIRE(d5.has_value());
  CHECK(d5->is_deterministic());

  Mdp twin({{"t", {R(4)}, false}}, {{"l1", 0, {{0, R(1)}}}, {"l2", 0, {{0, R(1)}}}}, 0);
  auto mt = mec_decomposition(twin).mecs.front();
  auto half = mec_constant_strategy(twin, mt, {R(1, 2), R(1, 2)});
  REQUIRE(half.has_value());
  CHECK(half->move(0, 0) == Distribution{{0, R(1, 2)}, {1, R(1, 2)}});
  CHECK(evaluate(twin, *half, Objective::MeanPayoff)[0] == FiniteDistribution::point(R(4)));

  auto room = two_room();
  auto mr = mec_decomposition(room).mecs.front();
  auto spread = mec_constant_strategy(room, mr, freq_of(room, {{"to3", R(1, 4)}, {"go", R(1, 4)}, {"to7", R(1, 4)},
                                                               {"back", R(1, 4)}}));
  REQUIRE(spread.has_value());
  CHECK(evaluate(room, *spread, Objective::MeanPayoff)[0] == FiniteDistribution::point(R(5)));

  auto best = mec_constant_strategy(room, mr, freq_of(room, {{"to7", R(1)}}));
  REQUIRE(best.has_value());
  CHECK(best->is_deterministic());
  CHECK(evaluate(room, *best, Objective::MeanPayoff)[0] == FiniteDistribution::point(R(7)));
  CHECK(mec_gain(room, mr, 0) == R(7));

  // Two closed loops with different gains are not MEC-constant.
  CHECK_FALSE(mec_constant_strategy(room, mr, freq_of(room, {{"to3", R(1, 2)}, {"to7", R(1, 2)}})).has_value());
  CHECK_THROWS_AS(mec_constant_strategy(room, mr, freq_of(room, {{"go", R(1)}})), std::invalid_argument);

  auto uniform = uniform_frequencies(room, mr);
  Rational total;
  for (const auto& f : uniform) total += f;
  CHECK(total == R(1));
  CHECK(mec_constant_strategy(room, mr, uniform).has_value());
}

TEST_CASE("exact evaluation") {
  auto choice = fx::choice().mdp;
  auto law = evaluate(choice, mix_strategies(fx::at_s0(choice, R(1)), fx::at_s0(choice, R(0)), R(3, 4)),
                      Objective::Reachability);
  CHECK(law[0] == law_mix_3_4());
  CHECK(expectation(law[0]) == R(6));
  CHECK(var(law[0], R(1, 20)) == R(5));
  CHECK(cvar(law[0], R(1, 20)) == R(5, 2));

  auto room = two_room();
  CHECK(evaluate(room, deterministic_strategy({fx::action_of(room, "go"), fx::action_of(room, "back")}),
                 Objective::MeanPayoff)[0] == FiniteDistribution::point(R(5)));
}

TEST_CASE("determinisation of a single constraint") {
  auto mdp = fx::choice().mdp;
  auto half = fx::at_s0(mdp, R(1, 2));
  auto cq = single(std::nullopt, CvarBound{R(1, 5), R(0)}, std::nullopt);
  CHECK(constraint_value(evaluate(mdp, half, Objective::Reachability), cq) == R(15, 4));
  auto det = determinize_single_constraint(mdp, half, cq);
  CHECK(det.is_deterministic());
  CHECK(constraint_value(evaluate(mdp, det, Objective::Reachability), cq) == R(5));

  auto sigma_a = fx::at_s0(mdp, R(1));
  auto same = determinize_single_constraint(mdp, sigma_a, cq);
  CHECK(same.next_move == sigma_a.next_move);

  auto eq = single(R(0), std::nullopt, std::nullopt);
  auto best_e = determinize_single_constraint(mdp, half, eq);
  CHECK(best_e.move(0, 0) == dirac(fx::action_of(mdp, "b")));
  CHECK(constraint_value(evaluate(mdp, best_e, Objective::Reachability), eq) == R(9));

  CHECK_THROWS_AS(determinize_single_constraint(mdp, half, fx::choice().query), std::invalid_argument);
}

TEST_CASE("property: flows are reproduced as reach probabilities") {
  fx::Gen gen(91);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    RandomMdpConfig cfg;
    cfg.states = static_cast<std::size_t>(gen.range(2, 6));
    cfg.actions_per_state = static_cast<std::size_t>(gen.range(1, 3));
    cfg.density = 0.4;
    cfg.target_fraction = 0.4;
    cfg.seed = static_cast<std::uint64_t>(20000 + i);
    auto mdp = mec_quotient(cleanup(random_mdp(cfg))).quotient;
    if (!mdp.has_targets()) continue;
    Query q = single(R(-1000), std::nullopt, std::nullopt);
    auto lp = build_reach_lp(mdp, q, std::nullopt, std::nullopt);
    LinearExpr obj;
    for (std::size_t v = 0; v < lp.num_variables(); ++v) {
      if (lp.name(v).rfind("x[", 0) == 0) obj.emplace_back(v, Rational(gen.range(-3, 3)));
    }
    lp.set_objective(obj, Sense::Maximize);
    auto r = solve_optimize(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    auto f = empty_flow(mdp);
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) f.y[a] = r.solution[*lp.find("y[" + mdp.action(a).name + "]")];
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      if (auto v = lp.find("x[" + mdp.state(s).name + "]")) f.x[s] = r.solution[*v];
    }
    auto built = build_induced_chain(mdp, strategy_from_reach_flow(mdp, f));
    std::vector<Rational> reached(mdp.num_states());
    for (const auto& [c, p] : reach_probabilities(built.chain)) reached[std::get<0>(built.origin[c])] += p;
    CHECK(reached == f.x);
    ++checked;
  }
  CHECK(checked >= 300);
}

TEST_CASE("property: determinisation never loses and matches the best deterministic strategy") {
  fx::Gen gen(101);
  for (int i = 0; i < 600; ++i) {
    RandomMdpConfig cfg;
    cfg.states = static_cast<std::size_t>(gen.range(2, 3));
    cfg.actions_per_state = static_cast<std::size_t>(gen.range(1, 3));
    cfg.density = 0.5;
    cfg.target_fraction = i % 2 == 0 ? 0.5 : 0.0;
    cfg.reward_range = {-4, 8};
    cfg.seed = static_cast<std::uint64_t>(30000 + i);
    auto mdp = random_mdp(cfg);
    auto objective = i % 2 == 0 ? Objective::Reachability : Objective::MeanPayoff;
    Query q;
    switch (gen.range(0, 2)) {
      case 0: q = single(R(0), std::nullopt, std::nullopt, objective); break;
      case 1: q = single(std::nullopt, CvarBound{gen.level(10), R(0)}, std::nullopt, objective); break;
      default: q = single(std::nullopt, std::nullopt, VarBound{gen.level(10), R(0)}, objective); break;
    }
    auto input = gen.memoryless(mdp);
    auto before = constraint_value(evaluate(mdp, input, objective), q);
    auto det = determinize_single_constraint(mdp, input, q);
    CHECK(det.is_deterministic());
    CHECK(det.is_memoryless());
    auto after = constraint_value(evaluate(mdp, det, objective), q);
    CHECK(before <= after);

    std::optional<Rational> best;
    std::vector<std::size_t> pick(mdp.num_states());
    std::function<void(std::size_t)> rec = [&](std::size_t s) {
      if (s == mdp.num_states()) {
        auto v = constraint_value(evaluate(mdp, deterministic_strategy(pick), objective), q);
        if (!best || *best < v) best = v;
        return;
      }
      for (std::size_t a : mdp.available(s)) {
        pick[s] = a;
        rec(s + 1);
      }
    };
    rec(0);
    CHECK(before <= *best);
  }
}

TEST_CASE("property: CVaR of mixed strategies is convex") {
  fx::Gen gen(111);
  for (int i = 0; i < 500; ++i) {
    RandomMdpConfig cfg;
    cfg.states = static_cast<std::size_t>(gen.range(2, 5));
    cfg.actions_per_state = 2;
    cfg.density = 0.4;
    cfg.target_fraction = 0.4;
    cfg.reward_range = {-5, 5};
    cfg.seed = static_cast<std::uint64_t>(40000 + i);
    auto mdp = random_mdp(cfg);
    auto objective = i % 2 == 0 ? Objective::Reachability : Objective::MeanPayoff;
    auto s1 = gen.memoryless(mdp), s2 = gen.memoryless(mdp);
    Rational lambda = gen.fraction(10), p = gen.level(20);
    auto mixed = cvar(evaluate(mdp, mix_strategies(s1, s2, lambda), objective)[0], p);
    auto c1 = cvar(evaluate(mdp, s1, objective)[0], p), c2 = cvar(evaluate(mdp, s2, objective)[0], p);
    CHECK(mixed <= lambda * c1 + (R(1) - lambda) * c2);
  }
}
