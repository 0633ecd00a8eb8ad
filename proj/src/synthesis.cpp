#include "riskmdp/synthesis.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "riskmdp/linalg.hpp"

namespace riskmdp {
namespace {

constexpr std::size_t kSearch = 0;
constexpr std::size_t kRemain = 1;

std::vector<bool> internal_mask(const Mdp& mdp, const Mec& mec) {
  std::vector<bool> mask(mdp.num_actions(), false);
  for (std::size_t a : mec.actions) mask[a] = true;
  return mask;
}

// Attractor strategy inside the MEC towards `goal`: every non-goal member gets
// an internal action with a successor on a strictly lower BFS level.
std::vector<std::optional<std::size_t>> attractor(const Mdp& mdp, const Mec& mec, const std::vector<bool>& goal) {
  std::vector<std::optional<std::size_t>> choice(mdp.num_states());
  std::vector<bool> done = goal;
  auto internal = internal_mask(mdp, mec);
  bool progress = true;
  while (progress) {
    progress = false;
    std::vector<std::size_t> layer;
    for (std::size_t s : mec.states) {
      if (done[s]) continue;
      for (std::size_t a : mdp.available(s)) {
        if (!internal[a]) continue;
        bool hits = false;
        for (const auto& [t, p] : mdp.action(a).successors) hits = hits || done[t];
        if (hits) {
          choice[s] = a;
          layer.push_back(s);
          break;
        }
      }
    }
    for (std::size_t s : layer) done[s] = true;
    progress = !layer.empty();
  }
  for (std::size_t s : mec.states) {
    if (!done[s]) throw std::logic_error("attractor: goal not reachable inside MEC");
  }
  return choice;
}

// Adds to y the expected action uses of the attractor towards v when `source`
// mass starts inside the MEC.
void route(const Mdp& mdp, const Mec& mec, std::size_t v, const std::vector<std::pair<std::size_t, Rational>>& source,
           std::vector<Rational>& y) {
  std::vector<bool> goal(mdp.num_states(), false);
  goal[v] = true;
  auto choice = attractor(mdp, mec, goal);
  std::vector<std::size_t> members;
  for (std::size_t s : mec.states) {
    if (s != v) members.push_back(s);
  }
  if (members.empty()) return;
  std::vector<std::size_t> local(mdp.num_states(), members.size());
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = i;
  const std::size_t k = members.size();
  Matrix a(k, std::vector<Rational>(k));
  Matrix b(k, std::vector<Rational>(1));
  for (std::size_t i = 0; i < k; ++i) {
    a[i][i] += Rational(1);
    for (const auto& [t, p] : mdp.action(*choice[members[i]]).successors) {
      if (local[t] < k) a[local[t]][i] -= p;
    }
  }
  bool any = false;
  for (const auto& [s, m] : source) {
    if (s == v || m.is_zero()) continue;
    b[local[s]][0] += m;
    any = true;
  }
  if (!any) return;
  Matrix z = solve_linear(std::move(a), std::move(b));
  for (std::size_t i = 0; i < k; ++i) y[*choice[members[i]]] += z[i][0];
}

std::size_t representative(const Mdp& mdp, const Mec& mec) {
  return *std::min_element(mec.states.begin(), mec.states.end(), [&](std::size_t a, std::size_t b) {
    return mdp.state(a).name < mdp.state(b).name;
  });
}

MarkovChain local_chain(const Mdp& mdp, const Mec& mec, const std::vector<Distribution>& moves,
                        std::vector<std::size_t>& local) {
  local.assign(mdp.num_states(), 0);
  for (std::size_t i = 0; i < mec.states.size(); ++i) local[mec.states[i]] = i;
  std::vector<StateInfo> infos;
  std::vector<Distribution> rows;
  for (std::size_t s : mec.states) {
    StateInfo info = mdp.state(s);
    info.target = false;
    infos.push_back(std::move(info));
    Distribution row;
    for (const auto& [a, pa] : moves[s]) {
      for (const auto& [t, pt] : mdp.action(a).successors) row.emplace_back(local[t], pa * pt);
    }
    rows.push_back(canonical(std::move(row)));
  }
  return MarkovChain(std::move(infos), std::move(rows), dirac(0));
}

}  // namespace

std::size_t least_action(const Mdp& mdp, std::size_t s) {
  const auto& av = mdp.available(s);
  return *std::min_element(av.begin(), av.end(), [&](std::size_t a, std::size_t b) {
    return mdp.action(a).name < mdp.action(b).name;
  });
}

std::vector<Rational> inflow(const Mdp& mdp, const FlowSolution& flow) {
  std::vector<Rational> v(mdp.num_states());
  v[mdp.initial()] += Rational(1);
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (flow.y[a].is_zero()) continue;
    for (const auto& [t, p] : mdp.action(a).successors) v[t] += flow.y[a] * p;
  }
  return v;
}

StrategySpec strategy_from_reach_flow(const Mdp& mdp, const FlowSolution& flow) {
  std::vector<Distribution> moves(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    Rational total;
    for (std::size_t a : mdp.available(s)) total += flow.y[a];
    if (total.is_zero()) {
      moves[s] = dirac(least_action(mdp, s));
      continue;
    }
    Distribution d;
    for (std::size_t a : mdp.available(s)) {
      if (!flow.y[a].is_zero()) d.emplace_back(a, flow.y[a] / total);
    }
    moves[s] = canonical(std::move(d));
  }
  return memoryless_strategy(std::move(moves));
}

StrategySpec two_memory_strategy(const Mdp& mdp, const FlowSolution& flow, const MecDecomposition& mecs,
                                 const std::vector<StrategySpec>& inner) {
  if (inner.size() != mecs.mecs.size()) throw std::invalid_argument("two_memory_strategy: one inner strategy per MEC");
  auto v = inflow(mdp, flow);
  auto share = [&](std::size_t s) -> Rational {
    if (flow.x[s].is_zero()) return Rational();
    if (v[s].is_zero() || flow.x[s] > v[s]) throw std::invalid_argument("two_memory_strategy: switch mass exceeds inflow");
    return flow.x[s] / v[s];
  };
  auto split = [](const Rational& remain) {
    Distribution d{{kSearch, Rational(1) - remain}, {kRemain, remain}};
    return canonical(std::move(d));
  };

  StrategySpec out;
  out.num_states = mdp.num_states();
  out.memory = {"search", "remain"};
  out.initial_memory = split(share(mdp.initial()));
  out.next_move.resize(mdp.num_states() * 2);
  auto search = strategy_from_reach_flow(mdp, flow);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    out.move(s, kSearch) = search.move(s, 0);
    auto m = mecs.state_to_mec[s];
    out.move(s, kRemain) = m ? inner[*m].move(s, 0) : dirac(least_action(mdp, s));
  }
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (flow.y[a].is_zero()) continue;
    for (const auto& [t, p] : mdp.action(a).successors) {
      Rational r = share(t);
      if (!r.is_zero()) out.memory_update[{a, t, kSearch}] = split(r);
    }
  }
  return out;
}

FlowSolution lift_flow(const Mdp& mdp, const MecDecomposition& mecs, const std::vector<Rational>& y,
                       const std::vector<Rational>& stay) {
  FlowSolution out;
  out.y = y;
  out.y.resize(mdp.num_actions());
  out.x.assign(mdp.num_states(), Rational());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (mecs.action_to_mec[a]) out.y[a] = Rational();
  }
  auto in = inflow(mdp, out);
  for (std::size_t i = 0; i < mecs.mecs.size(); ++i) {
    const Mec& mec = mecs.mecs[i];
    std::size_t rep = representative(mdp, mec);
    Rational stay_mass = i < stay.size() ? stay[i] : Rational();
    out.x[rep] = stay_mass;
    std::vector<std::pair<std::size_t, Rational>> source;
    Rational total;
    for (std::size_t s : mec.states) {
      total += in[s];
      if (!in[s].is_zero()) source.emplace_back(s, in[s]);
    }
    if (total.is_zero()) continue;
    route(mdp, mec, rep, source, out.y);
    for (std::size_t o : mec.states) {
      if (o == rep) continue;
      Rational leaving;
      for (std::size_t a : mdp.available(o)) {
        if (!mecs.action_to_mec[a]) leaving += y[a];
      }
      if (!leaving.is_zero()) route(mdp, mec, o, {{rep, leaving}}, out.y);
    }
  }
  return out;
}

std::optional<StrategySpec> mec_constant_strategy(const Mdp& mdp, const Mec& mec, const std::vector<Rational>& freq) {
  auto internal = internal_mask(mdp, mec);
  std::vector<Rational> out_rate(mdp.num_states()), in_rate(mdp.num_states());
  Rational total;
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (freq[a].is_zero()) continue;
    if (!internal[a] || freq[a].sign() < 0) throw std::invalid_argument("mec_constant_strategy: frequency outside MEC");
    total += freq[a];
    out_rate[mdp.action(a).state] += freq[a];
    for (const auto& [t, p] : mdp.action(a).successors) in_rate[t] += freq[a] * p;
  }
  if (total.is_zero()) throw std::invalid_argument("mec_constant_strategy: zero frequencies");
  for (std::size_t s : mec.states) {
    if (out_rate[s] != in_rate[s]) throw std::invalid_argument("mec_constant_strategy: unbalanced frequencies");
  }

  std::vector<bool> support(mdp.num_states(), false);
  for (std::size_t s : mec.states) support[s] = !out_rate[s].is_zero();
  auto steer = attractor(mdp, mec, support);
  std::vector<Distribution> moves(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) moves[s] = dirac(least_action(mdp, s));
  for (std::size_t s : mec.states) {
    if (!support[s]) {
      moves[s] = dirac(*steer[s]);
      continue;
    }
    Distribution d;
    for (std::size_t a : mdp.available(s)) {
      if (!freq[a].is_zero()) d.emplace_back(a, freq[a] / out_rate[s]);
    }
    moves[s] = canonical(std::move(d));
  }

  const std::size_t dims = mdp.dimensions();
  std::vector<Rational> expected(dims);
  for (std::size_t s : mec.states) {
    for (std::size_t j = 0; j < dims; ++j) expected[j] += out_rate[s] * mdp.reward(s, j);
  }
  for (auto& e : expected) e /= total;
  std::vector<std::size_t> local;
  auto chain = local_chain(mdp, mec, moves, local);
  for (const auto& b : bscc_mean_payoff(chain)) {
    if (b.gain != expected) return std::nullopt;
  }
  return memoryless_strategy(std::move(moves));
}

StrategySpec stay_strategy(const Mdp& mdp, const Mec& mec) {
  auto internal = internal_mask(mdp, mec);
  std::vector<Distribution> moves(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) moves[s] = dirac(least_action(mdp, s));
  for (std::size_t s : mec.states) {
    for (std::size_t a : mdp.available(s)) {
      if (internal[a]) {
        moves[s] = dirac(a);
        break;
      }
    }
  }
  return memoryless_strategy(std::move(moves));
}

std::vector<Rational> uniform_frequencies(const Mdp& mdp, const Mec& mec) {
  auto internal = internal_mask(mdp, mec);
  std::vector<Distribution> moves(mdp.num_states());
  for (std::size_t s : mec.states) {
    std::vector<std::size_t> acts;
    for (std::size_t a : mdp.available(s)) {
      if (internal[a]) acts.push_back(a);
    }
    Rational share(1, static_cast<std::int64_t>(acts.size()));
    for (std::size_t a : acts) moves[s].emplace_back(a, share);
  }
  std::vector<std::size_t> local;
  auto chain = local_chain(mdp, mec, moves, local);
  auto gains = bscc_mean_payoff(chain);
  if (gains.size() != 1 || gains.front().states.size() != mec.states.size()) {
    throw std::logic_error("uniform_frequencies: MEC not strongly connected");
  }
  const auto& b = gains.front();
  std::vector<Rational> freq(mdp.num_actions());
  for (std::size_t i = 0; i < b.states.size(); ++i) {
    std::size_t s = mec.states[b.states[i]];
    for (const auto& [a, p] : moves[s]) freq[a] = b.stationary[i] * p;
  }
  return freq;
}

PayoffLaw evaluate(const Mdp& mdp, const StrategySpec& strategy, Objective objective) {
  return payoff_law(induced_chain(mdp, strategy), objective);
}

Rational constraint_value(const PayoffLaw& law, const Query& query) {
  if (query.constraint_count() != 1) throw std::invalid_argument("constraint_value: expected a single constraint");
  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    const auto& c = query.dims[j];
    if (c.e) return expectation(law[j]);
    if (c.cvar) return cvar(law[j], c.cvar->p);
    if (c.var) {
      auto v = var(law[j], c.var->q);
      if (!v) throw std::invalid_argument("constraint_value: VaR level must be below 1");
      return *v;
    }
  }
  throw std::logic_error("constraint_value: unreachable");
}

StrategySpec determinize_single_constraint(const Mdp& mdp, const StrategySpec& strategy, const Query& query) {
  if (!strategy.is_memoryless()) throw std::invalid_argument("determinize: strategy must be memoryless");
  if (query.constraint_count() != 1) throw std::invalid_argument("determinize: query must have one constraint");
  const std::size_t n = mdp.num_states();
  std::vector<std::vector<std::size_t>> support(n);
  std::size_t combos = 1;
  constexpr std::size_t kExhaustiveLimit = 4096;
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& [a, p] : strategy.move(s, 0)) support[s].push_back(a);
    if (combos <= kExhaustiveLimit) combos *= support[s].size();
  }
  auto value_of = [&](const std::vector<std::size_t>& choice) {
    return constraint_value(evaluate(mdp, deterministic_strategy(choice), query.objective), query);
  };

  std::vector<std::size_t> choice(n);
  for (std::size_t s = 0; s < n; ++s) choice[s] = support[s].front();

  if (combos <= kExhaustiveLimit) {
    std::vector<std::size_t> index(n, 0);
    std::vector<std::size_t> best = choice;
    Rational best_value = value_of(choice);
    while (true) {
      std::size_t s = 0;
      while (s < n && ++index[s] == support[s].size()) index[s++] = 0;
      if (s == n) break;
      for (std::size_t u = 0; u < n; ++u) choice[u] = support[u][index[u]];
      Rational v = value_of(choice);
      if (v > best_value) {
        best_value = v;
        best = choice;
      }
    }
    return deterministic_strategy(best);
  }

  // Fix one state at a time, keeping the rest randomised as in the input.
  std::vector<Distribution> moves(n);
  for (std::size_t s = 0; s < n; ++s) moves[s] = strategy.move(s, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (support[s].size() == 1) continue;
    std::optional<Rational> best_value;
    std::size_t best = support[s].front();
    for (std::size_t a : support[s]) {
      moves[s] = dirac(a);
      Rational v = constraint_value(evaluate(mdp, memoryless_strategy(moves), query.objective), query);
      if (!best_value || v > *best_value) {
        best_value = v;
        best = a;
      }
    }
    moves[s] = dirac(best);
  }
  for (std::size_t s = 0; s < n; ++s) choice[s] = moves[s].front().first;
  return deterministic_strategy(choice);
}

}  // namespace riskmdp
