#include "riskmdp/model.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace riskmdp {

Distribution canonical(Distribution dist) {
  std::sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Distribution out;
  out.reserve(dist.size());
  for (auto& [i, p] : dist) {
    if (!out.empty() && out.back().first == i) {
      out.back().second += p;
    } else {
      out.emplace_back(i, std::move(p));
    }
  }
  std::erase_if(out, [](const auto& e) { return e.second.is_zero(); });
  return out;
}

Rational total_mass(const Distribution& dist) {
  Rational sum;
  for (const auto& [i, p] : dist) sum += p;
  return sum;
}

Distribution dirac(std::size_t index) { return Distribution{{index, Rational(1)}}; }

std::string ValidationReport::str() const {
  std::string out;
  for (const auto& p : problems) out += p + "\n";
  return out;
}

Mdp::Mdp(std::vector<StateInfo> states, std::vector<ActionInfo> actions, std::size_t initial)
    : states_(std::move(states)), actions_(std::move(actions)), initial_(initial) {
  available_.resize(states_.size());
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    if (actions_[a].state < states_.size()) available_[actions_[a].state].push_back(a);
  }
}

bool Mdp::has_targets() const {
  return std::any_of(states_.begin(), states_.end(), [](const StateInfo& s) { return s.target; });
}

std::optional<std::size_t> Mdp::find_state(const std::string& name) const {
  for (std::size_t s = 0; s < states_.size(); ++s) {
    if (states_[s].name == name) return s;
  }
  return std::nullopt;
}

std::optional<std::size_t> Mdp::find_action(const std::string& name) const {
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    if (actions_[a].name == name) return a;
  }
  return std::nullopt;
}

Mdp make_targets_absorbing(const Mdp& mdp) {
  std::vector<ActionInfo> actions = mdp.actions();
  for (auto& act : actions) {
    if (act.state < mdp.num_states() && mdp.is_target(act.state)) act.successors = dirac(act.state);
  }
  return Mdp(mdp.states(), std::move(actions), mdp.initial());
}

MarkovChain::MarkovChain(std::vector<StateInfo> states, std::vector<Distribution> rows, Distribution initial)
    : states_(std::move(states)), rows_(std::move(rows)), initial_(std::move(initial)) {}

namespace {

void check_rewards(const std::vector<StateInfo>& states, ValidationReport& report) {
  if (states.empty()) {
    report.problems.push_back("model has no states");
    return;
  }
  std::size_t d = states.front().rewards.size();
  std::set<std::string> names;
  for (const auto& s : states) {
    if (s.rewards.size() != d) {
      report.problems.push_back("state '" + s.name + "' has " + std::to_string(s.rewards.size()) +
                                " reward dimensions, expected " + std::to_string(d));
    }
    if (!names.insert(s.name).second) report.problems.push_back("duplicate state name '" + s.name + "'");
  }
}

void check_distribution(const Distribution& dist, std::size_t bound, const std::string& what,
                        ValidationReport& report) {
  Rational sum;
  for (const auto& [i, p] : dist) {
    if (i >= bound) report.problems.push_back(what + " refers to unknown index " + std::to_string(i));
    if (p.sign() <= 0) report.problems.push_back(what + " has non-positive probability " + p.str());
    sum += p;
  }
  if (sum != Rational(1)) report.problems.push_back(what + " sums to " + sum.str() + " instead of 1");
}

}  // namespace

ValidationReport validate(const Mdp& mdp) {
  ValidationReport report;
  check_rewards(mdp.states(), report);
  if (mdp.num_states() == 0) return report;
  if (mdp.initial() >= mdp.num_states()) report.problems.push_back("initial state out of range");
  std::map<std::string, std::size_t> owner;
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    const auto& act = mdp.action(a);
    if (act.state >= mdp.num_states()) {
      report.problems.push_back("action '" + act.name + "' belongs to no state");
      continue;
    }
    auto [it, fresh] = owner.emplace(act.name, act.state);
    if (!fresh) {
      if (it->second != act.state) {
        report.problems.push_back("action '" + act.name + "' shared between states '" +
                                  mdp.state(it->second).name + "' and '" + mdp.state(act.state).name + "'");
      } else {
        report.problems.push_back("duplicate action '" + act.name + "' at state '" + mdp.state(act.state).name + "'");
      }
    }
    check_distribution(act.successors, mdp.num_states(), "action '" + act.name + "'", report);
  }
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.available(s).empty()) report.problems.push_back("state '" + mdp.state(s).name + "' has no actions");
    if (!mdp.is_target(s)) continue;
    for (std::size_t a : mdp.available(s)) {
      const auto& succ = mdp.action(a).successors;
      if (succ.size() != 1 || succ.front().first != s) {
        report.problems.push_back("target state '" + mdp.state(s).name + "' is not absorbing (action '" +
                                  mdp.action(a).name + "')");
        break;
      }
    }
  }
  return report;
}

ValidationReport validate(const MarkovChain& mc) {
  ValidationReport report;
  check_rewards(mc.states(), report);
  for (std::size_t s = 0; s < mc.num_states(); ++s) {
    check_distribution(mc.row(s), mc.num_states(), "row of state '" + mc.state(s).name + "'", report);
    if (mc.is_target(s)) {
      const auto& row = mc.row(s);
      if (row.size() != 1 || row.front().first != s) {
        report.problems.push_back("target state '" + mc.state(s).name + "' is not absorbing");
      }
    }
  }
  check_distribution(mc.initial(), mc.num_states(), "initial distribution", report);
  return report;
}

std::size_t Query::constraint_count() const {
  std::size_t n = 0;
  for (const auto& d : dims) n += d.count();
  return n;
}

bool Query::has_var() const {
  return std::any_of(dims.begin(), dims.end(), [](const DimConstraint& d) { return d.var.has_value(); });
}

bool Query::has_cvar() const {
  return std::any_of(dims.begin(), dims.end(), [](const DimConstraint& d) { return d.cvar.has_value(); });
}

void validate_query(const Query& query, std::size_t model_dimensions) {
  if (query.dimensions() != model_dimensions) {
    throw std::invalid_argument("query has " + std::to_string(query.dimensions()) + " dimensions, model has " +
                                std::to_string(model_dimensions));
  }
  auto inside = [](const Rational& x) { return x.sign() > 0 && x < Rational(1); };
  for (std::size_t j = 0; j < query.dims.size(); ++j) {
    const auto& d = query.dims[j];
    if (d.cvar && !inside(d.cvar->p)) {
      throw std::invalid_argument("CVaR level in dimension " + std::to_string(j) + " must lie in (0,1)");
    }
    if (d.var && !inside(d.var->q)) {
      throw std::invalid_argument("VaR level in dimension " + std::to_string(j) + " must lie in (0,1)");
    }
  }
}

Distribution StrategySpec::update(std::size_t action, std::size_t succ, std::size_t m) const {
  auto it = memory_update.find({action, succ, m});
  if (it == memory_update.end()) return dirac(m);
  return it->second;
}

bool StrategySpec::is_deterministic() const {
  auto dirac_like = [](const Distribution& d) { return d.size() == 1; };
  if (!dirac_like(initial_memory)) return false;
  for (const auto& d : next_move) {
    if (!dirac_like(d)) return false;
  }
  for (const auto& [k, d] : memory_update) {
    if (!dirac_like(d)) return false;
  }
  return true;
}

StrategySpec memoryless_strategy(std::vector<Distribution> per_state) {
  StrategySpec s;
  s.num_states = per_state.size();
  s.memory = {"m0"};
  s.initial_memory = dirac(0);
  s.next_move = std::move(per_state);
  return s;
}

StrategySpec deterministic_strategy(const std::vector<std::size_t>& choice) {
  std::vector<Distribution> per_state;
  per_state.reserve(choice.size());
  for (std::size_t a : choice) per_state.push_back(dirac(a));
  return memoryless_strategy(std::move(per_state));
}

ValidationReport validate(const Mdp& mdp, const StrategySpec& strategy) {
  ValidationReport report;
  const std::size_t mem = strategy.memory.size();
  if (mem == 0) report.problems.push_back("strategy has empty memory");
  if (strategy.num_states != mdp.num_states()) {
    report.problems.push_back("strategy covers " + std::to_string(strategy.num_states) + " states, model has " +
                              std::to_string(mdp.num_states()));
    return report;
  }
  if (strategy.next_move.size() != mdp.num_states() * mem) {
    report.problems.push_back("next-move table has wrong size");
    return report;
  }
  check_distribution(strategy.initial_memory, mem, "initial memory distribution", report);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t m = 0; m < mem; ++m) {
      std::string what = "next move at ('" + mdp.state(s).name + "', '" + strategy.memory[m] + "')";
      const auto& d = strategy.move(s, m);
      check_distribution(d, mdp.num_actions(), what, report);
      for (const auto& [a, p] : d) {
        if (a < mdp.num_actions() && mdp.action(a).state != s) {
          report.problems.push_back(what + " uses action '" + mdp.action(a).name + "' of another state");
        }
      }
    }
  }
  for (const auto& [key, d] : strategy.memory_update) {
    auto [a, s, m] = key;
    if (a >= mdp.num_actions() || s >= mdp.num_states() || m >= mem) {
      report.problems.push_back("memory update key out of range");
      continue;
    }
    check_distribution(d, mem, "memory update", report);
  }
  return report;
}

StrategySpec mix_strategies(const StrategySpec& s1, const StrategySpec& s2, const Rational& lambda) {
  if (s1.num_states != s2.num_states) throw std::invalid_argument("strategies are defined on different models");
  if (lambda.sign() < 0 || lambda > Rational(1)) throw std::invalid_argument("mixing weight outside [0,1]");
  const std::size_t m1 = s1.memory.size();
  const std::size_t m2 = s2.memory.size();
  StrategySpec out;
  out.num_states = s1.num_states;
  for (const auto& m : s1.memory) out.memory.push_back("1." + m);
  for (const auto& m : s2.memory) out.memory.push_back("2." + m);
  Distribution init;
  for (const auto& [m, p] : s1.initial_memory) init.emplace_back(m, p * lambda);
  for (const auto& [m, p] : s2.initial_memory) init.emplace_back(m1 + m, p * (Rational(1) - lambda));
  out.initial_memory = canonical(std::move(init));
  out.next_move.resize(out.num_states * (m1 + m2));
  for (std::size_t s = 0; s < out.num_states; ++s) {
    for (std::size_t m = 0; m < m1; ++m) out.move(s, m) = s1.move(s, m);
    for (std::size_t m = 0; m < m2; ++m) out.move(s, m1 + m) = s2.move(s, m);
  }
  for (const auto& [key, d] : s1.memory_update) out.memory_update[key] = d;
  for (const auto& [key, d] : s2.memory_update) {
    auto [a, s, m] = key;
    Distribution shifted;
    for (const auto& [n, p] : d) shifted.emplace_back(n + m1, p);
    out.memory_update[{a, s, m + m1}] = std::move(shifted);
  }
  return out;
}

InducedChain build_induced_chain(const Mdp& mdp, const StrategySpec& strategy) {
  const std::size_t mem = strategy.memory.size();
  if (mem == 0 || strategy.num_states != mdp.num_states()) {
    throw std::invalid_argument("strategy does not match the model");
  }
  InducedChain out;
  std::unordered_map<std::uint64_t, std::size_t> index;
  std::deque<std::size_t> queue;
  auto key = [&](std::size_t s, std::size_t m, std::size_t a) {
    return (static_cast<std::uint64_t>(a) * mem + m) * mdp.num_states() + s;
  };
  auto intern = [&](std::size_t s, std::size_t m, std::size_t a) {
    auto [it, fresh] = index.emplace(key(s, m, a), out.origin.size());
    if (fresh) {
      out.origin.emplace_back(s, m, a);
      queue.push_back(it->second);
    }
    return it->second;
  };

  Distribution initial;
  const std::size_t s0 = mdp.initial();
  for (const auto& [m, pm] : strategy.initial_memory) {
    for (const auto& [a, pa] : strategy.move(s0, m)) initial.emplace_back(intern(s0, m, a), pm * pa);
  }
  std::vector<Distribution> rows;
  while (!queue.empty()) {
    std::size_t id = queue.front();
    queue.pop_front();
    auto [s, m, a] = out.origin[id];
    if (rows.size() <= id) rows.resize(id + 1);
    if (mdp.is_target(s)) {
      // Targets are absorbing in the model; keep one absorbing copy per triple.
      rows[id] = dirac(id);
      continue;
    }
    Distribution row;
    for (const auto& [succ, ps] : mdp.action(a).successors) {
      for (const auto& [m2, pm] : strategy.update(a, succ, m)) {
        Rational w = ps * pm;
        for (const auto& [a2, pa] : strategy.move(succ, m2)) row.emplace_back(intern(succ, m2, a2), w * pa);
      }
    }
    rows[id] = canonical(std::move(row));
  }
  rows.resize(out.origin.size());
  std::vector<StateInfo> states;
  states.reserve(out.origin.size());
  for (const auto& [s, m, a] : out.origin) {
    StateInfo info = mdp.state(s);
    info.name = mdp.state(s).name + "|" + strategy.memory[m] + "|" + mdp.action(a).name;
    states.push_back(std::move(info));
  }
  out.chain = MarkovChain(std::move(states), std::move(rows), canonical(std::move(initial)));
  return out;
}

MarkovChain induced_chain(const Mdp& mdp, const StrategySpec& strategy) {
  return build_induced_chain(mdp, strategy).chain;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Sat:
      return "SAT";
    case Status::Unsat:
      return "UNSAT";
    case Status::Unknown:
      return "UNKNOWN";
  }
  return "UNKNOWN";
}

}  // namespace riskmdp
