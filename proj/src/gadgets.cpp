#include "riskmdp/gadgets.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace riskmdp {
namespace {

StateInfo state(std::string name, std::vector<Rational> rewards, bool target = false) {
  return StateInfo{std::move(name), std::move(rewards), target};
}

ActionInfo action(std::string name, std::size_t from, Distribution succ) {
  return ActionInfo{std::move(name), from, canonical(std::move(succ))};
}

Query standard_query(Objective objective, const Rational& e, const Rational& c, const std::optional<Rational>& v) {
  Query q;
  q.objective = objective;
  DimConstraint dc;
  dc.e = e;
  dc.cvar = CvarBound{Rational(1, 20), c};
  if (v) dc.var = VarBound{Rational(1, 20), *v};
  q.dims.push_back(dc);
  return q;
}

// s0 -a-> s1 (5) and s0 -b-> 0.9 s2 (10) / 0.1 s3 (0); all value states absorbing targets.
Example choice() {
  std::vector<StateInfo> s{state("s0", {Rational(0)}), state("s1", {Rational(5)}, true),
                           state("s2", {Rational(10)}, true), state("s3", {Rational(0)}, true)};
  std::vector<ActionInfo> a{action("a", 0, {{1, Rational(1)}}),
                            action("b", 0, {{2, Rational(9, 10)}, {3, Rational(1, 10)}}),
                            action("l1", 1, {{1, Rational(1)}}), action("l2", 2, {{2, Rational(1)}}),
                            action("l3", 3, {{3, Rational(1)}})};
  return {Mdp(std::move(s), std::move(a), 0),
          standard_query(Objective::Reachability, Rational(6), Rational(2), Rational(5))};
}

// s0 (5) loops with a or leaves with b; eps scales the leaving mass.
Example loop_like(const Rational& eps, bool slow) {
  std::vector<StateInfo> s{state("s0", {Rational(5)}), state("s2", {Rational(10)}), state("s3", {Rational(0)})};
  Distribution b{{1, Rational(9, 10) * eps}, {2, Rational(1, 10) * eps}};
  if (slow) b.emplace_back(0, Rational(1) - eps);
  std::vector<ActionInfo> a{action("a", 0, {{0, Rational(1)}}), action("b", 0, std::move(b)),
                            action("l2", 1, {{1, Rational(1)}}), action("l3", 2, {{2, Rational(1)}})};
  return {Mdp(std::move(s), std::move(a), 0),
          standard_query(Objective::MeanPayoff, Rational(6), Rational(2), Rational(5))};
}

Example negative() {
  std::vector<StateInfo> s{state("s0", {Rational(0)}), state("s2", {Rational(5)}, true),
                           state("s3", {Rational(-5)}, true)};
  std::vector<ActionInfo> a{action("a", 0, {{0, Rational(1)}}),
                            action("b", 0, {{1, Rational(9, 10)}, {2, Rational(1, 10)}}),
                            action("l2", 1, {{1, Rational(1)}}), action("l3", 2, {{2, Rational(1)}})};
  return {Mdp(std::move(s), std::move(a), 0),
          standard_query(Objective::Reachability, Rational(1), Rational(-3), std::nullopt)};
}

std::string literal_name(int lit) { return (lit > 0 ? "x" : "nx") + std::to_string(std::abs(lit)); }

}  // namespace

Example example(const std::string& name, const Rational& eps) {
  if (name == "choice") return choice();
  if (name == "loop") return loop_like(Rational(1), false);
  if (name == "slow") {
    if (eps.sign() <= 0 || eps > Rational(1)) throw std::invalid_argument("example slow: eps must lie in (0,1]");
    return loop_like(eps, true);
  }
  if (name == "negative") return negative();
  throw std::invalid_argument("unknown example '" + name + "'");
}

Cnf3 parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Cnf3 cnf;
  bool header = false;
  std::vector<int> current;
  auto flush = [&] {
    if (current.empty()) return;
    if (current.size() > 3) throw std::invalid_argument("dimacs: clause with more than three literals");
    while (current.size() < 3) current.push_back(current.back());
    cnf.clauses.push_back({current[0], current[1], current[2]});
    current.clear();
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c" || tok == "%") continue;
    if (tok == "p") {
      std::string fmt;
      std::size_t clauses = 0;
      if (!(ls >> fmt >> cnf.variables >> clauses) || fmt != "cnf") throw std::invalid_argument("dimacs: bad header");
      header = true;
      continue;
    }
    if (!header) throw std::invalid_argument("dimacs: clause before header");
    do {
      int lit = 0;
      try {
        lit = std::stoi(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("dimacs: bad literal '" + tok + "'");
      }
      if (lit == 0) {
        flush();
        continue;
      }
      if (static_cast<std::size_t>(std::abs(lit)) > cnf.variables) {
        throw std::invalid_argument("dimacs: literal of undeclared variable");
      }
      current.push_back(lit);
    } while (ls >> tok);
  }
  flush();
  if (!header) throw std::invalid_argument("dimacs: missing header");
  return cnf;
}

std::string to_dimacs(const Cnf3& cnf) {
  std::ostringstream out;
  out << "p cnf " << cnf.variables << ' ' << cnf.clauses.size() << '\n';
  for (const auto& c : cnf.clauses) out << c[0] << ' ' << c[1] << ' ' << c[2] << " 0\n";
  return out.str();
}

bool brute_force_sat(const Cnf3& cnf) {
  if (cnf.variables > 20) throw std::invalid_argument("brute_force_sat: too many variables");
  for (std::uint32_t bits = 0; bits < (1u << cnf.variables); ++bits) {
    bool ok = true;
    for (const auto& c : cnf.clauses) {
      bool sat = false;
      for (int lit : c) {
        bool value = (bits >> (std::abs(lit) - 1)) & 1u;
        sat = sat || (lit > 0 ? value : !value);
      }
      ok = ok && sat;
    }
    if (ok) return true;
  }
  return false;
}

Example sat_reduction(const Cnf3& cnf) {
  const std::size_t m_count = cnf.variables;
  const std::size_t n_count = cnf.clauses.size();
  if (m_count == 0) throw std::invalid_argument("sat_reduction: no variables");
  for (const auto& c : cnf.clauses) {
    for (int lit : c) {
      if (lit == 0 || static_cast<std::size_t>(std::abs(lit)) > m_count) {
        throw std::invalid_argument("sat_reduction: literal of undeclared variable");
      }
    }
  }
  const std::size_t d = m_count + n_count;
  // Everything outside gadget m pays 10 in dimension m.
  auto outside = [&](std::optional<std::size_t> gadget) {
    std::vector<Rational> r(d);
    for (std::size_t m = 0; m < m_count; ++m) {
      if (!gadget || *gadget != m) r[m] = Rational(10);
    }
    return r;
  };

  std::vector<StateInfo> states;
  std::vector<ActionInfo> actions;
  auto add_state = [&](StateInfo s) {
    states.push_back(std::move(s));
    return states.size() - 1;
  };
  auto absorbing = [&](std::size_t s) { actions.push_back(action(states[s].name + ".loop", s, {{s, Rational(1)}})); };

  std::size_t init = add_state(state("init", std::vector<Rational>(d)));
  std::vector<std::size_t> clause_state;
  for (std::size_t n = 0; n < n_count; ++n) {
    auto r = outside(std::nullopt);
    r[m_count + n] = Rational(1);
    std::size_t s = add_state(state("c" + std::to_string(n + 1), std::move(r), true));
    absorbing(s);
    clause_state.push_back(s);
  }

  Distribution start;
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::string k = std::to_string(m + 1);
    std::size_t choose = add_state(state("q" + k, std::vector<Rational>(d)));
    start.emplace_back(choose, Rational(1, static_cast<std::int64_t>(m_count)));
    auto shaded = [&](const std::string& name, std::int64_t value) {
      auto r = outside(m);
      r[m] = Rational(value);
      std::size_t s = add_state(state(name + "_" + k, std::move(r), true));
      absorbing(s);
      return s;
    };
    std::size_t ten = shaded("ten", 10);
    std::size_t zero = shaded("zero", 0);
    std::size_t five = shaded("five", 5);
    std::size_t commit[2];
    for (int polarity = 0; polarity < 2; ++polarity) {
      int lit = polarity == 0 ? static_cast<int>(m + 1) : -static_cast<int>(m + 1);
      Distribution to_clauses;
      std::set<std::size_t> hit;
      for (std::size_t n = 0; n < n_count; ++n) {
        const auto& c = cnf.clauses[n];
        if (std::find(c.begin(), c.end(), lit) != c.end()) hit.insert(n);
      }
      bool fallback = hit.empty();
      std::size_t s = add_state(state(literal_name(lit), fallback ? outside(std::nullopt) : std::vector<Rational>(d),
                                      fallback));
      if (fallback) {
        absorbing(s);
      } else {
        for (std::size_t n : hit) to_clauses.emplace_back(clause_state[n], Rational(1, static_cast<std::int64_t>(hit.size())));
        actions.push_back(action(literal_name(lit) + ".go", s, std::move(to_clauses)));
      }
      commit[polarity] = s;
    }
    actions.push_back(action("x" + k + "=tt", choose,
                             {{ten, Rational(9, 20)}, {zero, Rational(1, 20)}, {commit[0], Rational(1, 2)}}));
    actions.push_back(action("x" + k + "=ff", choose, {{five, Rational(1, 2)}, {commit[1], Rational(1, 2)}}));
  }
  actions.push_back(action("start", init, std::move(start)));

  Query q;
  q.objective = Objective::Reachability;
  q.dims.resize(d);
  const auto big_m = static_cast<std::int64_t>(m_count);
  const auto big_n = static_cast<std::int64_t>(n_count);
  for (std::size_t m = 0; m < m_count; ++m) q.dims[m].cvar = CvarBound{Rational(1, 10 * big_m), Rational(5)};
  for (std::size_t n = 0; n < n_count; ++n) q.dims[m_count + n].e = Rational(1, 2 * big_m * big_n);
  return {Mdp(std::move(states), std::move(actions), init), std::move(q)};
}

Mdp random_mdp(const RandomMdpConfig& cfg) {
  if (cfg.states == 0 || cfg.actions_per_state == 0) throw std::invalid_argument("random_mdp: empty model");
  if (cfg.reward_range.first > cfg.reward_range.second) throw std::invalid_argument("random_mdp: bad reward range");
  std::mt19937_64 rng(cfg.seed);
  auto below = [&](std::uint64_t n) { return rng() % n; };
  auto chance = [&](double p) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p; };
  const std::size_t n = cfg.states;
  const auto span = static_cast<std::uint64_t>(cfg.reward_range.second - cfg.reward_range.first + 1);

  std::vector<bool> target(n, false);
  for (std::size_t s = 1; s < n; ++s) target[s] = chance(cfg.target_fraction);

  std::vector<StateInfo> states;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<Rational> r;
    for (std::size_t j = 0; j < cfg.dimensions; ++j) {
      r.emplace_back(cfg.reward_range.first + static_cast<std::int64_t>(below(span)));
    }
    states.push_back(state("s" + std::to_string(s), std::move(r), target[s]));
  }

  std::vector<ActionInfo> actions;
  for (std::size_t s = 0; s < n; ++s) {
    const std::string base = "s" + std::to_string(s) + ".a";
    if (target[s]) {
      actions.push_back(action(base + "0", s, {{s, Rational(1)}}));
      continue;
    }
    std::size_t lo = 0, hi = n;
    if (cfg.block_size > 0) {
      lo = (s / cfg.block_size) * cfg.block_size;
      hi = std::min(n, lo + 2 * cfg.block_size);
    }
    for (std::size_t k = 0; k < cfg.actions_per_state; ++k) {
      std::vector<std::pair<std::size_t, std::int64_t>> weights;
      for (std::size_t t = lo; t < hi; ++t) {
        if (chance(cfg.density)) weights.emplace_back(t, 1 + static_cast<std::int64_t>(below(9)));
      }
      if (weights.empty()) weights.emplace_back(lo + below(hi - lo), 1);
      std::int64_t total = 0;
      for (const auto& w : weights) total += w.second;
      Distribution d;
      for (const auto& [t, w] : weights) d.emplace_back(t, Rational(w, total));
      actions.push_back(action(base + std::to_string(k), s, std::move(d)));
    }
  }
  return Mdp(std::move(states), std::move(actions), 0);
}

Mdp random_mdp(std::size_t states, std::size_t actions_per_state, double density,
               std::pair<std::int64_t, std::int64_t> reward_range, std::size_t d, std::uint64_t seed) {
  RandomMdpConfig cfg;
  cfg.states = states;
  cfg.actions_per_state = actions_per_state;
  cfg.density = density;
  cfg.reward_range = reward_range;
  cfg.dimensions = d;
  cfg.seed = seed;
  return random_mdp(cfg);
}

}  // namespace riskmdp
