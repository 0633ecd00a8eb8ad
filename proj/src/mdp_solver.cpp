#include "riskmdp/mdp_solver.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <stdexcept>
#include <thread>

namespace riskmdp {
namespace {

// Smallest index i < count with f(i) true.  Workers claim indices in order
// and stop once a smaller success is known, so the answer does not depend on
// the number of threads.
std::optional<std::size_t> first_success(std::size_t count, std::size_t threads,
                                         const std::function<bool(std::size_t)>& f) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      if (f(i)) return i;
    }
    return std::nullopt;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> best{count};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= count || i >= best.load()) return;
      if (f(i)) {
        std::size_t cur = best.load();
        while (i < cur && !best.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (best.load() < count) return best.load();
  return std::nullopt;
}

std::string var_name(const char* prefix, const std::string& name) { return std::string(prefix) + "[" + name + "]"; }

std::vector<std::size_t> active_dims(const Query& query) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    if (!query.dims[j].empty()) out.push_back(j);
  }
  return out;
}

void require_valid(const Mdp& mdp, const Query& query) {
  auto report = validate(mdp);
  if (!report.ok()) throw std::invalid_argument("invalid model: " + report.str());
  validate_query(query, mdp.dimensions());
}

std::vector<std::pair<std::string, Rational>> nonzero_assignment(const LinearProgram& lp, const LpSolution& sol) {
  std::vector<std::pair<std::string, Rational>> out;
  for (std::size_t v = 0; v < lp.num_variables(); ++v) {
    if (!sol[v].is_zero()) out.emplace_back(lp.name(v), sol[v]);
  }
  return out;
}

StrategySpec any_strategy(const Mdp& mdp) {
  std::vector<std::size_t> choice(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) choice[s] = least_action(mdp, s);
  return deterministic_strategy(choice);
}

Mdp without_targets(const Mdp& mdp) {
  auto states = mdp.states();
  for (auto& s : states) s.target = false;
  return Mdp(std::move(states), mdp.actions(), mdp.initial());
}

// ---------------------------------------------------------------- reachability LP

struct ReachLayout {
  std::vector<std::size_t> y;                 // per action
  std::vector<std::optional<std::size_t>> x;  // per state, targets only
};

void add_tail_block(LinearProgram& lp, const Mdp& mdp, const ReachLayout& layout, std::size_t j, const char* tag,
                    const Rational& level, const Rational& t, const std::optional<Rational>& cvar_bound) {
  LinearExpr mass, tail;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (!layout.x[s]) continue;
    const Rational& r = mdp.reward(s, j);
    if (r > t) continue;
    std::size_t v = lp.add_variable(std::string(tag) + std::to_string(j) + "[" + mdp.state(s).name + "]");
    lp.add_constraint({{v, Rational(1)}, {*layout.x[s], Rational(-1)}}, r < t ? Relation::Eq : Relation::Le, Rational(),
                      "split");
    mass.emplace_back(v, Rational(1));
    tail.emplace_back(v, r);
  }
  lp.add_constraint(std::move(mass), Relation::Eq, level, std::string(tag) + "-mass" + std::to_string(j));
  if (cvar_bound) lp.add_constraint(std::move(tail), Relation::Ge, level * *cvar_bound, "cvar" + std::to_string(j));
}

// Distinct target rewards of dimension j, ascending.
std::vector<Rational> target_values(const Mdp& mdp, std::size_t j) {
  std::vector<Rational> out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_target(s)) out.push_back(mdp.reward(s, j));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

enum class BlockKind { Cvar, Var, Merged };

struct GuessBlock {
  std::size_t dim = 0;
  BlockKind kind = BlockKind::Cvar;
  std::vector<Rational> candidates;
};

void apply(VarGuess& guess, const GuessBlock& b, const Rational& t) {
  if (b.kind != BlockKind::Var) guess.t_c[b.dim] = t;
  if (b.kind != BlockKind::Cvar) guess.t_v[b.dim] = t;
}

VarGuess empty_guess(std::size_t d) {
  VarGuess g;
  g.t_c.assign(d, std::nullopt);
  g.t_v.assign(d, std::nullopt);
  return g;
}

// Mixed-radix walk over the candidate product, first block most significant.
std::vector<std::size_t> digits(std::size_t index, const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> out(sizes.size());
  for (std::size_t k = sizes.size(); k-- > 0;) {
    out[k] = index % sizes[k];
    index /= sizes[k];
  }
  return out;
}

std::size_t product_size(const std::vector<std::size_t>& sizes) {
  std::size_t n = 1;
  for (std::size_t s : sizes) n *= s;
  return n;
}

struct ReachSearchResult {
  VarGuess guess;
  LinearProgram lp;
  LpSolution solution;
};

struct SearchStats {
  std::atomic<std::size_t> lps{0};
};

std::optional<ReachSearchResult> search_reach(const Mdp& mdp, const Query& query, const SolverOptions& options,
                                              SearchStats& stats) {
  const std::size_t d = query.dimensions();
  std::vector<GuessBlock> blocks;
  for (std::size_t j = 0; j < d; ++j) {
    const auto& c = query.dims[j];
    auto values = target_values(mdp, j);
    std::vector<Rational> above;
    if (c.var) {
      for (const auto& r : values) {
        if (r >= c.var->v) above.push_back(r);
      }
    }
    if (c.cvar && c.var && c.cvar->p == c.var->q) {
      blocks.push_back({j, BlockKind::Merged, above});
    } else {
      if (c.cvar) blocks.push_back({j, BlockKind::Cvar, values});
      if (c.var) blocks.push_back({j, BlockKind::Var, above});
    }
  }

  auto feasible = [&](const VarGuess& guess, std::optional<ReachSearchResult>* out) {
    auto lp = build_reach_lp_multi(mdp, query, guess);
    auto res = solve_feasibility(lp);
    ++stats.lps;
    if (!res.feasible()) return false;
    if (out) *out = ReachSearchResult{guess, std::move(lp), std::move(res.solution)};
    return true;
  };

  if (blocks.size() >= 2) {
    for (auto& b : blocks) {
      std::vector<char> keep(b.candidates.size(), 0);
      first_success(b.candidates.size(), options.threads, [&](std::size_t i) {
        VarGuess g = empty_guess(d);
        apply(g, b, b.candidates[i]);
        keep[i] = feasible(g, nullptr) ? 1 : 0;
        return false;
      });
      std::vector<Rational> kept;
      for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) kept.push_back(b.candidates[i]);
      }
      b.candidates = std::move(kept);
    }
  }

  std::vector<std::size_t> sizes;
  for (const auto& b : blocks) sizes.push_back(b.candidates.size());
  const std::size_t count = product_size(sizes);
  std::vector<std::optional<ReachSearchResult>> results(count);
  auto hit = first_success(count, options.threads, [&](std::size_t i) {
    auto pick = digits(i, sizes);
    VarGuess g = empty_guess(d);
    for (std::size_t k = 0; k < blocks.size(); ++k) apply(g, blocks[k], blocks[k].candidates[pick[k]]);
    return feasible(g, &results[i]);
  });
  if (!hit) return std::nullopt;
  return std::move(results[*hit]);
}

Certificate reach_certificate(const std::string& procedure, const ReachSearchResult& r) {
  Certificate c;
  c.procedure = procedure;
  c.t_c = r.guess.t_c;
  c.t_v = r.guess.t_v;
  c.assignment = nonzero_assignment(r.lp, r.solution);
  return c;
}

Query as_reachability(Query q) {
  q.objective = Objective::Reachability;
  return q;
}

std::string lp_note(const SearchStats& stats) { return std::to_string(stats.lps.load()) + " LPs solved"; }

// ---------------------------------------------------------------- commit abstraction

// MEC quotient in which every collapsed MEC gets an extra action moving to a
// fresh absorbing target whose reward vector is the value obtained by
// staying in the MEC.  All other states are non-targets.
struct CommitAbstraction {
  Mdp mdp;
  std::vector<std::optional<std::size_t>> origin;  // abstraction action -> original action
  std::vector<std::optional<std::size_t>> stay;    // abstraction action -> MEC it commits to
};

CommitAbstraction commit_abstraction(const QuotientMap& qm, const std::vector<std::vector<Rational>>& gains) {
  const Mdp& q = qm.quotient;
  const std::size_t d = q.dimensions();
  CommitAbstraction out;
  std::vector<StateInfo> states;
  for (std::size_t s = 0; s < q.num_states(); ++s) {
    StateInfo info = q.state(s);
    info.target = false;
    info.rewards.assign(d, Rational());
    states.push_back(std::move(info));
  }
  std::vector<ActionInfo> actions;
  for (std::size_t a = 0; a < q.num_actions(); ++a) {
    if (!qm.action_origin[a]) continue;
    actions.push_back(q.action(a));
    out.origin.push_back(qm.action_origin[a]);
    out.stay.push_back(std::nullopt);
  }
  for (std::size_t s = 0; s < q.num_states(); ++s) {
    auto m = qm.state_mec[s];
    if (!m) continue;
    std::size_t commit = states.size();
    states.push_back(StateInfo{q.state(s).name + "#commit", gains[*m], true});
    actions.push_back(ActionInfo{q.state(s).name + "#stay", s, dirac(commit)});
    out.origin.push_back(std::nullopt);
    out.stay.push_back(*m);
    actions.push_back(ActionInfo{q.state(s).name + "#commit#loop", commit, dirac(commit)});
    out.origin.push_back(std::nullopt);
    out.stay.push_back(std::nullopt);
  }
  out.mdp = Mdp(std::move(states), std::move(actions), q.initial());
  return out;
}

// Solves the abstraction as a reachability problem and turns the flow into a
// two-memory strategy on the original model.
Verdict solve_by_commit(const Mdp& mdp, const QuotientMap& qm, const std::vector<std::vector<Rational>>& gains,
                        const std::vector<StrategySpec>& inner, const Query& query, const Query& check,
                        const std::string& procedure, const SolverOptions& options) {
  auto abs = commit_abstraction(qm, gains);
  SearchStats stats;
  auto found = search_reach(abs.mdp, as_reachability(query), options, stats);
  Verdict v;
  if (!found) {
    v.status = Status::Unsat;
    v.note = procedure + ": no feasible guess; " + lp_note(stats);
    return v;
  }
  std::vector<Rational> y(mdp.num_actions());
  std::vector<Rational> stay(qm.mecs.mecs.size());
  for (std::size_t a = 0; a < abs.mdp.num_actions(); ++a) {
    auto var = found->lp.find(var_name("y", abs.mdp.action(a).name));
    if (!var) continue;
    const Rational& val = found->solution[*var];
    if (abs.origin[a]) y[*abs.origin[a]] = val;
    if (abs.stay[a]) stay[*abs.stay[a]] = val;
  }
  auto flow = lift_flow(mdp, qm.mecs, y, stay);
  auto strategy = two_memory_strategy(mdp, flow, qm.mecs, inner);
  auto law = evaluate(mdp, strategy, check.objective);
  if (!satisfies(law, check)) throw std::logic_error(procedure + ": synthesized strategy fails verification");
  v.status = Status::Sat;
  v.witness = std::move(strategy);
  v.certificate = reach_certificate(procedure, *found);
  v.note = lp_note(stats);
  return v;
}

// ---------------------------------------------------------------- reachability

Verdict reach_core(const Mdp& mdp, const Query& query, const SolverOptions& options, bool single) {
  require_valid(mdp, query);
  if (query.objective != Objective::Reachability) throw std::invalid_argument("reachability query expected");
  Mdp clean = cleanup(mdp);
  Attraction att = check_attraction(clean);
  if (att == Attraction::Neither) {
    if (single) {
      Query mean = query;
      mean.objective = Objective::MeanPayoff;
      Verdict v = decide_mean_single(reach_as_mean_payoff(clean), mean, options);
      if (v.witness && !satisfies(evaluate(mdp, *v.witness, Objective::Reachability), query)) {
        throw std::logic_error("reachability via mean payoff: witness fails verification");
      }
      v.note = "attraction: neither; " + v.note;
      return v;
    }
    auto qm = mec_quotient(clean);
    std::vector<std::vector<Rational>> gains;
    std::vector<StrategySpec> inner;
    for (const auto& mec : qm.mecs.mecs) {
      bool target = mec.states.size() == 1 && clean.is_target(mec.states.front());
      gains.push_back(target ? clean.state(mec.states.front()).rewards
                             : std::vector<Rational>(clean.dimensions(), Rational()));
      inner.push_back(stay_strategy(clean, mec));
    }
    Verdict v = solve_by_commit(clean, qm, gains, inner, query, query, "reach-multi", options);
    if (v.witness && !satisfies(evaluate(mdp, *v.witness, Objective::Reachability), query)) {
      throw std::logic_error("reach-multi: witness fails verification on the input model");
    }
    v.note = "attraction: neither; " + v.note;
    return v;
  }

  auto qm = mec_quotient(clean);
  SearchStats stats;
  auto found = search_reach(qm.quotient, query, options, stats);
  Verdict v;
  std::string procedure = single ? "reach-single" : "reach-multi";
  if (!found) {
    v.status = Status::Unsat;
    v.note = "attraction: " + to_string(att) + "; " + lp_note(stats);
    return v;
  }
  std::vector<Rational> y(clean.num_actions());
  for (std::size_t a = 0; a < qm.quotient.num_actions(); ++a) {
    if (!qm.action_origin[a]) continue;
    auto var = found->lp.find(var_name("y", qm.quotient.action(a).name));
    if (var) y[*qm.action_origin[a]] = found->solution[*var];
  }
  auto flow = lift_flow(clean, qm.mecs, y, {});
  auto strategy = strategy_from_reach_flow(clean, flow);
  if (!satisfies(evaluate(mdp, strategy, Objective::Reachability), query)) {
    throw std::logic_error(procedure + ": synthesized strategy fails verification");
  }
  v.status = Status::Sat;
  v.witness = std::move(strategy);
  v.certificate = reach_certificate(procedure, *found);
  v.note = "attraction: " + to_string(att) + "; " + lp_note(stats);
  return v;
}

// ---------------------------------------------------------------- mean payoff, several dimensions

struct MeanLayout {
  std::vector<std::size_t> y;
  std::vector<std::optional<std::size_t>> sw;    // per state, MEC states only
  std::vector<std::optional<std::size_t>> freq;  // per action, MEC actions only
  std::optional<std::size_t> slack;
};

MeanLayout mean_layout(LinearProgram& lp, const Mdp& mdp, const MecDecomposition& mecs) {
  MeanLayout l;
  l.sw.resize(mdp.num_states());
  l.freq.resize(mdp.num_actions());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) l.y.push_back(lp.add_variable(var_name("y", mdp.action(a).name)));
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mecs.state_to_mec[s]) l.sw[s] = lp.add_variable(var_name("z", mdp.state(s).name));
  }
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (mecs.action_to_mec[a]) l.freq[a] = lp.add_variable(var_name("f", mdp.action(a).name));
  }
  return l;
}

LinearProgram mean_lp(const Mdp& mdp, const MecDecomposition& mecs, const Query& query, const VarGuess& guess,
                      const MecClassification& cls, bool with_slack, MeanLayout* layout_out) {
  LinearProgram lp;
  MeanLayout l = mean_layout(lp, mdp, mecs);
  if (with_slack) {
    l.slack = lp.add_variable("slack");
    lp.add_constraint({{*l.slack, Rational(1)}}, Relation::Le, Rational(1), "slack-bound");
    lp.set_objective({{*l.slack, Rational(1)}}, Sense::Maximize);
  }

  std::vector<LinearExpr> flow(mdp.num_states());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    flow[mdp.action(a).state].emplace_back(l.y[a], Rational(1));
    for (const auto& [t, p] : mdp.action(a).successors) flow[t].emplace_back(l.y[a], -p);
  }
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (l.sw[s]) flow[s].emplace_back(*l.sw[s], Rational(1));
    lp.add_constraint(std::move(flow[s]), Relation::Eq, Rational(s == mdp.initial() ? 1 : 0),
                      "flow[" + mdp.state(s).name + "]");
  }

  std::vector<LinearExpr> balance(mdp.num_states());
  for (std::size_t i = 0; i < mecs.mecs.size(); ++i) {
    const Mec& mec = mecs.mecs[i];
    LinearExpr sw;
    for (std::size_t s : mec.states) sw.emplace_back(*l.sw[s], Rational(1));
    for (std::size_t a : mec.actions) {
      sw.emplace_back(*l.freq[a], Rational(-1));
      balance[mdp.action(a).state].emplace_back(*l.freq[a], Rational(1));
      for (const auto& [t, p] : mdp.action(a).successors) balance[t].emplace_back(*l.freq[a], -p);
    }
    lp.add_constraint(std::move(sw), Relation::Eq, Rational(), "switch[" + std::to_string(i) + "]");
  }
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (l.sw[s]) lp.add_constraint(std::move(balance[s]), Relation::Eq, Rational(), "balance[" + mdp.state(s).name + "]");
  }

  auto weighted = [&](const std::vector<std::size_t>& acts, std::size_t j, const Rational& shift) {
    LinearExpr e;
    for (std::size_t a : acts) e.emplace_back(*l.freq[a], mdp.reward(mdp.action(a).state, j) - shift);
    return e;
  };
  auto with_slack_term = [&](LinearExpr e, const Rational& coef) {
    if (l.slack) e.emplace_back(*l.slack, -coef);
    return e;
  };

  std::vector<std::size_t> all_mec_actions;
  for (const auto& mec : mecs.mecs) all_mec_actions.insert(all_mec_actions.end(), mec.actions.begin(), mec.actions.end());

  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    const auto& c = query.dims[j];
    if (c.e) {
      lp.add_constraint(with_slack_term(weighted(all_mec_actions, j, Rational()), Rational(1)), Relation::Ge, *c.e,
                        "mean" + std::to_string(j));
    }
    if (!c.cvar || !guess.t_c[j]) continue;
    const Rational& t = *guess.t_c[j];
    const Rational& p = c.cvar->p;
    const auto& classes = cls.per_dim[j];
    std::vector<std::size_t> below, below_or_at;
    for (std::size_t i = 0; i < mecs.mecs.size(); ++i) {
      const auto& acts = mecs.mecs[i].actions;
      MecClass k = classes[i];
      if (k == MecClass::Below) below.insert(below.end(), acts.begin(), acts.end());
      if (k != MecClass::Above) below_or_at.insert(below_or_at.end(), acts.begin(), acts.end());
      std::string label = "class" + std::to_string(j) + "[" + std::to_string(i) + "]";
      if (k != MecClass::Above) lp.add_constraint(weighted(acts, j, t), Relation::Le, Rational(), label);
      if (k != MecClass::Below) lp.add_constraint(weighted(acts, j, t), Relation::Ge, Rational(), label);
    }
    lp.add_constraint(with_slack_term(weighted(below, j, t), p), Relation::Ge, p * (c.cvar->c - t),
                      "cvar" + std::to_string(j));
    LinearExpr lo, hi;
    for (std::size_t a : below) lo.emplace_back(*l.freq[a], Rational(1));
    for (std::size_t a : below_or_at) hi.emplace_back(*l.freq[a], Rational(1));
    lp.add_constraint(std::move(lo), Relation::Le, p, "tail-upper" + std::to_string(j));
    lp.add_constraint(std::move(hi), Relation::Ge, p, "tail-lower" + std::to_string(j));
  }
  if (layout_out) *layout_out = l;
  return lp;
}

std::string class_symbol(MecClass c) {
  switch (c) {
    case MecClass::Below: return "<=";
    case MecClass::At: return "=";
    case MecClass::Above: return ">";
  }
  return "?";
}

// Candidate thresholds: all MEC gain extremes, refined in between when the
// extremes alone are not known to suffice.
std::vector<Rational> threshold_grid(std::vector<Rational> extremes, std::size_t subdivisions) {
  std::sort(extremes.begin(), extremes.end());
  extremes.erase(std::unique(extremes.begin(), extremes.end()), extremes.end());
  std::vector<Rational> out;
  for (std::size_t i = 0; i < extremes.size(); ++i) {
    out.push_back(extremes[i]);
    if (i + 1 == extremes.size()) break;
    Rational step = (extremes[i + 1] - extremes[i]) / Rational(static_cast<std::int64_t>(subdivisions + 1));
    for (std::size_t k = 1; k <= subdivisions; ++k) out.push_back(extremes[i] + step * Rational(static_cast<std::int64_t>(k)));
  }
  return out;
}

struct DimOption {
  Rational t;
  std::vector<MecClass> classes;
};

std::vector<DimOption> dim_options(const std::vector<Rational>& grid, const std::vector<Rational>& lo,
                                   const std::vector<Rational>& hi) {
  std::vector<DimOption> out;
  const std::size_t k = lo.size();
  for (const auto& t : grid) {
    std::vector<std::vector<MecClass>> allowed(k);
    for (std::size_t i = 0; i < k; ++i) {
      if (lo[i] == hi[i]) {
        allowed[i] = {lo[i] < t ? MecClass::Below : lo[i] == t ? MecClass::At : MecClass::Above};
        continue;
      }
      if (lo[i] <= t) allowed[i].push_back(MecClass::Below);
      if (lo[i] <= t && t <= hi[i]) allowed[i].push_back(MecClass::At);
      if (hi[i] >= t) allowed[i].push_back(MecClass::Above);
    }
    std::vector<std::size_t> sizes;
    for (const auto& a : allowed) sizes.push_back(a.size());
    const std::size_t n = product_size(sizes);
    for (std::size_t idx = 0; idx < n; ++idx) {
      auto pick = digits(idx, sizes);
      DimOption o{t, {}};
      for (std::size_t i = 0; i < k; ++i) o.classes.push_back(allowed[i][pick[i]]);
      out.push_back(std::move(o));
    }
  }
  return out;
}

}  // namespace

std::string to_string(MecClass c) { return class_symbol(c); }

Mdp reach_as_mean_payoff(const Mdp& mdp) {
  auto states = mdp.states();
  for (auto& s : states) {
    if (!s.target) std::fill(s.rewards.begin(), s.rewards.end(), Rational());
  }
  return make_targets_absorbing(Mdp(std::move(states), mdp.actions(), mdp.initial()));
}

LinearProgram build_reach_lp_multi(const Mdp& mdp, const Query& query, const VarGuess& guess) {
  const std::size_t d = query.dimensions();
  if (guess.t_c.size() != d || guess.t_v.size() != d) throw std::invalid_argument("build_reach_lp: guess size mismatch");
  LinearProgram lp;
  ReachLayout l;
  l.x.resize(mdp.num_states());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) l.y.push_back(lp.add_variable(var_name("y", mdp.action(a).name)));
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_target(s)) l.x[s] = lp.add_variable(var_name("x", mdp.state(s).name));
  }
  std::vector<LinearExpr> flow(mdp.num_states());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    flow[mdp.action(a).state].emplace_back(l.y[a], Rational(1));
    for (const auto& [t, p] : mdp.action(a).successors) flow[t].emplace_back(l.y[a], -p);
  }
  LinearExpr settle;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (l.x[s]) {
      flow[s].emplace_back(*l.x[s], Rational(1));
      settle.emplace_back(*l.x[s], Rational(1));
    }
    lp.add_constraint(std::move(flow[s]), Relation::Eq, Rational(s == mdp.initial() ? 1 : 0),
                      "flow[" + mdp.state(s).name + "]");
  }
  lp.add_constraint(std::move(settle), Relation::Eq, Rational(1), "settle");

  for (std::size_t j = 0; j < d; ++j) {
    const auto& c = query.dims[j];
    if (c.e) {
      LinearExpr e;
      for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        if (l.x[s]) e.emplace_back(*l.x[s], mdp.reward(s, j));
      }
      lp.add_constraint(std::move(e), Relation::Ge, *c.e, "mean" + std::to_string(j));
    }
    const auto& tc = guess.t_c[j];
    const auto& tv = guess.t_v[j];
    if (c.var && tv && *tv < c.var->v) throw std::invalid_argument("build_reach_lp: VaR guess below the bound");
    bool use_c = c.cvar && tc;
    bool use_v = c.var && tv;
    if (use_c && use_v && c.cvar->p == c.var->q && *tc == *tv) {
      add_tail_block(lp, mdp, l, j, "xc", c.cvar->p, *tc, c.cvar->c);
      continue;
    }
    if (use_c) add_tail_block(lp, mdp, l, j, "xc", c.cvar->p, *tc, c.cvar->c);
    if (use_v) add_tail_block(lp, mdp, l, j, "xv", c.var->q, *tv, std::nullopt);
  }
  return lp;
}

LinearProgram build_reach_lp(const Mdp& mdp, const Query& query, const std::optional<Rational>& t_c,
                             const std::optional<Rational>& t_v) {
  if (query.dimensions() != 1) throw std::invalid_argument("build_reach_lp: single-dimension query expected");
  VarGuess g{{t_c}, {t_v}};
  return build_reach_lp_multi(mdp, query, g);
}

GainOptimum mec_gain_optimum(const Mdp& mdp, const Mec& mec, const std::vector<Rational>& weights, Sense sense) {
  LinearProgram lp;
  std::vector<std::size_t> var(mdp.num_actions());
  for (std::size_t a : mec.actions) var[a] = lp.add_variable(var_name("f", mdp.action(a).name));
  std::vector<LinearExpr> balance(mdp.num_states());
  LinearExpr total, objective;
  for (std::size_t a : mec.actions) {
    std::size_t s = mdp.action(a).state;
    balance[s].emplace_back(var[a], Rational(1));
    for (const auto& [t, p] : mdp.action(a).successors) balance[t].emplace_back(var[a], -p);
    total.emplace_back(var[a], Rational(1));
    Rational w;
    for (std::size_t j = 0; j < weights.size(); ++j) w += weights[j] * mdp.reward(s, j);
    objective.emplace_back(var[a], w);
  }
  for (std::size_t s : mec.states) lp.add_constraint(std::move(balance[s]), Relation::Eq, Rational());
  lp.add_constraint(std::move(total), Relation::Eq, Rational(1));
  lp.set_objective(std::move(objective), sense);
  auto res = solve_optimize(lp);
  if (res.status != LpStatus::Optimal) throw std::logic_error("mec_gain: LP not optimal");
  GainOptimum out;
  out.value = res.objective;
  out.freq.assign(mdp.num_actions(), Rational());
  for (std::size_t a : mec.actions) out.freq[a] = res.solution[var[a]];
  return out;
}

namespace {
std::vector<Rational> unit(std::size_t d, std::size_t j) {
  std::vector<Rational> w(d);
  w[j] = Rational(1);
  return w;
}
}  // namespace

Rational mec_gain(const Mdp& mdp, const Mec& mec, std::size_t j) {
  return mec_gain_optimum(mdp, mec, unit(mdp.dimensions(), j), Sense::Maximize).value;
}

Rational mec_min_gain(const Mdp& mdp, const Mec& mec, std::size_t j) {
  return mec_gain_optimum(mdp, mec, unit(mdp.dimensions(), j), Sense::Minimize).value;
}

LinearProgram build_mean_lp_multi(const Mdp& mdp, const MecDecomposition& mecs, const Query& query,
                                  const VarGuess& guess, const MecClassification& cls) {
  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    if (query.dims[j].cvar && guess.t_c[j] && cls.per_dim[j].size() != mecs.mecs.size()) {
      throw std::invalid_argument("build_mean_lp: classification missing for a CVaR dimension");
    }
  }
  return mean_lp(mdp, mecs, query, guess, cls, false, nullptr);
}

Verdict decide_reach_single(const Mdp& mdp, const Query& query, const SolverOptions& options) {
  if (active_dims(query).size() > 1) throw std::invalid_argument("decide_reach_single: one constrained dimension expected");
  return reach_core(mdp, query, options, true);
}

Verdict decide_reach_multi(const Mdp& mdp, const Query& query, const SolverOptions& options) {
  return reach_core(mdp, query, options, false);
}

Verdict decide_mean_single(const Mdp& input, const Query& query, const SolverOptions& options) {
  Mdp mdp = without_targets(input);
  require_valid(mdp, query);
  if (query.objective != Objective::MeanPayoff) throw std::invalid_argument("mean-payoff query expected");
  auto active = active_dims(query);
  if (active.size() > 1) throw std::invalid_argument("decide_mean_single: one constrained dimension expected");
  const std::size_t d = mdp.dimensions();
  if (active.empty()) {
    Verdict v;
    v.status = Status::Sat;
    v.witness = any_strategy(mdp);
    v.note = "no constraints";
    return v;
  }
  const std::size_t j = active.front();
  auto qm = mec_quotient(mdp);
  std::vector<std::vector<Rational>> gains;
  std::vector<StrategySpec> inner;
  for (const auto& mec : qm.mecs.mecs) {
    auto opt = mec_gain_optimum(mdp, mec, unit(d, j), Sense::Maximize);
    std::vector<Rational> g(d);
    g[j] = opt.value;
    gains.push_back(std::move(g));
    auto s = mec_constant_strategy(mdp, mec, opt.freq);
    if (!s) throw std::logic_error("decide_mean_single: optimal MEC strategy is not constant");
    inner.push_back(std::move(*s));
  }
  return solve_by_commit(mdp, qm, gains, inner, query, query, "mean-single", options);
}

Verdict decide_mean_multi(const Mdp& input, const Query& query, const SolverOptions& options) {
  Mdp mdp = without_targets(input);
  require_valid(mdp, query);
  if (query.objective != Objective::MeanPayoff) throw std::invalid_argument("mean-payoff query expected");
  if (query.has_var()) throw std::invalid_argument("VaR constraints are not supported for multi-dimensional mean payoff");
  const std::size_t d = mdp.dimensions();
  auto mecs = mec_decomposition(mdp);
  const std::size_t k = mecs.mecs.size();

  std::vector<std::size_t> cvar_dims;
  for (std::size_t j = 0; j < d; ++j) {
    if (query.dims[j].cvar) cvar_dims.push_back(j);
  }
  std::vector<std::vector<Rational>> lo(d), hi(d);
  bool all_constant = true;
  for (std::size_t j : cvar_dims) {
    for (const auto& mec : mecs.mecs) {
      lo[j].push_back(mec_min_gain(mdp, mec, j));
      hi[j].push_back(mec_gain(mdp, mec, j));
      all_constant = all_constant && lo[j].back() == hi[j].back();
    }
  }
  const bool sufficient = active_dims(query).size() <= 1 || cvar_dims.empty() || all_constant;

  // Options per CVaR dimension, each screened by an LP with that block alone.
  SearchStats stats;
  std::vector<std::vector<DimOption>> per_dim;
  auto block_guess = [&](std::size_t j, const DimOption& o, VarGuess& g, MecClassification& c) {
    g.t_c[j] = o.t;
    c.per_dim[j] = o.classes;
  };
  auto blank = [&] {
    MecClassification c;
    c.per_dim.assign(d, {});
    return c;
  };
  for (std::size_t j : cvar_dims) {
    std::vector<Rational> extremes = lo[j];
    extremes.insert(extremes.end(), hi[j].begin(), hi[j].end());
    auto grid = threshold_grid(extremes, sufficient ? 0 : options.grid_subdivisions);
    auto opts = dim_options(grid, lo[j], hi[j]);
    if (cvar_dims.size() >= 2) {
      std::vector<char> keep(opts.size(), 0);
      first_success(opts.size(), options.threads, [&](std::size_t i) {
        VarGuess g = empty_guess(d);
        auto c = blank();
        block_guess(j, opts[i], g, c);
        ++stats.lps;
        keep[i] = solve_feasibility(mean_lp(mdp, mecs, query, g, c, false, nullptr)).feasible() ? 1 : 0;
        return false;
      });
      std::vector<DimOption> kept;
      for (std::size_t i = 0; i < opts.size(); ++i) {
        if (keep[i]) kept.push_back(std::move(opts[i]));
      }
      opts = std::move(kept);
    }
    per_dim.push_back(std::move(opts));
  }

  std::vector<std::size_t> sizes;
  for (const auto& o : per_dim) sizes.push_back(o.size());
  const std::size_t count = product_size(sizes);

  struct Found {
    VarGuess guess;
    MecClassification cls;
    LinearProgram lp;
    LpSolution solution;
    StrategySpec strategy;
  };
  std::vector<std::optional<Found>> results(count);
  std::atomic<bool> unverified{false};

  auto build_strategy = [&](const MeanLayout& l, const LpSolution& sol, const std::vector<Rational>* eps) {
    FlowSolution flow;
    flow.y.resize(mdp.num_actions());
    flow.x.assign(mdp.num_states(), Rational());
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) flow.y[a] = sol[l.y[a]];
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      if (l.sw[s]) flow.x[s] = sol[*l.sw[s]];
    }
    std::vector<StrategySpec> inner;
    for (const auto& mec : mecs.mecs) {
      std::vector<Rational> f(mdp.num_actions());
      Rational mass;
      for (std::size_t a : mec.actions) {
        f[a] = sol[*l.freq[a]];
        mass += f[a];
      }
      if (mass.is_zero()) {
        inner.push_back(stay_strategy(mdp, mec));
        continue;
      }
      if (eps) {
        const Rational& e = eps->front();
        auto u = uniform_frequencies(mdp, mec);
        for (std::size_t a : mec.actions) f[a] = (Rational(1) - e) * f[a] + e * mass * u[a];
      }
      auto s = mec_constant_strategy(mdp, mec, f);
      if (!s) return std::optional<StrategySpec>();
      inner.push_back(std::move(*s));
    }
    return std::optional<StrategySpec>(two_memory_strategy(mdp, flow, mecs, inner));
  };
  auto verified = [&](const std::optional<StrategySpec>& s) {
    return s && satisfies(evaluate(mdp, *s, Objective::MeanPayoff), query);
  };

  auto hit = first_success(count, options.threads, [&](std::size_t idx) {
    auto pick = digits(idx, sizes);
    VarGuess g = empty_guess(d);
    auto c = blank();
    for (std::size_t n = 0; n < cvar_dims.size(); ++n) block_guess(cvar_dims[n], per_dim[n][pick[n]], g, c);
    MeanLayout l;
    auto lp = mean_lp(mdp, mecs, query, g, c, false, &l);
    ++stats.lps;
    auto res = solve_feasibility(lp);
    if (!res.feasible()) return false;
    auto strategy = build_strategy(l, res.solution, nullptr);
    if (!verified(strategy)) {
      // Re-solve with maximal slack and mix in uniform play inside each MEC.
      MeanLayout ls;
      auto slack_lp = mean_lp(mdp, mecs, query, g, c, true, &ls);
      ++stats.lps;
      auto sres = solve_optimize(slack_lp);
      strategy.reset();
      if (sres.feasible()) {
        for (int e = 1; e <= 48 && !strategy; ++e) {
          std::vector<Rational> eps{Rational(1) / Rational(std::int64_t{1} << std::min(e, 62))};
          auto s = build_strategy(ls, sres.solution, &eps);
          if (verified(s)) strategy = std::move(s);
        }
      }
      if (!strategy) {
        unverified = true;
        return false;
      }
      lp = std::move(slack_lp);
      res.solution = std::move(sres.solution);
    }
    results[idx] = Found{g, c, std::move(lp), std::move(res.solution), std::move(*strategy)};
    return true;
  });

  Verdict v;
  if (hit) {
    auto& f = *results[*hit];
    v.status = Status::Sat;
    v.witness = std::move(f.strategy);
    Certificate cert;
    cert.procedure = "mean-multi";
    cert.t_c = f.guess.t_c;
    cert.t_v = f.guess.t_v;
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::string> row;
      for (auto c : f.cls.per_dim[j]) row.push_back(class_symbol(c));
      cert.classification.push_back(std::move(row));
    }
    cert.assignment = nonzero_assignment(f.lp, f.solution);
    v.certificate = std::move(cert);
    v.note = lp_note(stats);
    return v;
  }
  if (unverified) {
    v.status = Status::Unknown;
    v.note = "feasible LP without a verified witness; " + lp_note(stats);
  } else if (sufficient) {
    v.status = Status::Unsat;
    v.note = lp_note(stats);
  } else {
    v.status = Status::Unknown;
    v.note = "no feasible guess on the threshold grid (" + std::to_string(k) + " MECs); " + lp_note(stats);
  }
  return v;
}

Verdict decide(const Mdp& mdp, const Query& query, const SolverOptions& options) {
  require_valid(mdp, query);
  auto active = active_dims(query);
  if (active.empty()) {
    Verdict v;
    v.status = Status::Sat;
    v.witness = any_strategy(mdp);
    v.note = "no constraints";
    return v;
  }
  if (query.objective == Objective::Reachability) {
    return active.size() == 1 ? decide_reach_single(mdp, query, options) : decide_reach_multi(mdp, query, options);
  }
  if (active.size() == 1) return decide_mean_single(mdp, query, options);
  return decide_mean_multi(mdp, query, options);
}

}  // namespace riskmdp
