#include "riskmdp/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace riskmdp {

std::vector<std::vector<std::size_t>> strongly_connected(const Adjacency& graph) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = graph.size();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0 && index[v] == kUnvisited) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (edge < graph[v].size()) {
        std::size_t w = graph[v][edge++];
        if (index[w] == kUnvisited) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return out;
}

namespace {

Adjacency chain_graph(const MarkovChain& mc) {
  Adjacency g(mc.num_states());
  for (std::size_t s = 0; s < mc.num_states(); ++s) {
    for (const auto& [t, p] : mc.row(s)) g[s].push_back(t);
  }
  return g;
}

}  // namespace

std::vector<std::vector<std::size_t>> sccs(const MarkovChain& mc) { return strongly_connected(chain_graph(mc)); }

std::vector<std::vector<std::size_t>> bsccs(const MarkovChain& mc) {
  auto comps = sccs(mc);
  std::vector<std::size_t> comp_of(mc.num_states());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t s : comps[c]) comp_of[s] = c;
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    bool bottom = true;
    for (std::size_t s : comps[c]) {
      for (const auto& [t, p] : mc.row(s)) {
        if (comp_of[t] != c) bottom = false;
      }
    }
    if (bottom) out.push_back(comps[c]);
  }
  return out;
}

MecDecomposition mec_decomposition(const Mdp& mdp) {
  const std::size_t n = mdp.num_states();
  std::vector<bool> action_alive(mdp.num_actions(), true);
  std::vector<bool> state_alive(n, true);
  std::vector<std::size_t> comp_of(n, 0);
  std::vector<std::vector<std::size_t>> comps;

  // Repeatedly split by SCCs and drop actions that can leave their component.
  bool changed = true;
  while (changed) {
    changed = false;
    Adjacency g(n);
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (!action_alive[a]) continue;
      std::size_t s = mdp.action(a).state;
      for (const auto& [t, p] : mdp.action(a).successors) g[s].push_back(t);
    }
    comps = strongly_connected(g);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (std::size_t s : comps[c]) comp_of[s] = c;
    }
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (!action_alive[a]) continue;
      std::size_t s = mdp.action(a).state;
      bool stays = state_alive[s];
      for (const auto& [t, p] : mdp.action(a).successors) {
        if (!state_alive[t] || comp_of[t] != comp_of[s]) stays = false;
      }
      if (!stays) {
        action_alive[a] = false;
        changed = true;
      }
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (!state_alive[s]) continue;
      bool any = std::any_of(mdp.available(s).begin(), mdp.available(s).end(),
                             [&](std::size_t a) { return action_alive[a]; });
      if (!any) {
        state_alive[s] = false;
        changed = true;
      }
    }
  }

  MecDecomposition dec;
  dec.state_to_mec.assign(n, std::nullopt);
  dec.action_to_mec.assign(mdp.num_actions(), std::nullopt);
  std::vector<std::optional<std::size_t>> mec_of_comp(comps.size());
  for (std::size_t s = 0; s < n; ++s) {
    if (!state_alive[s]) continue;
    auto& slot = mec_of_comp[comp_of[s]];
    if (!slot) {
      slot = dec.mecs.size();
      dec.mecs.emplace_back();
    }
    dec.mecs[*slot].states.push_back(s);
    dec.state_to_mec[s] = *slot;
  }
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (!action_alive[a]) continue;
    std::size_t m = *dec.state_to_mec[mdp.action(a).state];
    dec.mecs[m].actions.push_back(a);
    dec.action_to_mec[a] = m;
  }
  return dec;
}

QuotientMap mec_quotient(const Mdp& mdp) {
  QuotientMap out;
  out.mecs = mec_decomposition(mdp);
  const auto& dec = out.mecs;
  const std::size_t n = mdp.num_states();

  std::vector<std::size_t> representative(dec.mecs.size());
  for (std::size_t m = 0; m < dec.mecs.size(); ++m) {
    const auto& members = dec.mecs[m].states;
    representative[m] = *std::min_element(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return mdp.state(a).name < mdp.state(b).name;
    });
  }

  out.lift.assign(n, 0);
  std::vector<std::optional<std::size_t>> mec_slot(dec.mecs.size());
  std::vector<StateInfo> states;
  for (std::size_t s = 0; s < n; ++s) {
    auto m = dec.state_to_mec[s];
    if (!m) {
      out.lift[s] = states.size();
      states.push_back(mdp.state(s));
      out.state_mec.push_back(std::nullopt);
      continue;
    }
    if (!mec_slot[*m]) {
      mec_slot[*m] = states.size();
      StateInfo info = mdp.state(representative[*m]);
      for (std::size_t t : dec.mecs[*m].states) info.target = info.target || mdp.is_target(t);
      states.push_back(std::move(info));
      out.state_mec.push_back(*m);
    }
    out.lift[s] = *mec_slot[*m];
  }

  std::vector<ActionInfo> actions;
  std::vector<bool> has_action(states.size(), false);
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    if (dec.action_to_mec[a]) continue;
    const auto& act = mdp.action(a);
    Distribution succ;
    for (const auto& [t, p] : act.successors) succ.emplace_back(out.lift[t], p);
    std::size_t from = out.lift[act.state];
    actions.push_back(ActionInfo{act.name, from, canonical(std::move(succ))});
    out.action_origin.push_back(a);
    has_action[from] = true;
  }
  for (std::size_t q = 0; q < states.size(); ++q) {
    if (has_action[q]) continue;
    actions.push_back(ActionInfo{states[q].name + "#loop", q, dirac(q)});
    out.action_origin.push_back(std::nullopt);
  }
  std::size_t initial = out.lift[mdp.initial()];
  out.quotient = Mdp(std::move(states), std::move(actions), initial);
  return out;
}

std::vector<bool> can_reach_targets(const Mdp& mdp) {
  const std::size_t n = mdp.num_states();
  Adjacency reverse(n);
  for (const auto& act : mdp.actions()) {
    for (const auto& [t, p] : act.successors) reverse[t].push_back(act.state);
  }
  std::vector<bool> reach(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (mdp.is_target(s)) {
      reach[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    std::size_t t = queue.front();
    queue.pop_front();
    for (std::size_t s : reverse[t]) {
      if (!reach[s]) {
        reach[s] = true;
        queue.push_back(s);
      }
    }
  }
  return reach;
}

Mdp cleanup(const Mdp& mdp) {
  auto dec = mec_decomposition(mdp);
  auto reach = can_reach_targets(mdp);
  std::vector<StateInfo> states = mdp.states();
  std::vector<ActionInfo> actions = mdp.actions();
  for (const auto& mec : dec.mecs) {
    bool reaches = std::any_of(mec.states.begin(), mec.states.end(), [&](std::size_t s) { return reach[s]; });
    if (reaches) continue;
    for (std::size_t s : mec.states) {
      states[s].target = true;
      for (auto& r : states[s].rewards) r = Rational();
      for (std::size_t a : mdp.available(s)) actions[a].successors = dirac(s);
    }
  }
  return Mdp(std::move(states), std::move(actions), mdp.initial());
}

std::string to_string(Attraction a) {
  switch (a) {
    case Attraction::A1:
      return "A1";
    case Attraction::A2:
      return "A2";
    case Attraction::Both:
      return "both";
    case Attraction::Neither:
      return "neither";
  }
  return "neither";
}

Attraction check_attraction(const Mdp& mdp) {
  auto dec = mec_decomposition(mdp);
  bool a1 = std::all_of(dec.mecs.begin(), dec.mecs.end(), [&](const Mec& m) {
    return std::any_of(m.states.begin(), m.states.end(), [&](std::size_t s) { return mdp.is_target(s); });
  });
  bool a2 = true;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.is_target(s)) continue;
    for (const auto& r : mdp.state(s).rewards) {
      if (r.sign() < 0) a2 = false;
    }
  }
  if (a1 && a2) return Attraction::Both;
  if (a1) return Attraction::A1;
  if (a2) return Attraction::A2;
  return Attraction::Neither;
}

}  // namespace riskmdp
