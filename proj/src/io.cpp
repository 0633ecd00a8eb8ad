#include "riskmdp/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace riskmdp {
namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw std::invalid_argument(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

std::string text(const Json& j, const char* what) {
  if (!j.is_string()) throw std::invalid_argument(std::string(what) + " must be a string");
  return j.get<std::string>();
}

using NameIndex = std::unordered_map<std::string, std::size_t>;

std::size_t lookup(const NameIndex& index, const std::string& name, const char* what) {
  auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument(std::string("unknown ") + what + " '" + name + "'");
  return it->second;
}

Distribution distribution_from_json(const Json& j, const NameIndex& index, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " distribution must be an object");
  Distribution d;
  for (const auto& [name, p] : j.items()) d.emplace_back(lookup(index, name, what), rational_from_json(p));
  return canonical(std::move(d));
}

template <class NameOf>
Json distribution_to_json(const Distribution& d, NameOf name_of) {
  Json out = Json::object();
  for (const auto& [i, p] : d) out[name_of(i)] = to_json(p);
  return out;
}

NameIndex state_index(const Mdp& mdp) {
  NameIndex idx;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) idx.emplace(mdp.state(s).name, s);
  return idx;
}

NameIndex action_index(const Mdp& mdp) {
  NameIndex idx;
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) idx.emplace(mdp.action(a).name, a);
  return idx;
}

std::string objective_name(Objective o) { return o == Objective::Reachability ? "reach" : "mean"; }

}  // namespace

Rational rational_from_json(const Json& j) {
  if (j.is_number_integer()) {
    if (j.is_number_unsigned()) return Rational(Rational::parse(std::to_string(j.get<std::uint64_t>())));
    return Rational(j.get<std::int64_t>());
  }
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  if (j.is_number_float()) throw std::invalid_argument("floating-point numbers are not accepted; use \"a/b\" strings");
  throw std::invalid_argument("expected a rational number");
}

Json to_json(const Rational& r) { return r.str(); }

Mdp mdp_from_json(const Json& j) {
  std::vector<StateInfo> states;
  NameIndex sidx;
  for (const auto& s : field(j, "states")) {
    StateInfo info;
    info.name = text(field(s, "name"), "state name");
    if (s.contains("rewards")) {
      for (const auto& r : s.at("rewards")) info.rewards.push_back(rational_from_json(r));
    }
    if (s.contains("target")) {
      if (!s.at("target").is_boolean()) throw std::invalid_argument("target must be a boolean");
      info.target = s.at("target").get<bool>();
    }
    sidx.emplace(info.name, states.size());
    states.push_back(std::move(info));
  }
  std::vector<ActionInfo> actions;
  for (const auto& a : field(j, "actions")) {
    ActionInfo info;
    info.name = text(field(a, "name"), "action name");
    info.state = lookup(sidx, text(field(a, "from"), "action source"), "state");
    info.successors = distribution_from_json(field(a, "transitions"), sidx, "state");
    actions.push_back(std::move(info));
  }
  std::size_t initial = lookup(sidx, text(field(j, "initial"), "initial state"), "state");
  return Mdp(std::move(states), std::move(actions), initial);
}

Json to_json(const Mdp& mdp) {
  Json states = Json::array();
  for (const auto& s : mdp.states()) {
    Json r = Json::array();
    for (const auto& v : s.rewards) r.push_back(to_json(v));
    states.push_back({{"name", s.name}, {"rewards", r}, {"target", s.target}});
  }
  Json actions = Json::array();
  for (const auto& a : mdp.actions()) {
    actions.push_back({{"name", a.name},
                       {"from", mdp.state(a.state).name},
                       {"transitions", distribution_to_json(a.successors, [&](std::size_t s) { return mdp.state(s).name; })}});
  }
  return {{"states", states}, {"actions", actions}, {"initial", mdp.state(mdp.initial()).name}};
}

Query query_from_json(const Json& j, std::size_t dimensions) {
  Query q;
  std::string objective = text(field(j, "objective"), "objective");
  if (objective == "reach" || objective == "reachability") {
    q.objective = Objective::Reachability;
  } else if (objective == "mean" || objective == "mean-payoff") {
    q.objective = Objective::MeanPayoff;
  } else {
    throw std::invalid_argument("unknown objective '" + objective + "'");
  }
  q.dims.resize(dimensions);
  for (const auto& c : field(j, "constraints")) {
    const Json& dim = field(c, "dim");
    if (!dim.is_number_integer() || dim.get<std::int64_t>() < 0 ||
        static_cast<std::size_t>(dim.get<std::int64_t>()) >= dimensions) {
      throw std::invalid_argument("constraint dimension out of range");
    }
    auto& dc = q.dims[dim.get<std::size_t>()];
    if (c.contains("e")) dc.e = rational_from_json(c.at("e"));
    if (c.contains("cvar")) {
      dc.cvar = CvarBound{rational_from_json(field(c.at("cvar"), "p")), rational_from_json(field(c.at("cvar"), "c"))};
    }
    if (c.contains("var")) {
      dc.var = VarBound{rational_from_json(field(c.at("var"), "q")), rational_from_json(field(c.at("var"), "v"))};
    }
  }
  validate_query(q, dimensions);
  return q;
}

Json to_json(const Query& query) {
  Json constraints = Json::array();
  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    const auto& c = query.dims[j];
    if (c.empty()) continue;
    Json o = {{"dim", j}};
    if (c.e) o["e"] = to_json(*c.e);
    if (c.cvar) o["cvar"] = {{"p", to_json(c.cvar->p)}, {"c", to_json(c.cvar->c)}};
    if (c.var) o["var"] = {{"q", to_json(c.var->q)}, {"v", to_json(c.var->v)}};
    constraints.push_back(o);
  }
  return {{"objective", objective_name(query.objective)}, {"constraints", constraints}};
}

StrategySpec strategy_from_json(const Json& j, const Mdp& mdp) {
  StrategySpec s;
  s.num_states = mdp.num_states();
  NameIndex midx;
  for (const auto& m : field(j, "memory")) {
    midx.emplace(text(m, "memory label"), s.memory.size());
    s.memory.push_back(m.get<std::string>());
  }
  if (s.memory.empty()) throw std::invalid_argument("strategy needs at least one memory element");
  s.initial_memory = distribution_from_json(field(j, "initial_memory"), midx, "memory element");
  s.next_move.assign(mdp.num_states() * s.memory.size(), Distribution{});
  auto sidx = state_index(mdp);
  auto aidx = action_index(mdp);
  for (const auto& e : field(j, "next_move")) {
    std::size_t st = lookup(sidx, text(field(e, "state"), "state"), "state");
    std::size_t m = lookup(midx, text(field(e, "memory"), "memory"), "memory element");
    s.move(st, m) = distribution_from_json(field(e, "actions"), aidx, "action");
  }
  if (j.contains("memory_update")) {
    for (const auto& e : j.at("memory_update")) {
      std::size_t a = lookup(aidx, text(field(e, "action"), "action"), "action");
      std::size_t t = lookup(sidx, text(field(e, "successor"), "successor"), "state");
      std::size_t m = lookup(midx, text(field(e, "memory"), "memory"), "memory element");
      s.memory_update[{a, t, m}] = distribution_from_json(field(e, "to"), midx, "memory element");
    }
  }
  return s;
}

Json to_json(const StrategySpec& s, const Mdp& mdp) {
  auto mem_name = [&](std::size_t m) { return s.memory[m]; };
  auto act_name = [&](std::size_t a) { return mdp.action(a).name; };
  Json moves = Json::array();
  for (std::size_t st = 0; st < s.num_states; ++st) {
    for (std::size_t m = 0; m < s.memory.size(); ++m) {
      if (s.move(st, m).empty()) continue;
      moves.push_back({{"state", mdp.state(st).name},
                       {"memory", s.memory[m]},
                       {"actions", distribution_to_json(s.move(st, m), act_name)}});
    }
  }
  Json updates = Json::array();
  for (const auto& [key, d] : s.memory_update) {
    const auto& [a, t, m] = key;
    updates.push_back({{"action", mdp.action(a).name},
                       {"successor", mdp.state(t).name},
                       {"memory", s.memory[m]},
                       {"to", distribution_to_json(d, mem_name)}});
  }
  return {{"memory", s.memory},
          {"initial_memory", distribution_to_json(s.initial_memory, mem_name)},
          {"next_move", moves},
          {"memory_update", updates}};
}

Json to_json(const Certificate& c) {
  auto guesses = [](const std::vector<std::optional<Rational>>& g) {
    Json out = Json::array();
    for (const auto& v : g) out.push_back(v ? to_json(*v) : Json(nullptr));
    return out;
  };
  Json assignment = Json::object();
  for (const auto& [name, value] : c.assignment) assignment[name] = to_json(value);
  Json out = {{"procedure", c.procedure}, {"t_c", guesses(c.t_c)}, {"t_v", guesses(c.t_v)}, {"assignment", assignment}};
  if (!c.classification.empty()) out["classification"] = c.classification;
  return out;
}

Json to_json(const Verdict& v, const Mdp& mdp) {
  Json out = {{"status", to_string(v.status)}, {"note", v.note}};
  if (v.witness) out["witness"] = to_json(*v.witness, mdp);
  if (v.certificate) out["certificate"] = to_json(*v.certificate);
  return out;
}

Json to_json(const Example& e) { return {{"model", to_json(e.mdp)}, {"query", to_json(e.query)}}; }

Example example_from_json(const Json& j) {
  Mdp mdp = mdp_from_json(field(j, "model"));
  Query q = query_from_json(field(j, "query"), mdp.dimensions());
  return {std::move(mdp), std::move(q)};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace riskmdp
