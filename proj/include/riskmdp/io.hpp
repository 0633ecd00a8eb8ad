#pragma once

#include <string>

#include <json.hpp>

#include "riskmdp/gadgets.hpp"
#include "riskmdp/model.hpp"

namespace riskmdp {

using Json = nlohmann::json;

/// Accepts strings "a", "a/b", decimal strings and JSON integers; JSON
/// floats are rejected.  Throws std::invalid_argument.
Rational rational_from_json(const Json& j);
Json to_json(const Rational& r);

/// Model: {"states":[{"name","rewards":[..],"target"}],
///         "actions":[{"name","from","transitions":{state: prob}}], "initial"}.
/// Structural problems (unknown names, wrong types) throw
/// std::invalid_argument; semantic checks are left to validate().
Mdp mdp_from_json(const Json& j);
Json to_json(const Mdp& mdp);

/// Query: {"objective":"reach"|"mean", "constraints":[{"dim", "e", "cvar":{"p","c"}, "var":{"q","v"}}]}.
/// "dim" is 0-based; dimensions without constraints may be omitted.
Query query_from_json(const Json& j, std::size_t dimensions);
Json to_json(const Query& query);

/// Strategy: {"memory":[..], "initial_memory":{label: prob},
///            "next_move":[{"state","memory","actions":{name: prob}}],
///            "memory_update":[{"action","successor","memory","to":{label: prob}}]}.
StrategySpec strategy_from_json(const Json& j, const Mdp& mdp);
Json to_json(const StrategySpec& strategy, const Mdp& mdp);

Json to_json(const Certificate& certificate);
Json to_json(const Verdict& verdict, const Mdp& mdp);

/// {"model": .., "query": ..} as written by the gadget generator.
Json to_json(const Example& example);
Example example_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// Canonical text: sorted keys, two-space indentation, trailing newline.
std::string dump(const Json& j);

}  // namespace riskmdp
