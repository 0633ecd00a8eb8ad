#include "riskmdp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "riskmdp/gadgets.hpp"
#include "riskmdp/graph.hpp"
#include "riskmdp/io.hpp"
#include "riskmdp/mc_solver.hpp"
#include "riskmdp/mdp_solver.hpp"
#include "riskmdp/simulation.hpp"
#include "riskmdp/synthesis.hpp"

namespace riskmdp {
namespace {

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path, std::istream& in) {
  std::ostringstream buf;
  if (path == "-") {
    buf << in.rdbuf();
    return buf.str();
  }
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open '" + path + "'");
  buf << f.rdbuf();
  return buf.str();
}

Json parse_json(const std::string& path, std::istream& in) {
  try {
    return Json::parse(slurp(path, in));
  } catch (const Json::exception& e) {
    throw InvalidInput("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f << text;
}

Mdp checked_model(const Json& j) {
  Mdp mdp = mdp_from_json(j);
  auto report = validate(mdp);
  if (!report.ok()) throw InvalidInput(report.str());
  return mdp;
}

// A model file may be a bare model or a {model, query} bundle.
struct Loaded {
  Mdp mdp;
  std::optional<Json> query;
};

Loaded load_model(const std::string& path, std::istream& in) {
  Json j = parse_json(path, in);
  if (j.is_object() && j.contains("model")) {
    Loaded l{checked_model(j.at("model")), std::nullopt};
    if (j.contains("query")) l.query = j.at("query");
    return l;
  }
  return {checked_model(j), std::nullopt};
}

std::optional<Rational> level(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return Rational::parse(text);
}

Objective objective_for(const Mdp& mdp, const std::string& flag) {
  if (flag == "reach") return Objective::Reachability;
  if (flag == "mean") return Objective::MeanPayoff;
  if (!flag.empty()) throw InvalidInput("unknown objective '" + flag + "'");
  return mdp.has_targets() ? Objective::Reachability : Objective::MeanPayoff;
}

bool single_choice(const Mdp& mdp) {
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.available(s).size() != 1) return false;
  }
  return true;
}

std::string measure_line(std::size_t j, const FiniteDistribution& d, const std::optional<Rational>& p,
                         const std::optional<Rational>& q) {
  std::ostringstream o;
  o << "dim " << j << ": E=" << expectation(d);
  if (q) {
    auto v = var(d, *q);
    o << " VaR@" << *q << '=' << (v ? v->str() : std::string("inf"));
  }
  if (p) o << " CVaR@" << *p << '=' << cvar(d, *p);
  o << " law=" << d.str();
  return o.str();
}

struct CheckArgs {
  std::string model, query, out, objective;
  bool json = false;
  std::size_t threads = 1, grid = 16;
};

int do_check(const CheckArgs& a, std::istream& in, std::ostream& out) {
  Loaded l = load_model(a.model, in);
  Json qj;
  if (!a.query.empty()) {
    qj = parse_json(a.query, in);
  } else if (l.query) {
    qj = *l.query;
  } else {
    throw InvalidInput("no query given");
  }
  Query query = query_from_json(qj, l.mdp.dimensions());
  if (!a.objective.empty()) query.objective = objective_for(l.mdp, a.objective);

  Verdict v;
  if (single_choice(l.mdp)) {
    std::vector<std::size_t> choice;
    for (std::size_t s = 0; s < l.mdp.num_states(); ++s) choice.push_back(l.mdp.available(s).front());
    auto strategy = deterministic_strategy(choice);
    v = decide_mc(induced_chain(l.mdp, strategy), query);
    if (v.status == Status::Sat) v.witness = strategy;
    v.note = "model without choices; decided as a Markov chain";
  } else {
    SolverOptions opts;
    opts.threads = a.threads;
    opts.grid_subdivisions = a.grid;
    v = decide(l.mdp, query, opts);
  }
  if (v.status == Status::Sat && v.witness && !satisfies(evaluate(l.mdp, *v.witness, query.objective), query)) {
    throw std::logic_error("witness failed re-verification");
  }
  out << to_string(v.status) << "\n";
  if (!v.note.empty()) out << "note: " << v.note << "\n";
  if (!a.out.empty()) write_text(a.out, dump(to_json(v, l.mdp)), out);
  if (a.json) out << dump(to_json(v, l.mdp));
  switch (v.status) {
    case Status::Sat: return kExitSat;
    case Status::Unsat: return kExitUnsat;
    case Status::Unknown: return kExitUnknown;
  }
  return kExitUnknown;
}

struct EvalArgs {
  std::string model, strategy, objective, p, q, csv;
  std::size_t runs = 10000, horizon = 10000, burn_in = 1000, threads = 1;
  std::uint64_t seed = 1;
};

int do_evaluate(const EvalArgs& a, bool simulate, std::istream& in, std::ostream& out) {
  Loaded l = load_model(a.model, in);
  StrategySpec s = strategy_from_json(parse_json(a.strategy, in), l.mdp);
  auto report = validate(l.mdp, s);
  if (!report.ok()) throw InvalidInput(report.str());
  Objective objective = objective_for(l.mdp, a.objective);
  auto p = level(a.p);
  auto q = level(a.q);
  auto law = evaluate(l.mdp, s, objective);
  std::optional<SampleSet> samples;
  if (simulate) {
    SimConfig cfg;
    cfg.runs = a.runs;
    cfg.horizon = a.horizon;
    cfg.burn_in = std::min(a.burn_in, a.horizon - 1);
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    samples = sample_payoffs(l.mdp, s, objective, cfg);
    if (!a.csv.empty()) write_text(a.csv, samples_csv(*samples), out);
  }
  for (std::size_t j = 0; j < law.dimensions(); ++j) {
    out << measure_line(j, law[j], p, q) << "\n";
    if (samples) {
      auto m = empirical_measures(samples->samples[j], p, q);
      out << "  simulated: E=" << m.expectation;
      if (m.var) out << " VaR=" << *m.var;
      if (m.cvar) out << " CVaR=" << *m.cvar;
      out << "\n";
    }
  }
  if (samples && samples->unabsorbed > 0) out << "note: " << samples->unabsorbed << " runs hit the horizon\n";
  return 0;
}

int do_mec(const std::string& path, std::istream& in, std::ostream& out) {
  Loaded l = load_model(path, in);
  auto dec = mec_decomposition(l.mdp);
  for (std::size_t i = 0; i < dec.mecs.size(); ++i) {
    out << "MEC " << i << ": states";
    for (std::size_t s : dec.mecs[i].states) out << ' ' << l.mdp.state(s).name;
    out << "; actions";
    for (std::size_t a : dec.mecs[i].actions) out << ' ' << l.mdp.action(a).name;
    out << "\n";
  }
  return 0;
}

struct GenerateArgs {
  std::string kind, out, eps = "1/8";
  RandomMdpConfig random;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  Json j;
  if (a.kind == "random") {
    j = {{"model", to_json(random_mdp(a.random))}};
  } else {
    try {
      j = to_json(example(a.kind, Rational::parse(a.eps)));
    } catch (const std::invalid_argument& e) {
      throw InvalidInput(e.what());
    }
  }
  write_text(a.out, dump(j), out);
  return 0;
}

int do_gadget(const std::string& path, const std::string& dest, std::istream& in, std::ostream& out) {
  Cnf3 cnf = parse_dimacs(slurp(path, in));
  write_text(dest, dump(to_json(sat_reduction(cnf))), out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-aware queries on Markov decision processes", "riskmdp"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Decide a query; prints SAT, UNSAT or UNKNOWN");
  c->add_option("model", check.model, "Model or {model, query} bundle ('-' for stdin)")->required();
  c->add_option("query", check.query, "Query JSON");
  c->add_option("--out", check.out, "Write verdict, witness and certificate JSON here");
  c->add_flag("--json", check.json, "Print the verdict JSON");
  c->add_option("--objective", check.objective, "reach or mean (overrides the query)");
  c->add_option("--threads", check.threads, "Worker threads")->check(CLI::PositiveNumber);
  c->add_option("--grid", check.grid, "Threshold refinement for multi-dimensional mean payoff");

  EvalArgs eval;
  auto* e = app.add_subcommand("evaluate", "Exact payoff law and measures of a strategy");
  auto* sim = app.add_subcommand("simulate", "Exact measures next to Monte Carlo estimates");
  for (auto* sub : {e, sim}) {
    sub->add_option("model", eval.model, "Model JSON")->required();
    sub->add_option("strategy", eval.strategy, "Strategy JSON")->required();
    sub->add_option("--objective", eval.objective, "reach or mean");
    sub->add_option("--p", eval.p, "CVaR level");
    sub->add_option("--q", eval.q, "VaR level");
  }
  sim->add_option("--runs", eval.runs)->check(CLI::PositiveNumber);
  sim->add_option("--horizon", eval.horizon)->check(CLI::PositiveNumber);
  sim->add_option("--burn-in", eval.burn_in);
  sim->add_option("--seed", eval.seed);
  sim->add_option("--threads", eval.threads)->check(CLI::PositiveNumber);
  sim->add_option("--csv", eval.csv, "Write samples as CSV");

  std::string mec_model;
  auto* m = app.add_subcommand("mec", "Print the maximal end components");
  m->add_option("model", mec_model)->required();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write an example or random model");
  g->add_option("kind", gen.kind, "choice, loop, slow, negative or random")->required();
  g->add_option("-o,--out", gen.out);
  g->add_option("--eps", gen.eps, "Parameter of the slow example");
  g->add_option("--states", gen.random.states);
  g->add_option("--actions", gen.random.actions_per_state);
  g->add_option("--density", gen.random.density);
  g->add_option("--dims", gen.random.dimensions);
  g->add_option("--targets", gen.random.target_fraction);
  g->add_option("--block", gen.random.block_size);
  g->add_option("--seed", gen.random.seed);

  std::string cnf_path, gadget_out;
  auto* gs = app.add_subcommand("gadget-sat", "Reduce a DIMACS 3-CNF to a reachability query bundle");
  gs->add_option("cnf", cnf_path, "CNF file ('-' for stdin)")->required();
  gs->add_option("-o,--out", gadget_out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (c->parsed()) return do_check(check, in, out);
    if (e->parsed()) return do_evaluate(eval, false, in, out);
    if (sim->parsed()) return do_evaluate(eval, true, in, out);
    if (m->parsed()) return do_mec(mec_model, in, out);
    if (g->parsed()) return do_generate(gen, out);
    if (gs->parsed()) return do_gadget(cnf_path, gadget_out, in, out);
  } catch (const InvalidInput& ex) {
    err << "invalid input: " << ex.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& ex) {
    err << "invalid input: " << ex.what() << "\n";
    return kExitInvalid;
  } catch (const Json::exception& ex) {
    err << "invalid input: " << ex.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace riskmdp
