#include "riskmdp/mc_solver.hpp"

#include <algorithm>
#include <stdexcept>

#include "riskmdp/graph.hpp"
#include "riskmdp/linalg.hpp"

namespace riskmdp {
namespace {

using SparseVec = std::vector<std::pair<std::size_t, Rational>>;

void axpy(SparseVec& acc, const Rational& f, const SparseVec& x) {
  for (const auto& [i, v] : x) acc.emplace_back(i, f * v);
}

// Absorption vectors (label -> probability) for every state.
std::vector<SparseVec> absorption_vectors(const MarkovChain& mc, const std::vector<std::optional<std::size_t>>& label) {
  const std::size_t n = mc.num_states();
  Adjacency g(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s]) continue;
    for (const auto& [t, p] : mc.row(s)) g[s].push_back(t);
  }
  auto comps = strongly_connected(g);
  std::vector<SparseVec> h(n);
  std::vector<std::size_t> comp_of(n);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t s : comps[c]) comp_of[s] = c;
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& comp = comps[c];
    if (comp.size() == 1 && label[comp.front()]) {
      h[comp.front()] = {{*label[comp.front()], Rational(1)}};
      continue;
    }
    // Right-hand side from already solved successors outside the component.
    std::vector<SparseVec> rhs(comp.size());
    bool leaks = false;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      for (const auto& [t, p] : mc.row(comp[i])) {
        if (comp_of[t] == c) continue;
        leaks = true;
        axpy(rhs[i], p, h[t]);
      }
      rhs[i] = canonical(std::move(rhs[i]));
    }
    if (!leaks) continue;  // bottom component without labels: never absorbed
    if (comp.size() == 1) {
      std::size_t s = comp.front();
      Rational stay;
      for (const auto& [t, p] : mc.row(s)) {
        if (t == s) stay += p;
      }
      Rational scale = (Rational(1) - stay).reciprocal();
      for (auto& [l, v] : rhs[0]) v *= scale;
      h[s] = std::move(rhs[0]);
      continue;
    }
    std::vector<std::size_t> labels;
    for (const auto& r : rhs) {
      for (const auto& [l, v] : r) labels.push_back(l);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.empty()) continue;
    std::vector<std::size_t> local(n, 0);
    for (std::size_t i = 0; i < comp.size(); ++i) local[comp[i]] = i;
    Matrix a(comp.size(), std::vector<Rational>(comp.size()));
    Matrix b(comp.size(), std::vector<Rational>(labels.size()));
    for (std::size_t i = 0; i < comp.size(); ++i) {
      a[i][i] = Rational(1);
      for (const auto& [t, p] : mc.row(comp[i])) {
        if (comp_of[t] == c) a[i][local[t]] -= p;
      }
      for (const auto& [l, v] : rhs[i]) {
        auto pos = std::lower_bound(labels.begin(), labels.end(), l) - labels.begin();
        b[i][pos] = v;
      }
    }
    Matrix x = solve_linear(std::move(a), std::move(b));
    for (std::size_t i = 0; i < comp.size(); ++i) {
      SparseVec v;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (!x[i][k].is_zero()) v.emplace_back(labels[k], x[i][k]);
      }
      h[comp[i]] = std::move(v);
    }
  }
  return h;
}

struct LabelledOutcomes {
  std::vector<std::optional<std::size_t>> label;
  std::vector<std::vector<Rational>> values;  // reward vector per label
};

PayoffLaw law_from_outcomes(const MarkovChain& mc, const LabelledOutcomes& outcomes) {
  auto probs = absorption_by_label(mc, outcomes.label, outcomes.values.size());
  const std::size_t d = mc.dimensions();
  PayoffLaw law;
  Rational absorbed;
  for (const auto& p : probs) absorbed += p;
  Rational residual = Rational(1) - absorbed;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::pair<Rational, Rational>> atoms;
    for (std::size_t l = 0; l < probs.size(); ++l) atoms.emplace_back(outcomes.values[l][j], probs[l]);
    atoms.emplace_back(Rational(), residual);
    law.dims.emplace_back(atoms);
  }
  return law;
}

std::size_t intern_vector(std::vector<std::vector<Rational>>& values, const std::vector<Rational>& v) {
  auto it = std::find(values.begin(), values.end(), v);
  if (it != values.end()) return static_cast<std::size_t>(it - values.begin());
  values.push_back(v);
  return values.size() - 1;
}

}  // namespace

std::vector<Rational> absorption_by_label(const MarkovChain& mc,
                                          const std::vector<std::optional<std::size_t>>& label,
                                          std::size_t label_count) {
  auto h = absorption_vectors(mc, label);
  std::vector<Rational> out(label_count);
  for (const auto& [s, p] : mc.initial()) {
    for (const auto& [l, v] : h[s]) out[l] += p * v;
  }
  return out;
}

std::map<std::size_t, Rational> reach_probabilities(const MarkovChain& mc) {
  std::vector<std::optional<std::size_t>> label(mc.num_states());
  std::vector<std::size_t> targets;
  for (std::size_t s = 0; s < mc.num_states(); ++s) {
    if (!mc.is_target(s)) continue;
    label[s] = targets.size();
    targets.push_back(s);
  }
  auto probs = absorption_by_label(mc, label, targets.size());
  std::map<std::size_t, Rational> out;
  for (std::size_t i = 0; i < targets.size(); ++i) out[targets[i]] = probs[i];
  return out;
}

PayoffLaw payoff_law_reach(const MarkovChain& mc) {
  LabelledOutcomes outcomes;
  outcomes.label.resize(mc.num_states());
  for (std::size_t s = 0; s < mc.num_states(); ++s) {
    if (mc.is_target(s)) outcomes.label[s] = intern_vector(outcomes.values, mc.state(s).rewards);
  }
  return law_from_outcomes(mc, outcomes);
}

std::vector<BsccGain> bscc_mean_payoff(const MarkovChain& mc) {
  std::vector<BsccGain> out;
  const std::size_t d = mc.dimensions();
  for (auto& comp : bsccs(mc)) {
    BsccGain g;
    const std::size_t k = comp.size();
    if (k == 1) {
      g.stationary = {Rational(1)};
    } else {
      std::vector<std::size_t> local(mc.num_states(), 0);
      for (std::size_t i = 0; i < k; ++i) local[comp[i]] = i;
      // Balance equations pi_t = sum_s pi_s P(s,t); the last one is replaced by normalisation.
      Matrix a(k, std::vector<Rational>(k));
      Matrix b(k, std::vector<Rational>(1));
      for (std::size_t i = 0; i < k; ++i) {
        a[i][i] -= Rational(1);
        for (const auto& [t, p] : mc.row(comp[i])) a[local[t]][i] += p;
      }
      for (std::size_t i = 0; i < k; ++i) a[k - 1][i] = Rational(1);
      b[k - 1][0] = Rational(1);
      Matrix x = solve_linear(std::move(a), std::move(b));
      for (std::size_t i = 0; i < k; ++i) g.stationary.push_back(x[i][0]);
    }
    g.gain.assign(d, Rational());
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < d; ++j) g.gain[j] += g.stationary[i] * mc.reward(comp[i], j);
    }
    g.states = std::move(comp);
    out.push_back(std::move(g));
  }
  return out;
}

PayoffLaw payoff_law_mean(const MarkovChain& mc) {
  LabelledOutcomes outcomes;
  outcomes.label.resize(mc.num_states());
  for (const auto& b : bscc_mean_payoff(mc)) {
    std::size_t l = intern_vector(outcomes.values, b.gain);
    for (std::size_t s : b.states) outcomes.label[s] = l;
  }
  return law_from_outcomes(mc, outcomes);
}

PayoffLaw payoff_law(const MarkovChain& mc, Objective objective) {
  return objective == Objective::Reachability ? payoff_law_reach(mc) : payoff_law_mean(mc);
}

Measures measures(const FiniteDistribution& d, const std::optional<Rational>& p, const std::optional<Rational>& q) {
  Measures m;
  m.expectation = expectation(d);
  if (q) m.var = var(d, *q);
  if (p) m.cvar = cvar(d, *p);
  return m;
}

std::vector<std::string> violations(const PayoffLaw& law, const Query& query) {
  std::vector<std::string> out;
  if (law.dimensions() != query.dimensions()) {
    out.push_back("dimension mismatch");
    return out;
  }
  for (std::size_t j = 0; j < query.dimensions(); ++j) {
    const auto& c = query.dims[j];
    const auto& d = law[j];
    std::string dim = "dimension " + std::to_string(j);
    if (c.e) {
      Rational e = expectation(d);
      if (e < *c.e) out.push_back(dim + ": E = " + e.str() + " < " + c.e->str());
    }
    if (c.cvar) {
      Rational v = cvar(d, c.cvar->p);
      if (v < c.cvar->c) out.push_back(dim + ": CVaR = " + v.str() + " < " + c.cvar->c.str());
    }
    if (c.var) {
      auto v = var(d, c.var->q);
      if (v && *v < c.var->v) out.push_back(dim + ": VaR = " + v->str() + " < " + c.var->v.str());
    }
  }
  return out;
}

bool satisfies(const PayoffLaw& law, const Query& query) { return violations(law, query).empty(); }

Verdict decide_mc(const MarkovChain& mc, const Query& query) {
  validate_query(query, mc.dimensions());
  Verdict v;
  v.status = satisfies(payoff_law(mc, query.objective), query) ? Status::Sat : Status::Unsat;
  return v;
}

}  // namespace riskmdp
