#include "riskmdp/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "riskmdp/risk.hpp"

namespace riskmdp {
namespace {

constexpr std::size_t kBlock = 1024;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Cumulative {
  std::vector<std::size_t> items;
  std::vector<double> bounds;

  explicit Cumulative(const Distribution& d) {
    double acc = 0;
    for (const auto& [i, p] : d) {
      acc += p.to_double();
      items.push_back(i);
      bounds.push_back(acc);
    }
  }

  std::size_t draw(double u) const {
    auto it = std::upper_bound(bounds.begin(), bounds.end(), u * bounds.back());
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - bounds.begin()), items.size() - 1);
    return items[k];
  }
};

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Sampler {
  const Mdp& mdp;
  const StrategySpec& strategy;
  Objective objective;
  const SimConfig& cfg;
  std::vector<Cumulative> moves;
  std::vector<Cumulative> succ;
  std::map<UpdateKey, Cumulative> updates;
  Cumulative init_memory;
  std::vector<std::vector<double>> reward;

  Sampler(const Mdp& m, const StrategySpec& s, Objective o, const SimConfig& c)
      : mdp(m), strategy(s), objective(o), cfg(c), init_memory(s.initial_memory) {
    for (const auto& d : s.next_move) moves.emplace_back(d);
    for (const auto& a : m.actions()) succ.emplace_back(a.successors);
    for (const auto& [k, d] : s.memory_update) updates.emplace(k, Cumulative(d));
    for (std::size_t st = 0; st < m.num_states(); ++st) {
      std::vector<double> r;
      for (std::size_t j = 0; j < m.dimensions(); ++j) r.push_back(m.reward(st, j).to_double());
      reward.push_back(std::move(r));
    }
  }

  // Returns false if a reachability run was cut at the horizon.
  bool run(std::mt19937_64& rng, std::vector<double>& out) const {
    const std::size_t d = mdp.dimensions();
    const std::size_t mem = strategy.memory_size();
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t s = mdp.initial();
    std::size_t m = init_memory.draw(uniform(rng));
    for (std::size_t step = 0; step < cfg.horizon; ++step) {
      if (objective == Objective::Reachability && mdp.is_target(s)) {
        out = reward[s];
        return true;
      }
      if (objective == Objective::MeanPayoff && step >= cfg.burn_in) {
        for (std::size_t j = 0; j < d; ++j) out[j] += reward[s][j];
      }
      std::size_t a = moves[s * mem + m].draw(uniform(rng));
      std::size_t next = succ[a].draw(uniform(rng));
      auto it = updates.find({a, next, m});
      if (it != updates.end()) m = it->second.draw(uniform(rng));
      s = next;
    }
    if (objective == Objective::Reachability) {
      if (mdp.is_target(s)) {
        out = reward[s];
        return true;
      }
      return false;
    }
    const double steps = static_cast<double>(cfg.horizon - cfg.burn_in);
    for (auto& v : out) v /= steps;
    return true;
  }
};

}  // namespace

SampleSet sample_payoffs(const Mdp& mdp, const StrategySpec& strategy, Objective objective, const SimConfig& cfg) {
  if (cfg.runs == 0 || cfg.horizon == 0) throw std::invalid_argument("simulation: runs and horizon must be positive");
  if (objective == Objective::MeanPayoff && cfg.burn_in >= cfg.horizon) {
    throw std::invalid_argument("simulation: burn-in must be below the horizon");
  }
  auto report = validate(mdp, strategy);
  if (!report.ok()) throw std::invalid_argument("simulation: " + report.str());

  const std::size_t d = mdp.dimensions();
  Sampler sampler(mdp, strategy, objective, cfg);
  SampleSet set;
  set.samples.assign(d, std::vector<double>(cfg.runs));
  const std::size_t blocks = (cfg.runs + kBlock - 1) / kBlock;
  std::vector<std::size_t> cut(blocks, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<double> out(d);
    for (std::size_t b = next++; b < blocks; b = next++) {
      std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(b)));
      for (std::size_t i = b * kBlock; i < std::min(cfg.runs, (b + 1) * kBlock); ++i) {
        if (!sampler.run(rng, out)) ++cut[b];
        for (std::size_t j = 0; j < d; ++j) set.samples[j][i] = out[j];
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, blocks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c : cut) set.unabsorbed += c;
  return set;
}

EmpiricalMeasures empirical_measures(const std::vector<double>& samples, const std::optional<Rational>& p,
                                     const std::optional<Rational>& q) {
  if (samples.empty()) throw std::invalid_argument("empirical_measures: no samples");
  std::map<double, std::int64_t> counts;
  for (double s : samples) ++counts[s];
  const auto n = static_cast<std::int64_t>(samples.size());
  std::vector<std::pair<Rational, Rational>> atoms;
  for (const auto& [v, c] : counts) atoms.emplace_back(Rational(mpq_class(v)), Rational(c, n));
  FiniteDistribution dist(atoms);
  EmpiricalMeasures m;
  m.expectation = expectation(dist).to_double();
  if (q) {
    auto v = var(dist, *q);
    m.var = v ? v->to_double() : std::numeric_limits<double>::infinity();
  }
  if (p) m.cvar = cvar(dist, *p).to_double();
  return m;
}

std::string samples_csv(const SampleSet& set) {
  std::ostringstream out;
  out.precision(17);
  out << "run";
  for (std::size_t j = 0; j < set.samples.size(); ++j) out << ",dim" << j;
  out << "\n";
  const std::size_t n = set.samples.empty() ? 0 : set.samples.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    out << i;
    for (const auto& col : set.samples) out << ',' << col[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace riskmdp
