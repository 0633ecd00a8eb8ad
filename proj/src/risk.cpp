#include "riskmdp/risk.hpp"

#include <stdexcept>

namespace riskmdp {

FiniteDistribution::FiniteDistribution(const std::vector<std::pair<Rational, Rational>>& atoms) {
  Rational total;
  for (const auto& [value, prob] : atoms) {
    if (prob.sign() < 0) throw std::invalid_argument("negative probability " + prob.str());
    if (prob.is_zero()) continue;
    atoms_[value] += prob;
    total += prob;
  }
  if (total != Rational(1)) throw std::invalid_argument("distribution mass is " + total.str() + ", not 1");
}

FiniteDistribution FiniteDistribution::point(const Rational& value) { return FiniteDistribution{{value, 1}}; }

Rational FiniteDistribution::probability(const Rational& value) const {
  auto it = atoms_.find(value);
  return it == atoms_.end() ? Rational() : it->second;
}

std::string FiniteDistribution::str() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, p] : atoms_) {
    if (!first) out += ", ";
    first = false;
    out += v.str() + ":" + p.str();
  }
  return out + "}";
}

Rational cdf(const FiniteDistribution& d, const Rational& r) {
  Rational sum;
  for (const auto& [v, p] : d.atoms()) {
    if (v > r) break;
    sum += p;
  }
  return sum;
}

Rational cdf_below(const FiniteDistribution& d, const Rational& r) {
  Rational sum;
  for (const auto& [v, p] : d.atoms()) {
    if (v >= r) break;
    sum += p;
  }
  return sum;
}

std::optional<Rational> var(const FiniteDistribution& d, const Rational& p) {
  // The first atom whose CDF exceeds p; F is flat before it and jumps past p there.
  Rational acc;
  for (const auto& [v, prob] : d.atoms()) {
    acc += prob;
    if (acc > p) return v;
  }
  return std::nullopt;
}

Rational expectation(const FiniteDistribution& d) {
  Rational sum;
  for (const auto& [v, p] : d.atoms()) sum += v * p;
  return sum;
}

Rational cvar(const FiniteDistribution& d, const Rational& p) {
  if (d.empty()) throw std::invalid_argument("CVaR of an empty distribution");
  if (p.sign() <= 0) return d.min();
  if (p >= Rational(1)) return expectation(d);
  Rational v = *var(d, p);
  Rational below;
  Rational mass_below;
  for (const auto& [x, prob] : d.atoms()) {
    if (x >= v) break;
    below += x * prob;
    mass_below += prob;
  }
  return (below + (p - mass_below) * v) / p;
}

FiniteDistribution mix(const FiniteDistribution& d1, const FiniteDistribution& d2, const Rational& lambda) {
  if (lambda.sign() < 0 || lambda > Rational(1)) throw std::invalid_argument("mixing weight outside [0,1]");
  std::vector<std::pair<Rational, Rational>> atoms;
  Rational rest = Rational(1) - lambda;
  for (const auto& [v, p] : d1.atoms()) atoms.emplace_back(v, p * lambda);
  for (const auto& [v, p] : d2.atoms()) atoms.emplace_back(v, p * rest);
  return FiniteDistribution(atoms);
}

bool dominates(const FiniteDistribution& d1, const FiniteDistribution& d2) {
  for (const auto* d : {&d1, &d2}) {
    for (const auto& [v, p] : d->atoms()) {
      if (cdf(d1, v) > cdf(d2, v)) return false;
    }
  }
  return true;
}

FiniteDistribution mixture(const std::vector<WeightedPart>& parts) {
  std::vector<std::pair<Rational, Rational>> atoms;
  for (const auto& part : parts) {
    for (const auto& [v, p] : part.dist.atoms()) atoms.emplace_back(v, p * part.weight);
  }
  return FiniteDistribution(atoms);
}

PartitionDecomposition partition_decompose(const std::vector<WeightedPart>& parts, const Rational& p) {
  if (parts.empty()) throw std::invalid_argument("empty partition");
  Rational total;
  for (const auto& part : parts) {
    if (part.weight.sign() <= 0) throw std::invalid_argument("partition weights must be positive");
    total += part.weight;
  }
  if (total != Rational(1)) throw std::invalid_argument("partition weights sum to " + total.str());
  if (p.sign() < 0 || p > Rational(1)) throw std::invalid_argument("risk level outside [0,1]");

  PartitionDecomposition dec;
  if (p >= Rational(1)) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      dec.selected.push_back(i);
      dec.levels.emplace_back(1);
    }
    return dec;
  }
  FiniteDistribution x = mixture(parts);
  if (p.is_zero()) {
    // Worst case sits in any part that contains the global minimum.
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].dist.min() == x.min()) {
        dec.selected.push_back(i);
        dec.levels.emplace_back(0);
        break;
      }
    }
    return dec;
  }
  Rational v = *var(x, p);
  // Share of the jump at v that belongs to the lower tail, spread evenly over parts.
  Rational theta = (p - cdf_below(x, v)) / x.probability(v);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& di = parts[i].dist;
    Rational level = cdf_below(di, v) + theta * di.probability(v);
    if (level.sign() > 0) {
      dec.selected.push_back(i);
      dec.levels.push_back(level);
    }
  }
  return dec;
}

Rational partition_value(const std::vector<WeightedPart>& parts, const PartitionDecomposition& dec,
                         const Rational& p) {
  if (p.is_zero()) {
    Rational weight;
    Rational sum;
    for (std::size_t k = 0; k < dec.selected.size(); ++k) {
      const auto& part = parts[dec.selected[k]];
      weight += part.weight;
      sum += part.weight * cvar(part.dist, dec.levels[k]);
    }
    return sum / weight;
  }
  Rational sum;
  for (std::size_t k = 0; k < dec.selected.size(); ++k) {
    const auto& part = parts[dec.selected[k]];
    sum += part.weight * dec.levels[k] * cvar(part.dist, dec.levels[k]);
  }
  return sum / p;
}

}  // namespace riskmdp
