#include <doctest.h>

#include <algorithm>

#include "riskmdp/risk.hpp"
#include "support/fixtures.hpp"

using namespace riskmdp;
using fx::R;

namespace {

// CVaR straight from the tail: average of the lowest p-mass of outcomes.
Rational lower_tail_mean(const FiniteDistribution& d, const Rational& p) {
  if (p.is_zero()) return d.min();
  Rational left = p, acc;
  for (const auto& [v, w] : d.atoms()) {
    Rational take = min(left, w);
    acc += take * v;
    left -= take;
    if (left.is_zero()) break;
  }
  return acc / p;
}

// sup{r : F(r) <= p} scanning the atoms: the answer is the first atom whose
// CDF exceeds p.
std::optional<Rational> scan_var(const FiniteDistribution& d, const Rational& p) {
  Rational mass;
  for (const auto& [v, w] : d.atoms()) {
    mass += w;
    if (mass > p) return v;
  }
  return std::nullopt;
}

Rational lambda_closed_form(const Rational& lambda) {
  if (lambda >= R(1, 9)) return R(5, 2) * (R(1) + lambda);
  return R(5) * (R(1) - R(4) * lambda);
}

}  // namespace

TEST_CASE("distribution construction") {
  FiniteDistribution d{{R(1), R(1, 2)}, {R(1), R(1, 4)}, {R(3), R(1, 4)}, {R(7), R(0)}};
  CHECK(d.size() == 2);
  CHECK(d.probability(R(1)) == R(3, 4));
  CHECK(d.probability(R(7)) == R(0));
  CHECK_THROWS_AS((FiniteDistribution{{R(1), R(1, 2)}}), std::invalid_argument);
  CHECK_THROWS_AS((FiniteDistribution{{R(1), R(3, 2)}, {R(2), R(-1, 2)}}), std::invalid_argument);
}

TEST_CASE("cdf") {
  auto db = fx::d_b();
  CHECK(cdf(db, R(0)) == R(1, 10));
  CHECK(cdf(db, R(-1)) == R(0));
  CHECK(cdf(db, R(10)) == R(1));
  CHECK(cdf(db, R(5)) == R(1, 10));
  CHECK(cdf_below(db, R(0)) == R(0));
  CHECK(cdf_below(db, R(10)) == R(1, 10));
}

TEST_CASE("var") {
  CHECK(var(fx::d_b(), R(1, 20)) == R(0));
  CHECK(var(FiniteDistribution::point(R(5)), R(1, 3)) == R(5));
  CHECK(var(FiniteDistribution::point(R(5)), R(0)) == R(5));
  CHECK(var(fx::d_lambda(R(3, 4)), R(1, 20)) == R(5));
  CHECK_FALSE(var(fx::d_b(), R(1)).has_value());
  // Flat CDF at level p: the sup-quantile jumps to the next atom.
  CHECK(var(fx::d_b(), R(1, 10)) == R(10));
}

TEST_CASE("cvar") {
  CHECK(cvar(fx::d_b(), R(1, 20)) == R(0));
  CHECK(cvar(fx::d_lambda(R(3, 4)), R(1, 20)) == R(5, 2));
  CHECK(cvar(fx::d_lambda(R(1, 2)), R(1, 5)) == R(15, 4));
  CHECK(cvar(FiniteDistribution::point(R(-3)), R(1, 7)) == R(-3));
  CHECK(cvar(fx::d_lambda(R(1, 20)), R(1, 5)) == R(4));
  CHECK(cvar(fx::d_b(), R(0)) == R(0));
  CHECK(cvar(fx::d_b(), R(1)) == R(9));
}

TEST_CASE("expectation") {
  CHECK(expectation(fx::d_lambda(R(3, 4))) == R(6));
  CHECK(expectation(FiniteDistribution::point(R(2, 3))) == R(2, 3));
  CHECK(expectation(fx::d_b()) == R(9));
}

TEST_CASE("mix") {
  FiniteDistribution expected{{R(0), R(1, 40)}, {R(5), R(3, 4)}, {R(10), R(9, 40)}};
  CHECK(mix(fx::d_a(), fx::d_b(), R(3, 4)) == expected);
  CHECK(mix(fx::d_b(), fx::d_b(), R(1, 3)) == fx::d_b());
  CHECK(mix(fx::d_a(), fx::d_b(), R(0)) == fx::d_b());
  CHECK_THROWS(mix(fx::d_a(), fx::d_b(), R(2)));
}

TEST_CASE("dominates") {
  CHECK(dominates(FiniteDistribution::point(R(10)), FiniteDistribution::point(R(5))));
  CHECK_FALSE(dominates(fx::d_b(), fx::d_a()));
  CHECK_FALSE(dominates(fx::d_a(), fx::d_b()));
  CHECK(dominates(fx::d_b(), fx::d_b()));
}

TEST_CASE("partition decomposition") {
  SUBCASE("single part") {
    std::vector<WeightedPart> parts{{R(1), fx::d_b()}};
    auto dec = partition_decompose(parts, R(1, 5));
    CHECK(dec.selected == std::vector<std::size_t>{0});
    CHECK(dec.levels == std::vector<Rational>{R(1, 5)});
    CHECK(partition_value(parts, dec, R(1, 5)) == cvar(fx::d_b(), R(1, 5)));
  }
  SUBCASE("two point masses at p = 1/2") {
    std::vector<WeightedPart> parts{{R(1, 2), FiniteDistribution::point(R(0))},
                                    {R(1, 2), FiniteDistribution::point(R(10))}};
    auto dec = partition_decompose(parts, R(1, 2));
    CHECK(dec.selected == std::vector<std::size_t>{0});
    CHECK(dec.levels == std::vector<Rational>{R(1)});
    CHECK(partition_value(parts, dec, R(1, 2)) == R(0));
  }
  SUBCASE("the 3/4 mix of the choice model") {
    std::vector<WeightedPart> parts{{R(3, 4), fx::d_a()}, {R(1, 4), fx::d_b()}};
    auto dec = partition_decompose(parts, R(1, 20));
    CHECK(partition_value(parts, dec, R(1, 20)) == R(5, 2));
    CHECK(mixture(parts) == fx::d_lambda(R(3, 4)));
  }
  SUBCASE("bad weights") {
    std::vector<WeightedPart> parts{{R(1, 2), fx::d_a()}};
    CHECK_THROWS_AS(partition_decompose(parts, R(1, 2)), std::invalid_argument);
  }
}

TEST_CASE("closed form over the choice-model family at p = 1/5") {
  for (int k = 0; k <= 180; ++k) {
    Rational lambda(k, 180);
    CHECK(cvar(fx::d_lambda(lambda), R(1, 5)) == lambda_closed_form(lambda));
  }
  CHECK(cvar(fx::d_lambda(R(1, 9)), R(1, 5)) == R(25, 9));
}

TEST_CASE("property: var and cvar agree with the tail oracles") {
  fx::Gen gen(1);
  for (int i = 0; i < 10000; ++i) {
    auto d = gen.distribution();
    Rational p = gen.fraction(24);
    CHECK(cvar(d, p) == lower_tail_mean(d, p));
    CHECK(var(d, p) == scan_var(d, p));
  }
}

TEST_CASE("property: convexity in the distribution") {
  fx::Gen gen(2);
  for (int i = 0; i < 10000; ++i) {
    auto d1 = gen.distribution(), d2 = gen.distribution();
    Rational lambda = gen.fraction(12), p = gen.fraction(20);
    CHECK(cvar(mix(d1, d2, lambda), p) <= lambda * cvar(d1, p) + (R(1) - lambda) * cvar(d2, p));
  }
}

TEST_CASE("property: monotone in the level") {
  fx::Gen gen(3);
  for (int i = 0; i < 10000; ++i) {
    auto d = gen.distribution();
    std::vector<Rational> levels;
    for (int k = 0; k < 6; ++k) levels.push_back(gen.fraction(30));
    std::sort(levels.begin(), levels.end());
    for (std::size_t k = 1; k < levels.size(); ++k) {
      CHECK(cvar(d, levels[k - 1]) <= cvar(d, levels[k]));
      auto lo = var(d, levels[k - 1]), hi = var(d, levels[k]);
      CHECK((!hi || (lo && *lo <= *hi)));
    }
  }
}

TEST_CASE("property: sandwich") {
  fx::Gen gen(4);
  for (int i = 0; i < 10000; ++i) {
    auto d = gen.distribution();
    Rational p = gen.level(40);
    CHECK(cvar(d, p) <= *var(d, p));
    CHECK(*var(d, p) <= d.max());
    CHECK(cvar(d, p) <= expectation(d));
    CHECK(d.min() <= cvar(d, p));
  }
}

TEST_CASE("property: dominance monotonicity") {
  fx::Gen gen(5);
  for (int i = 0; i < 10000; ++i) {
    auto d1 = gen.distribution();
    // Shifting every atom up by a non-negative amount gives a dominating law.
    std::vector<std::pair<Rational, Rational>> shifted;
    for (const auto& [v, w] : d1.atoms()) shifted.emplace_back(v + Rational(gen.range(0, 3)), w);
    FiniteDistribution d2(shifted);
    REQUIRE(dominates(d2, d1));
    Rational p = gen.level(20);
    CHECK(expectation(d1) <= expectation(d2));
    CHECK(*var(d1, p) <= *var(d2, p));
    CHECK(cvar(d1, p) <= cvar(d2, p));
  }
}

TEST_CASE("property: measures depend only on the atom map") {
  fx::Gen gen(6);
  for (int i = 0; i < 10000; ++i) {
    auto d = gen.distribution();
    // Same law, atoms split into pieces and listed in reverse.
    std::vector<std::pair<Rational, Rational>> pieces;
    for (auto it = d.atoms().rbegin(); it != d.atoms().rend(); ++it) {
      pieces.emplace_back(it->first, it->second / R(3));
      pieces.emplace_back(it->first, it->second * R(2, 3));
    }
    FiniteDistribution e(pieces);
    Rational p = gen.fraction(20);
    CHECK(e == d);
    CHECK(var(e, p) == var(d, p));
    CHECK(cvar(e, p) == cvar(d, p));
  }
}

TEST_CASE("property: partition identity equals the mixture's cvar") {
  fx::Gen gen(8);
  for (int i = 0; i < 10000; ++i) {
    std::size_t k = static_cast<std::size_t>(gen.range(1, 4));
    std::vector<std::int64_t> w;
    std::int64_t total = 0;
    for (std::size_t n = 0; n < k; ++n) {
      w.push_back(gen.range(1, 5));
      total += w.back();
    }
    std::vector<WeightedPart> parts;
    for (std::size_t n = 0; n < k; ++n) parts.push_back({Rational(w[n], total), gen.distribution(3)});
    Rational p = gen.fraction(20);
    auto dec = partition_decompose(parts, p);
    CHECK(partition_value(parts, dec, p) == cvar(mixture(parts), p));
    for (const auto& level : dec.levels) CHECK((level.sign() >= 0 && level <= R(1)));
  }
}
