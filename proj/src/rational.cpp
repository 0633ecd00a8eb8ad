#include "riskmdp/rational.hpp"

#include <cctype>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace riskmdp {
namespace {

using i128 = __int128;
using u128 = unsigned __int128;

std::uint64_t gcd64(std::uint64_t a, std::uint64_t b) { return std::gcd(a, b); }

std::uint64_t uabs(std::int64_t v) {
  return v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
}

u128 uabs128(i128 v) { return v < 0 ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v); }

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    if ((a >> 64) == 0 && (b >> 64) == 0) {
      return gcd64(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
    }
    u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

mpz_class to_mpz(i128 v) {
  bool neg = v < 0;
  u128 u = uabs128(v);
  mpz_class hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
  mpz_class lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
  mpz_class r = (hi << 64) + lo;
  return neg ? mpz_class(-r) : r;
}

bool fits(i128 v) {
  constexpr i128 lim = std::numeric_limits<std::int64_t>::max();
  return v <= lim && v >= -lim;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  *this = from_wide(num, den);
}

Rational Rational::from_wide(i128 num, i128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (num == 0) return Rational();
  u128 g = gcd128(uabs128(num), static_cast<u128>(den));
  if (g > 1) {
    num /= static_cast<i128>(g);
    den /= static_cast<i128>(g);
  }
  if (fits(num) && fits(den)) return raw(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
  mpq_class q(to_mpz(num), to_mpz(den));
  q.canonicalize();
  Rational r;
  r.big_ = std::make_shared<const mpq_class>(std::move(q));
  return r;
}

Rational Rational::from_mpq(const mpq_class& q) {
  const mpz_class& n = q.get_num();
  const mpz_class& d = q.get_den();
  if (mpz_fits_slong_p(n.get_mpz_t()) && mpz_fits_slong_p(d.get_mpz_t())) {
    long nv = n.get_si();
    long dv = d.get_si();
    if (nv != std::numeric_limits<long>::min()) return raw(nv, dv);
  }
  Rational r;
  r.big_ = std::make_shared<const mpq_class>(q);
  return r;
}

mpq_class Rational::to_mpq() const {
  if (big_) return *big_;
  mpq_class q;
  mpz_set_si(q.get_num_mpz_t(), num_);
  mpz_set_si(q.get_den_mpz_t(), den_);
  return q;
}

Rational Rational::parse(std::string_view text) {
  std::string s(text);
  auto bad = [&]() { return std::invalid_argument("not an exact rational: '" + s + "'"); };
  if (s.empty()) throw bad();
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  auto digits = [&](std::size_t from, std::size_t to) {
    if (from >= to) return false;
    for (std::size_t k = from; k < to; ++k) {
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
    }
    return true;
  };
  mpq_class q;
  std::size_t slash = s.find('/');
  std::size_t dot = s.find('.');
  if (slash != std::string::npos) {
    if (!digits(i, slash) || !digits(slash + 1, s.size())) throw bad();
    mpz_class n(s.substr(i, slash - i), 10);
    mpz_class d(s.substr(slash + 1), 10);
    if (d == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    q = mpq_class(n, d);
  } else if (dot != std::string::npos) {
    bool int_ok = dot == i || digits(i, dot);
    if (!int_ok || !digits(dot + 1, s.size())) throw bad();
    std::string whole = s.substr(i, dot - i) + s.substr(dot + 1);
    mpz_class n(whole, 10);
    mpz_class d;
    mpz_ui_pow_ui(d.get_mpz_t(), 10, s.size() - dot - 1);
    q = mpq_class(n, d);
  } else {
    if (!digits(i, s.size())) throw bad();
    q = mpq_class(mpz_class(s.substr(i), 10));
  }
  q.canonicalize();
  if (neg) q = -q;
  return from_mpq(q);
}

std::string Rational::str() const {
  if (big_) {
    if (big_->get_den() == 1) return big_->get_num().get_str();
    return big_->get_num().get_str() + "/" + big_->get_den().get_str();
  }
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

double Rational::to_double() const {
  if (big_) return big_->get_d();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

int Rational::sign() const noexcept {
  if (big_) return sgn(*big_);
  return (num_ > 0) - (num_ < 0);
}

bool Rational::is_integer() const {
  if (big_) return big_->get_den() == 1;
  return den_ == 1;
}

Rational Rational::reciprocal() const {
  if (is_zero()) throw std::domain_error("reciprocal of zero");
  if (big_) return from_mpq(1 / *big_);
  return num_ < 0 ? raw(-den_, -num_) : raw(den_, num_);
}

std::size_t Rational::hash() const noexcept {
  if (big_) {
    std::size_t h = std::hash<std::string>{}(big_->get_str());
    return h ^ 0x9e3779b97f4a7c15ULL;
  }
  std::size_t h = std::hash<std::int64_t>{}(num_);
  return h ^ (std::hash<std::int64_t>{}(den_) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

Rational operator+(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (a.den_ == 1 && b.den_ == 1) return Rational::from_wide(static_cast<i128>(a.num_) + b.num_, 1);
    std::int64_t g = static_cast<std::int64_t>(gcd64(static_cast<std::uint64_t>(a.den_),
                                                     static_cast<std::uint64_t>(b.den_)));
    if (g == 1) {
      return Rational::from_wide(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                                 static_cast<i128>(a.den_) * b.den_);
    }
    i128 t = static_cast<i128>(a.num_) * (b.den_ / g) + static_cast<i128>(b.num_) * (a.den_ / g);
    return Rational::from_wide(t, static_cast<i128>(a.den_ / g) * b.den_);
  }
  return Rational::from_mpq(a.to_mpq() + b.to_mpq());
}

Rational Rational::operator-() const {
  if (big_) return from_mpq(-*big_);
  return raw(-num_, den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (a.num_ == 0 || b.num_ == 0) return Rational();
    std::int64_t g1 = static_cast<std::int64_t>(gcd64(uabs(a.num_), static_cast<std::uint64_t>(b.den_)));
    std::int64_t g2 = static_cast<std::int64_t>(gcd64(uabs(b.num_), static_cast<std::uint64_t>(a.den_)));
    i128 n = static_cast<i128>(a.num_ / g1) * (b.num_ / g2);
    i128 d = static_cast<i128>(a.den_ / g2) * (b.den_ / g1);
    if (fits(n) && fits(d)) return Rational::raw(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
    return Rational::from_wide(n, d);
  }
  return Rational::from_mpq(a.to_mpq() * b.to_mpq());
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }

bool operator==(const Rational& a, const Rational& b) noexcept {
  if (a.big_ || b.big_) {
    if (!a.big_ || !b.big_) return false;
    return *a.big_ == *b.big_;
  }
  return a.num_ == b.num_ && a.den_ == b.den_;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    i128 l = static_cast<i128>(a.num_) * b.den_;
    i128 r = static_cast<i128>(b.num_) * a.den_;
    return l <=> r;
  }
  int c = cmp(a.to_mpq(), b.to_mpq());
  return c <=> 0;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

}  // namespace riskmdp
