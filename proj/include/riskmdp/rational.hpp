#pragma once

#include <compare>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace riskmdp {

/// Exact rational number, always normalized (coprime, positive denominator).
///
/// Values whose numerator and denominator fit into 63 bits are stored inline;
/// anything larger spills into an immutable, shared GMP rational.  The two
/// representations never overlap, so equality and hashing stay canonical.
class Rational {
 public:
  Rational() noexcept = default;

  template <std::integral T>
  Rational(T value) {  // NOLINT(google-explicit-constructor)
    if constexpr (std::is_signed_v<T>) {
      if (static_cast<std::int64_t>(value) != std::numeric_limits<std::int64_t>::min()) {
        num_ = static_cast<std::int64_t>(value);
        return;
      }
    } else {
      if (static_cast<std::uint64_t>(value) <= static_cast<std::uint64_t>(kMax)) {
        num_ = static_cast<std::int64_t>(value);
        return;
      }
    }
    *this = from_mpq(mpq_class(std::to_string(value)));
  }

  Rational(std::int64_t num, std::int64_t den);
  explicit Rational(const mpq_class& value) { *this = from_mpq(value); }

  /// Accepts "a", "a/b" and exact decimals such as "-0.05".
  /// Throws std::invalid_argument on anything else.
  static Rational parse(std::string_view text);

  std::string str() const;
  double to_double() const;
  mpq_class to_mpq() const;

  int sign() const noexcept;
  bool is_zero() const noexcept { return !big_ && num_ == 0; }
  bool is_one() const noexcept { return !big_ && num_ == 1 && den_ == 1; }
  bool is_integer() const;
  bool is_small() const noexcept { return !big_; }

  Rational abs() const { return sign() < 0 ? -*this : *this; }
  Rational reciprocal() const;

  std::size_t hash() const noexcept;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const;

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) noexcept;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  friend std::ostream& operator<<(std::ostream& os, const Rational& r);

 private:
  static constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

  static Rational from_mpq(const mpq_class& q);
  static Rational from_wide(__int128 num, __int128 den);
  static Rational raw(std::int64_t num, std::int64_t den) noexcept {
    Rational r;
    r.num_ = num;
    r.den_ = den;
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  std::shared_ptr<const mpq_class> big_;
};

inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

}  // namespace riskmdp

template <>
struct std::hash<riskmdp::Rational> {
  std::size_t operator()(const riskmdp::Rational& r) const noexcept { return r.hash(); }
};
