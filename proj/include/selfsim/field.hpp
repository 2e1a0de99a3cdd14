#pragma once

// Exact scalars over F_p (small p) and over the rationals.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include "selfsim/errors.hpp"

namespace selfsim {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr std::uint32_t kMaxPrime = 97;

inline bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// The ground field: F_p when p > 0, the rationals when p == 0.
class FieldSpec {
 public:
  FieldSpec() = default;

  static FieldSpec prime(std::uint32_t p) {
    if (!is_prime(p)) throw InvalidParameter("field characteristic " + std::to_string(p) + " is not prime");
    if (p > kMaxPrime)
      throw InvalidParameter("prime " + std::to_string(p) + " exceeds the supported bound " +
                             std::to_string(kMaxPrime));
    FieldSpec f;
    f.p_ = p;
    return f;
  }
  static FieldSpec rational() { return FieldSpec{}; }

  /// p == 0 selects the rationals.
  static FieldSpec from_characteristic(std::uint32_t p) { return p == 0 ? rational() : prime(p); }

  bool is_prime_field() const { return p_ != 0; }
  bool is_rational() const { return p_ == 0; }
  std::uint32_t characteristic() const { return p_; }

  std::string to_string() const { return p_ == 0 ? std::string("Q") : "F_" + std::to_string(p_); }

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;

 private:
  std::uint32_t p_ = 0;
};

/// An exact field element. A default-constructed Scalar is an unbound zero
/// that adopts the field of whatever it is combined with.
class Scalar {
 public:
  Scalar() = default;

  Scalar(const FieldSpec& f, long long v) : p_(f.characteristic()) {
    if (p_ == 0)
      q_ = Rational(v);
    else
      r_ = reduce(v, p_);
  }
  Scalar(const FieldSpec& f, const Rational& v) : p_(f.characteristic()) {
    if (p_ == 0) {
      q_ = v;
    } else {
      const auto num = residue(boost::multiprecision::numerator(v), p_);
      const auto den = residue(boost::multiprecision::denominator(v), p_);
      if (den == 0) throw DomainError("denominator divisible by the characteristic");
      r_ = mul_mod(num, inv_mod(den, p_), p_);
    }
  }

  static Scalar zero(const FieldSpec& f) { return Scalar(f, 0LL); }
  static Scalar one(const FieldSpec& f) { return Scalar(f, 1LL); }

  /// Parses "3", "-2", or "1/2" into the given field.
  static Scalar parse(const FieldSpec& f, const std::string& text) {
    try {
      return Scalar(f, Rational(text));
    } catch (const std::runtime_error&) {
      throw DomainError("cannot parse scalar '" + text + "'");
    }
  }

  bool bound() const { return p_ != kUnbound; }
  FieldSpec field() const {
    if (!bound()) throw DomainError("unbound scalar has no field");
    return FieldSpec::from_characteristic(p_);
  }

  bool is_zero() const {
    if (!bound()) return true;
    return p_ == 0 ? q_ == 0 : r_ == 0;
  }
  bool is_one() const {
    if (!bound()) return false;
    return p_ == 0 ? q_ == 1 : r_ == 1;
  }

  /// Canonical residue for F_p elements.
  std::int64_t residue() const { return r_; }
  const Rational& rational() const { return q_; }

  Scalar inverse() const {
    if (is_zero()) throw DomainError("inverse of zero");
    Scalar out = *this;
    if (p_ == 0)
      out.q_ = 1 / q_;
    else
      out.r_ = inv_mod(r_, p_);
    return out;
  }

  Scalar operator-() const {
    Scalar out = *this;
    if (!bound()) return out;
    if (p_ == 0)
      out.q_ = -q_;
    else
      out.r_ = r_ == 0 ? 0 : p_ - r_;
    return out;
  }

  Scalar& operator+=(const Scalar& o) {
    if (!o.bound()) return *this;
    if (!bound()) return *this = o;
    check_same(o);
    if (p_ == 0)
      q_ += o.q_;
    else
      r_ = (r_ + o.r_) % p_;
    return *this;
  }
  Scalar& operator-=(const Scalar& o) { return *this += -o; }
  Scalar& operator*=(const Scalar& o) {
    if (!bound() || !o.bound()) {
      *this = Scalar{};
      return *this;
    }
    check_same(o);
    if (p_ == 0)
      q_ *= o.q_;
    else
      r_ = mul_mod(r_, o.r_, p_);
    return *this;
  }
  Scalar& operator/=(const Scalar& o) {
    if (!o.bound()) throw DomainError("division by zero");
    return *this *= o.inverse();
  }

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

  friend bool operator==(const Scalar& a, const Scalar& b) {
    if (!a.bound() || !b.bound()) return a.is_zero() && b.is_zero();
    if (a.p_ != b.p_) return false;
    return a.p_ == 0 ? a.q_ == b.q_ : a.r_ == b.r_;
  }

  /// Decimal string: "3" in F_p, "-1/2" over Q.
  std::string to_string() const {
    if (!bound()) return "0";
    if (p_ == 0) return q_.str();
    return std::to_string(r_);
  }

  friend std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.to_string(); }

 private:
  static constexpr std::uint32_t kUnbound = std::numeric_limits<std::uint32_t>::max();

  static std::int64_t reduce(long long v, std::uint32_t p) {
    const long long m = v % static_cast<long long>(p);
    return m < 0 ? m + p : m;
  }
  static std::int64_t residue(const BigInt& v, std::uint32_t p) {
    BigInt m = v % p;
    if (m < 0) m += p;
    return m.convert_to<std::int64_t>();
  }
  static std::int64_t mul_mod(std::int64_t a, std::int64_t b, std::uint32_t p) { return (a * b) % p; }
  static std::int64_t inv_mod(std::int64_t a, std::uint32_t p) {
    // Fermat: a^(p-2)
    std::int64_t result = 1, base = a % p;
    for (std::uint32_t e = p - 2; e > 0; e >>= 1) {
      if (e & 1U) result = mul_mod(result, base, p);
      base = mul_mod(base, base, p);
    }
    return result;
  }

  void check_same(const Scalar& o) const {
    if (p_ != o.p_)
      throw DomainError("scalars from different fields (" + FieldSpec::from_characteristic(p_).to_string() +
                        " vs " + FieldSpec::from_characteristic(o.p_).to_string() + ")");
  }

  std::uint32_t p_ = kUnbound;
  std::int64_t r_ = 0;
  Rational q_;
};

/// i! in the field; zero in characteristic p when i >= p.
inline Scalar factorial(unsigned i, const FieldSpec& field) {
  Scalar out = Scalar::one(field);
  for (unsigned k = 2; k <= i; ++k) out *= Scalar(field, static_cast<long long>(k));
  return out;
}

/// (i!)^{-1}. Rejects i >= p in characteristic p, where i! vanishes.
inline Scalar factorial_inverse(unsigned i, const FieldSpec& field) {
  if (field.is_prime_field() && i >= field.characteristic())
    throw DomainError(std::to_string(i) + "! is not invertible in " + field.to_string());
  return factorial(i, field).inverse();
}

}  // namespace selfsim
