#pragma once

// The alphabet algebra X = k[x_1..x_n]/(x_i^p) in characteristic p, or the
// total-degree truncation of k[x_1..x_n] in characteristic 0, together with
// its derivations.

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/linalg.hpp"

namespace selfsim {

/// Exponent vector of a monomial x_1^{z_1} ... x_n^{z_n}.
using Exponents = std::vector<int>;

/// Coordinates over the monomial basis of a TruncPolyAlgebra.
using TruncPoly = SparseVec;

/// A derivation of X, stored as its values on x_1..x_n.
struct Derivation {
  std::vector<TruncPoly> images;

  bool is_zero() const {
    for (const auto& u : images)
      if (!u.is_zero()) return false;
    return true;
  }
  Derivation& operator+=(const Derivation& o) {
    for (std::size_t i = 0; i < images.size(); ++i) images[i] += o.images[i];
    return *this;
  }
  Derivation& operator-=(const Derivation& o) {
    for (std::size_t i = 0; i < images.size(); ++i) images[i] -= o.images[i];
    return *this;
  }
  Derivation& axpy(const Scalar& c, const Derivation& o) {
    for (std::size_t i = 0; i < images.size(); ++i) images[i].axpy(c, o.images[i]);
    return *this;
  }
  friend Derivation operator+(Derivation a, const Derivation& b) { return a += b; }
  friend Derivation operator-(Derivation a, const Derivation& b) { return a -= b; }
  friend Derivation operator*(const Scalar& c, Derivation a) {
    for (auto& u : a.images) u *= c;
    return a;
  }
  Derivation operator-() const {
    Derivation out = *this;
    for (auto& u : out.images) u = -u;
    return out;
  }
  friend bool operator==(const Derivation&, const Derivation&) = default;
};

class TruncPolyAlgebra {
 public:
  TruncPolyAlgebra() = default;

  /// Characteristic p: exponents in [0, p-1]. Characteristic 0: total degree <= degree_bound.
  TruncPolyAlgebra(FieldSpec field, int n, int degree_bound = 0) : field_(field), n_(n), bound_(degree_bound) {
    if (n < 1) throw InvalidParameter("X needs at least one variable");
    if (field.is_rational() && degree_bound < 0) throw InvalidParameter("degree bound must be nonnegative");
    radix_ = field.is_prime_field() ? static_cast<int>(field.characteristic()) : degree_bound + 1;
    enumerate();
  }

  const FieldSpec& field() const { return field_; }
  int n() const { return n_; }
  /// Largest admissible exponent of a single variable.
  int max_exponent() const { return radix_ - 1; }
  /// Total-degree bound in characteristic 0 (0 when unused).
  int degree_bound() const { return field_.is_rational() ? bound_ : 0; }
  bool is_degree_truncated() const { return field_.is_rational(); }
  std::size_t dim() const { return monos_.size(); }

  const Exponents& exponents(std::size_t mono) const { return monos_.at(mono); }
  std::optional<std::size_t> find(const Exponents& z) const {
    if (static_cast<int>(z.size()) != n_) return std::nullopt;
    int total = 0;
    for (int e : z) {
      if (e < 0 || e >= radix_) return std::nullopt;
      total += e;
    }
    if (field_.is_rational() && total > bound_) return std::nullopt;
    return lookup_.at(encode(z));
  }
  /// Index of a monomial; throws when it lies outside the truncation region.
  std::size_t index(const Exponents& z) const {
    auto i = find(z);
    if (!i) throw DomainError("monomial " + format_monomial(z) + " lies outside X");
    return *i;
  }
  std::size_t one_index() const { return 0; }
  /// Index of x_1^{p-1} ... x_n^{p-1} (char p only).
  std::size_t top_index() const {
    if (!field_.is_prime_field()) throw DomainError("top monomial exists only in characteristic p");
    return dim() - 1;
  }

  TruncPoly one() const { return monomial(0); }
  TruncPoly monomial(std::size_t idx, const Scalar& c) const { return SparseVec::unit(idx, c); }
  TruncPoly monomial(std::size_t idx) const { return SparseVec::unit(idx, Scalar::one(field_)); }
  TruncPoly monomial(const Exponents& z) const { return monomial(index(z)); }
  /// x_i (0-based). In characteristic 0 with bound 0 this throws.
  TruncPoly variable(int i) const {
    Exponents z(n_, 0);
    z.at(i) = 1;
    return monomial(z);
  }

  /// Product of two monomials: an index, kVanishes (relation x_i^p = 0) or kOverflow (char 0 bound).
  static constexpr long kVanishes = -1;
  static constexpr long kOverflow = -2;
  long mono_mul(std::size_t a, std::size_t b) const { return mul_table_[a * dim() + b]; }

  TruncPoly mul(const TruncPoly& u, const TruncPoly& v) const {
    TruncPoly out;
    for (const auto& [a, ca] : u)
      for (const auto& [b, cb] : v) {
        const long r = mono_mul(a, b);
        if (r == kVanishes) continue;
        if (r == kOverflow)
          throw TruncationExceeded("product " + format_monomial(exponents(a)) + " * " +
                                   format_monomial(exponents(b)) + " exceeds degree " + std::to_string(bound_));
        out.add(static_cast<Index>(r), ca * cb);
      }
    return out;
  }

  /// Constant coefficient.
  Scalar augmentation(const TruncPoly& u) const {
    const Scalar c = u.get(0);
    return c.bound() ? c : Scalar::zero(field_);
  }

  /// d/dx_i of a monomial, as a polynomial.
  TruncPoly partial(int i, std::size_t mono) const {
    Exponents z = exponents(mono);
    if (z[i] == 0) return {};
    const Scalar c(field_, static_cast<long long>(z[i]));
    --z[i];
    return monomial(index(z), c);
  }

  TruncPoly apply(const Derivation& d, const TruncPoly& u) const {
    check_derivation(d);
    TruncPoly out;
    for (const auto& [m, c] : u)
      for (int i = 0; i < n_; ++i) {
        if (d.images[i].is_zero()) continue;
        const TruncPoly di = partial(i, m);
        if (di.is_zero()) continue;
        out.axpy(c, mul(di, d.images[i]));
      }
    return out;
  }

  Derivation bracket(const Derivation& a, const Derivation& b) const {
    Derivation out = zero_derivation();
    for (int i = 0; i < n_; ++i) {
      out.images[i] = apply(a, b.images[i]);
      out.images[i] -= apply(b, a.images[i]);
    }
    return out;
  }

  Derivation zero_derivation() const { return Derivation{std::vector<TruncPoly>(n_)}; }
  /// d/dx_i.
  Derivation partial_derivation(int i) const { return monomial_derivation(0, i); }
  /// x^z d/dx_i.
  Derivation monomial_derivation(std::size_t mono, int i, const Scalar& c) const {
    Derivation d = zero_derivation();
    d.images.at(i) = monomial(mono, c);
    return d;
  }
  Derivation monomial_derivation(std::size_t mono, int i) const {
    return monomial_derivation(mono, i, Scalar::one(field_));
  }

  /// Flattened coordinates of a derivation: key = generator * dim + monomial.
  SparseVec derivation_vector(const Derivation& d) const {
    check_derivation(d);
    SparseVec out;
    for (int i = 0; i < n_; ++i)
      for (const auto& [m, c] : d.images[i]) out.add(static_cast<Index>(i) * dim() + m, c);
    return out;
  }
  Derivation derivation_from_vector(const SparseVec& v) const {
    Derivation d = zero_derivation();
    for (const auto& [k, c] : v) d.images.at(k / dim()).add(k % dim(), c);
    return d;
  }
  std::size_t derivation_dim() const { return static_cast<std::size_t>(n_) * dim(); }

  std::string variable_name(int i) const { return n_ == 1 ? std::string("x") : "x" + std::to_string(i + 1); }

  std::string format_monomial(const Exponents& z) const {
    std::ostringstream os;
    bool any = false;
    for (int i = 0; i < static_cast<int>(z.size()); ++i) {
      if (z[i] == 0) continue;
      if (any) os << "*";
      any = true;
      os << variable_name(i);
      if (z[i] > 1) os << "^" << z[i];
    }
    return any ? os.str() : "1";
  }

  std::string format(const TruncPoly& u) const {
    if (u.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : u) {
      if (!first) os << " + ";
      first = false;
      const std::string mono = format_monomial(exponents(m));
      if (mono == "1")
        os << c;
      else if (c.is_one())
        os << mono;
      else
        os << c << "*" << mono;
    }
    return os.str();
  }

  std::string format(const Derivation& d) const {
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i < n_; ++i) {
      if (d.images[i].is_zero()) continue;
      if (!first) os << " + ";
      first = false;
      const std::string dx = "d/d" + variable_name(i);
      if (d.images[i] == one())
        os << dx;
      else
        os << "(" << format(d.images[i]) << ")" << dx;
    }
    return first ? std::string("0") : os.str();
  }

  /// Comma-separated exponent key, e.g. "1,0".
  static std::string exponent_key(const Exponents& z) {
    std::string s;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(z[i]);
    }
    return s;
  }
  Exponents parse_exponent_key(const std::string& key) const {
    Exponents z;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) z.push_back(std::stoi(part));
    if (static_cast<int>(z.size()) != n_) throw DomainError("exponent key '" + key + "' has the wrong arity");
    return z;
  }

  friend bool operator==(const TruncPolyAlgebra& a, const TruncPolyAlgebra& b) {
    return a.field_ == b.field_ && a.n_ == b.n_ && a.degree_bound() == b.degree_bound();
  }

 private:
  std::size_t encode(const Exponents& z) const {
    std::size_t key = 0;
    for (int i = n_ - 1; i >= 0; --i) key = key * radix_ + z[i];
    return key;
  }

  void check_derivation(const Derivation& d) const {
    if (static_cast<int>(d.images.size()) != n_) throw DomainError("derivation has the wrong number of images");
  }

  // Mixed-radix enumeration, first variable fastest; char 0 keeps total degree <= bound.
  void enumerate() {
    Exponents z(n_, 0);
    while (true) {
      int total = 0;
      for (int e : z) total += e;
      if (!field_.is_rational() || total <= bound_) {
        lookup_.emplace(encode(z), monos_.size());
        monos_.push_back(z);
      }
      int k = 0;
      while (k < n_ && ++z[k] == radix_) z[k++] = 0;
      if (k == n_) break;
    }
    const std::size_t d = monos_.size();
    mul_table_.assign(d * d, kVanishes);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        Exponents s(n_);
        bool vanish = false;
        int total = 0;
        for (int i = 0; i < n_; ++i) {
          s[i] = monos_[a][i] + monos_[b][i];
          total += s[i];
          if (s[i] >= radix_) vanish = true;
        }
        if (field_.is_prime_field())
          mul_table_[a * d + b] = vanish ? kVanishes : static_cast<long>(lookup_.at(encode(s)));
        else
          mul_table_[a * d + b] = total > bound_ ? kOverflow : static_cast<long>(lookup_.at(encode(s)));
      }
  }

  FieldSpec field_;
  int n_ = 0;
  int bound_ = 0;
  int radix_ = 1;
  std::vector<Exponents> monos_;
  std::unordered_map<std::size_t, std::size_t> lookup_;
  std::vector<long> mul_table_;
};

}  // namespace selfsim
