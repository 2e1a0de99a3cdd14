#pragma once

// Named subalgebras of Der X: Witt, Jacobson-Witt, Frank, the sl_{n+1}
// realization and the Heisenberg realizations. Each comes as an abstract
// LieAlgebra plus the derivation attached to every basis symbol.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/linalg.hpp"
#include "selfsim/trunc_poly.hpp"

namespace selfsim {

/// Square matrix over a field, row-major.
using Matrix = std::vector<std::vector<Scalar>>;

inline Matrix zero_matrix(std::size_t n, const FieldSpec& f) {
  return Matrix(n, std::vector<Scalar>(n, Scalar::zero(f)));
}

inline Matrix matrix_commutator(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix out(n, std::vector<Scalar>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Scalar s;
      for (std::size_t k = 0; k < n; ++k) s += a[i][k] * b[k][j] - b[i][k] * a[k][j];
      out[i][j] = s;
    }
  return out;
}

struct NamedDerivationAlgebra {
  std::string name;
  std::shared_ptr<const LieAlgebra> algebra;
  TruncPolyAlgebra X;
  std::vector<Derivation> realization;  // one derivation per basis symbol
  AxiomReport axioms;
  std::vector<Matrix> matrices;  // sl realization only: trace-zero matrix of each basis symbol

  Derivation image(const LieElement& a) const {
    Derivation d = X.zero_derivation();
    for (const auto& [i, c] : a) d.axpy(c, realization.at(i));
    return d;
  }
};

/// Abstract algebra spanned by linearly independent derivations. Throws
/// DomainError when the span is not closed under the bracket.
inline LieAlgebra algebra_from_derivations(const TruncPolyAlgebra& X, const std::vector<std::string>& names,
                                           const std::vector<Derivation>& ders) {
  SpanSolver solver;
  for (std::size_t i = 0; i < ders.size(); ++i)
    if (!solver.add_generator(X.derivation_vector(ders[i])))
      throw DomainError("derivation '" + names[i] + "' depends on earlier ones");
  return LieAlgebra::from_rule(X.field(), names, [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
    auto coords = solver.solve(X.derivation_vector(X.bracket(ders[i], ders[j])));
    if (!coords) throw DomainError("[" + names[i] + ", " + names[j] + "] leaves the span");
    return *coords;
  });
}

namespace detail {

inline NamedDerivationAlgebra finish(std::string name, TruncPolyAlgebra X, std::vector<std::string> names,
                                     std::vector<Derivation> ders) {
  NamedDerivationAlgebra out;
  out.name = std::move(name);
  out.algebra = std::make_shared<const LieAlgebra>(algebra_from_derivations(X, names, ders));
  out.X = std::move(X);
  out.realization = std::move(ders);
  out.axioms = verify_axioms(*out.algebra);
  return out;
}

inline void require_char_p(const FieldSpec& f, const std::string& what) {
  if (!f.is_prime_field()) throw InvalidParameter(what + " requires a field of positive characteristic");
}

inline void require_sl_gate(int n, const FieldSpec& f) {
  if (n < 1) throw InvalidParameter("n must be at least 1");
  if (f.is_prime_field() && (n + 1) % f.characteristic() == 0)
    throw InvalidParameter("hypothesis violated: char(k) does not divide n+1 (p = " +
                           std::to_string(f.characteristic()) + ", n+1 = " + std::to_string(n + 1) + ")");
}

inline std::string pair_name(const std::string& stem, int i, int j) {
  return stem + std::to_string(i) + "," + std::to_string(j);
}

}  // namespace detail

/// Witt algebra Der(k[x]/(x^p)): basis e_{-1}..e_{p-2}, e_i = x^{i+1} d/dx.
inline NamedDerivationAlgebra witt_algebra(const FieldSpec& f) {
  detail::require_char_p(f, "the Witt algebra");
  TruncPolyAlgebra X(f, 1);
  const int p = static_cast<int>(f.characteristic());
  std::vector<std::string> names;
  std::vector<Derivation> ders;
  for (int i = -1; i <= p - 2; ++i) {
    names.push_back("e" + std::to_string(i));
    ders.push_back(X.monomial_derivation(X.index({i + 1}), 0));
  }
  return detail::finish("witt", std::move(X), std::move(names), std::move(ders));
}

/// Full Der X for X = k[x_1..x_n]/(x_i^p): basis x^z d/dx_i.
inline NamedDerivationAlgebra jacobson_witt_algebra(int n, const FieldSpec& f) {
  detail::require_char_p(f, "the Jacobson-Witt algebra");
  TruncPolyAlgebra X(f, n);
  std::vector<std::string> names;
  std::vector<Derivation> ders;
  for (int i = 0; i < n; ++i)
    for (std::size_t m = 0; m < X.dim(); ++m) {
      const std::string mono = X.format_monomial(X.exponents(m));
      const std::string d = n == 1 ? "d" : "d" + std::to_string(i + 1);
      names.push_back(mono == "1" ? d : mono + "*" + d);
      ders.push_back(X.monomial_derivation(m, i));
    }
  return detail::finish("jacobson_witt", std::move(X), std::move(names), std::move(ders));
}

/// Frank algebra: y_i = d/dx_i, y_{i,j} = x_i d/dx_j (i != j), y_{j,j} - y_{1,1} (j >= 2).
inline NamedDerivationAlgebra frank_algebra(int n, const FieldSpec& f) {
  detail::require_char_p(f, "the Frank algebra");
  if (n < 1) throw InvalidParameter("n must be at least 1");
  TruncPolyAlgebra X(f, n);
  auto xd = [&](int i, int j) {  // x_i d/dx_j, 1-based
    Exponents z(n, 0);
    z[i - 1] = 1;
    return X.monomial_derivation(X.index(z), j - 1);
  };
  std::vector<std::string> names;
  std::vector<Derivation> ders;
  for (int i = 1; i <= n; ++i) {
    names.push_back("y" + std::to_string(i));
    ders.push_back(X.partial_derivation(i - 1));
  }
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j) {
        names.push_back(detail::pair_name("y", i, j));
        ders.push_back(xd(i, j));
      }
  for (int j = 2; j <= n; ++j) {
    names.push_back(detail::pair_name("y", j, j) + "-" + detail::pair_name("y", 1, 1));
    ders.push_back(xd(j, j) - xd(1, 1));
  }
  return detail::finish("frank", std::move(X), std::move(names), std::move(ders));
}

/// sl_{n+1} inside Der X: y_{n+1,i} = d/dx_i (named y_i), y_{i,j} = x_i d/dx_j,
/// y_{i,n+1} = x_i sum_j x_j d/dx_j, and y_{i,i} = x_i d/dx_i for i <= n.
/// Characteristic 0 uses X truncated at degree 3.
inline NamedDerivationAlgebra sl_realization(int n, const FieldSpec& f) {
  detail::require_sl_gate(n, f);
  TruncPolyAlgebra X(f, n, 3);
  const Scalar one = Scalar::one(f);
  auto xd = [&](int i, int j) {
    Exponents z(n, 0);
    z[i - 1] = 1;
    return X.monomial_derivation(X.index(z), j - 1);
  };
  auto euler = [&]() {
    Derivation e = X.zero_derivation();
    for (int j = 1; j <= n; ++j) e += xd(j, j);
    return e;
  };
  auto x_times = [&](int i, const Derivation& d) {
    Derivation out = X.zero_derivation();
    for (int k = 0; k < n; ++k) out.images[k] = X.mul(X.variable(i - 1), d.images[k]);
    return out;
  };
  const std::size_t N = n + 1;
  auto unit = [&](int a, int b) {
    Matrix m = zero_matrix(N, f);
    m[a - 1][b - 1] = one;
    return m;
  };
  const Scalar inv_n1 = Scalar(f, static_cast<long long>(n + 1)).inverse();

  std::vector<std::string> names;
  std::vector<Derivation> ders;
  std::vector<Matrix> mats;
  for (int i = 1; i <= n; ++i) {
    names.push_back("y" + std::to_string(i));
    ders.push_back(X.partial_derivation(i - 1));
    mats.push_back(unit(n + 1, i));
  }
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j) {
        names.push_back(detail::pair_name("y", i, j));
        ders.push_back(xd(i, j));
        mats.push_back(unit(i, j));
      }
  for (int i = 1; i <= n; ++i) {
    names.push_back(detail::pair_name("y", i, n + 1));
    ders.push_back(x_times(i, euler()));
    // With this sign convention x_i*Euler matches -E_{i,n+1}, not +E_{i,n+1}.
    Matrix m = unit(i, n + 1);
    m[i - 1][n] = -one;
    mats.push_back(m);
  }
  for (int i = 1; i <= n; ++i) {
    names.push_back(detail::pair_name("y", i, i));
    ders.push_back(xd(i, i));
    Matrix m = unit(i, i);
    for (std::size_t k = 0; k < N; ++k) m[k][k] -= inv_n1;
    mats.push_back(m);
  }
  auto out = detail::finish("sl_realization", std::move(X), std::move(names), std::move(ders));
  out.matrices = std::move(mats);
  return out;
}

/// Heisenberg realization on X with n = 2: y1 = d/dx1, y2 = d/dx2, y3 = x1 d/dx2.
/// With `central`, n = 3 and y4 = d/dx3 is appended before y3.
inline NamedDerivationAlgebra heisenberg_realization(const FieldSpec& f, bool central) {
  const int n = central ? 3 : 2;
  TruncPolyAlgebra X(f, n, 2);
  std::vector<std::string> names{"y1", "y2"};
  std::vector<Derivation> ders{X.partial_derivation(0), X.partial_derivation(1)};
  if (central) {
    names.push_back("y4");
    ders.push_back(X.partial_derivation(2));
  }
  names.push_back("y3");
  ders.push_back(X.monomial_derivation(X.index(central ? Exponents{1, 0, 0} : Exponents{1, 0}), 1));
  return detail::finish(central ? "heisenberg_central_realization" : "heisenberg_realization", std::move(X),
                        std::move(names), std::move(ders));
}

/// Dispatch by name: witt | jacobson_witt | frank | sl_realization | heisenberg_realization.
inline NamedDerivationAlgebra named_derivation_algebra(const std::string& name, const FieldSpec& f, int n = 1) {
  if (name == "witt") return witt_algebra(f);
  if (name == "jacobson_witt") return jacobson_witt_algebra(n, f);
  if (name == "frank") return frank_algebra(n, f);
  if (name == "sl_realization") return sl_realization(n, f);
  if (name == "heisenberg_realization") return heisenberg_realization(f, false);
  if (name == "heisenberg_central_realization") return heisenberg_realization(f, true);
  throw InvalidParameter("unknown derivation algebra '" + name + "'");
}

/// sl_{n+1} as gl_{n+1} modulo scalars: basis E_{i,j} (i != j) then E_{i,i}
/// (i <= n), with E_{n+1,n+1} = -(E_{1,1} + ... + E_{n,n}).
struct SlMatrixAlgebra {
  int n = 0;
  std::shared_ptr<const LieAlgebra> algebra;
  std::vector<std::pair<int, int>> units;  // 1-based (row, col) of each basis symbol

  std::optional<std::size_t> index(int a, int b) const {
    for (std::size_t k = 0; k < units.size(); ++k)
      if (units[k] == std::make_pair(a, b)) return k;
    return std::nullopt;
  }
  /// Class of the matrix unit E_{a,b}, including E_{n+1,n+1}.
  LieElement unit(int a, int b) const {
    const FieldSpec& f = algebra->field();
    if (a == n + 1 && b == n + 1) {
      LieElement v;
      for (int i = 1; i <= n; ++i) v.add(*index(i, i), -Scalar::one(f));
      return v;
    }
    return algebra->basis(*index(a, b));
  }
  /// Class of an arbitrary matrix modulo scalars.
  LieElement from_matrix(const Matrix& m) const {
    LieElement v;
    const Scalar last = m[n][n];
    for (int a = 1; a <= n + 1; ++a)
      for (int b = 1; b <= n + 1; ++b) {
        if (a == b) {
          if (a <= n) v.add(*index(a, a), m[a - 1][a - 1] - last);
        } else {
          v.add(*index(a, b), m[a - 1][b - 1]);
        }
      }
    return v;
  }
  /// Trace-zero representative.
  Matrix to_matrix(const LieElement& v) const {
    const FieldSpec& f = algebra->field();
    const std::size_t N = n + 1;
    Matrix m = zero_matrix(N, f);
    const Scalar inv = Scalar(f, static_cast<long long>(n + 1)).inverse();
    for (const auto& [k, c] : v) {
      const auto [a, b] = units.at(k);
      m[a - 1][b - 1] += c;
      if (a == b)
        for (std::size_t t = 0; t < N; ++t) m[t][t] -= c * inv;
    }
    return m;
  }
};

inline SlMatrixAlgebra sl_matrix_algebra(int n, const FieldSpec& f) {
  detail::require_sl_gate(n, f);
  SlMatrixAlgebra out;
  out.n = n;
  std::vector<std::string> names;
  for (int a = 1; a <= n + 1; ++a)
    for (int b = 1; b <= n + 1; ++b)
      if (a != b) {
        out.units.emplace_back(a, b);
        names.push_back(detail::pair_name("E", a, b));
      }
  for (int i = 1; i <= n; ++i) {
    out.units.emplace_back(i, i);
    names.push_back(detail::pair_name("E", i, i));
  }
  const std::size_t N = n + 1;
  auto rep = [&](std::size_t k) {
    Matrix m = zero_matrix(N, f);
    m[out.units[k].first - 1][out.units[k].second - 1] = Scalar::one(f);
    return m;
  };
  // The rule needs from_matrix, which needs the index table only.
  SlMatrixAlgebra probe = out;
  out.algebra = std::make_shared<const LieAlgebra>(
      LieAlgebra::from_rule(f, names, [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
        const Matrix c = matrix_commutator(rep(i), rep(j));
        LieElement v;
        const Scalar last = c[n][n];
        for (std::size_t k = 0; k < probe.units.size(); ++k) {
          const auto [a, b] = probe.units[k];
          v.add(k, a == b ? c[a - 1][a - 1] - last : c[a - 1][b - 1]);
        }
        return v;
      }));
  return out;
}

}  // namespace selfsim
