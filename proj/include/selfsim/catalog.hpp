#pragma once

// Named example constructors. Every entry yields a Lie algebra and, where it
// applies, a virtual endomorphism with its condition profile and the
// resulting self-similar structure.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/derivation_algebras.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/virtual_endomorphism.hpp"
#include "selfsim/wreath.hpp"

namespace selfsim {

/// Entry parameters; unset values take the entry defaults. p = 0 means Q.
struct CatalogParams {
  std::optional<int> p, n, D, j0;
  std::optional<std::string> profile;
};

struct CatalogObject {
  std::string name;
  std::string anchor;
  FieldSpec field;
  std::map<std::string, std::string> params;  // resolved values, for reports
  std::shared_ptr<const LieAlgebra> L;
  std::optional<VirtualEndomorphism> ve;
  std::optional<ConditionProfile> profile;
  std::optional<ConditionReport> conditions;
  std::shared_ptr<const SelfSimilarStructure> structure;  // null when the conditions fail
  std::optional<SlMatrixAlgebra> sl;
};

struct CatalogEntry {
  std::string name;
  std::string anchor;
  std::string schema;
  std::function<CatalogObject(const CatalogParams&)> construct;
};

namespace detail {

inline FieldSpec field_of(int p) { return p == 0 ? FieldSpec::rational() : FieldSpec::prime(static_cast<std::uint32_t>(p)); }

inline std::string power_name(const std::string& var, int k) {
  if (k == 0) return "";
  if (k == 1) return var;
  return var + "^" + std::to_string(k);
}

/// Runs the profile check and, when it passes, the reconstruction.
inline void finish_with_profile(CatalogObject& obj) {
  obj.conditions = check_conditions(*obj.profile, *obj.ve);
  if (obj.conditions->ok) obj.structure = std::make_shared<SelfSimilarStructure>(build_psi(*obj.ve, *obj.profile));
}

inline int require_range(const std::optional<int>& v, int def, int lo, int hi, const std::string& what) {
  const int x = v.value_or(def);
  if (x < lo || x > hi)
    throw InvalidParameter(what + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " +
                           std::to_string(x) + ")");
  return x;
}

inline int require_p(const std::optional<int>& v, int def, bool allow_zero) {
  const int p = v.value_or(def);
  if (p == 0 && allow_zero) return 0;
  if (p == 0) throw InvalidParameter("this entry needs characteristic p > 0");
  field_of(p);  // validates primality
  return p;
}

}  // namespace detail

/// L = A x| Q: basis q_1..q_n, then a_0..a_D (a_k = x^k, degree k; q_i has degree i).
inline std::shared_ptr<const LieAlgebra> lamplighter_algebra(const FieldSpec& f, int n, int D) {
  std::vector<std::string> names;
  std::vector<int> deg;
  for (int i = 1; i <= n; ++i) {
    names.push_back("q" + std::to_string(i));
    deg.push_back(i);
  }
  for (int k = 0; k <= D; ++k) {
    names.push_back(k == 0 ? "1" : detail::power_name("x", k));
    deg.push_back(k);
  }
  const std::size_t nq = static_cast<std::size_t>(n);
  auto rule = [=](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
    const Scalar one = Scalar::one(f);
    if (i < nq && j >= nq) {  // [q_i, a_k] = a_{k+i}
      const int k = static_cast<int>(j - nq) + static_cast<int>(i) + 1;
      if (k > D) return std::nullopt;
      return SparseVec::unit(nq + k, one);
    }
    if (j < nq && i >= nq) {
      const int k = static_cast<int>(i - nq) + static_cast<int>(j) + 1;
      if (k > D) return std::nullopt;
      return SparseVec::unit(nq + k, -one);
    }
    return SparseVec{};
  };
  return std::make_shared<LieAlgebra>(LieAlgebra::truncated(f, names, {deg, D}, rule));
}

/// theta(a_k) = a_{k-1} (k >= 1), theta(q_i) = q_i; H spans a_1.. and Q; section a_0.
inline VirtualEndomorphism lamplighter_endomorphism(std::shared_ptr<const LieAlgebra> L, int n, int D, int m) {
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (int i = 0; i < n; ++i) pairs.emplace_back(L->basis(i), L->basis(i));
  for (int k = 1; k <= D; ++k) pairs.emplace_back(L->basis(n + k), L->basis(n + k - 1));
  return VirtualEndomorphism::from_pairs(L, pairs, {L->basis(n)}, {"1"}, 1, m);
}

inline CatalogObject make_lamplighter(const CatalogParams& prm, bool corrupt) {
  CatalogObject obj;
  obj.name = corrupt ? "lamplighter_corrupted" : "lamplighter";
  const int n = detail::require_range(prm.n, 1, 1, 8, "n");
  const int p = detail::require_p(prm.p, 3, true);
  const int D = detail::require_range(prm.D, 6, 1, 64, "D");
  if (p != 0 && p <= n)
    throw InvalidParameter("hypothesis violated: char(k) = 0 or char(k) = p > n (p = " + std::to_string(p) +
                           ", n = " + std::to_string(n) + ")");
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}, {"n", std::to_string(n)}, {"D", std::to_string(D)}};
  obj.anchor = "lamplighter algebra k[x] x| Q with [q_i, a] = x^i a; psi(q_i) = 1(x)q_i - x(x)a_{i-1}";
  obj.L = lamplighter_algebra(obj.field, n, D);
  obj.ve = lamplighter_endomorphism(obj.L, n, D, p == 0 ? 2 : p);
  obj.profile = ConditionProfile::abelian();
  detail::finish_with_profile(obj);
  if (corrupt) {
    obj.anchor = "negative control: lamplighter with the sign of x(x)a_0 in psi(q_1) flipped";
    auto s = std::make_shared<SelfSimilarStructure>(*obj.structure);
    const WreathAlgebra W = s->wreath();
    s->psi[0] = W.add(W.tensor(s->X.one_index(), obj.L->basis(0)), W.tensor(s->X.variable(0), obj.L->basis(n)));
    s->provenance = "sign-corrupted lamplighter";
    obj.structure = s;
  }
  return obj;
}

/// Abelian L with basis a_1..a_N, H = span{a_2..a_N}, theta(a_i) = a_{i-1}.
/// The countable version carries degrees (a_i has degree i) and bound N.
inline CatalogObject make_abelian_shift(const CatalogParams& prm, bool countable) {
  CatalogObject obj;
  obj.name = countable ? "abelian_shift" : "abelian_shift_finite";
  const int p = detail::require_p(prm.p, 3, true);
  const int N = countable ? detail::require_range(prm.D, 5, 2, 64, "D") : detail::require_range(prm.n, 3, 2, 64, "n");
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}, {countable ? "D" : "n", std::to_string(N)}};
  obj.anchor = countable ? "abelian shift on a countable basis, truncated: theta(a_i) = a_{i-1}"
                         : "abelian shift on a finite basis: theta(a_i) = a_{i-1}";
  std::vector<std::string> names;
  std::vector<int> deg;
  for (int i = 1; i <= N; ++i) {
    names.push_back("a" + std::to_string(i));
    deg.push_back(i);
  }
  auto zero = [](std::size_t, std::size_t) -> LieAlgebra::BasisBracket { return SparseVec{}; };
  obj.L = std::make_shared<LieAlgebra>(countable ? LieAlgebra::truncated(obj.field, names, {deg, N}, zero)
                                                 : LieAlgebra::from_rule(obj.field, names, zero));
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (int i = 2; i <= N; ++i) pairs.emplace_back(obj.L->basis(i - 1), obj.L->basis(i - 2));
  obj.ve = VirtualEndomorphism::from_pairs(obj.L, pairs, {obj.L->basis(0)}, {"a1"}, 1, p == 0 ? 2 : p);
  obj.profile = ConditionProfile::abelian();
  detail::finish_with_profile(obj);
  return obj;
}

/// Basis a, b, c = [a,b] (c central); H = span{b, c}, theta(b) = a, theta(c) = a + c.
inline CatalogObject make_heisenberg_q(const CatalogParams& prm) {
  CatalogObject obj;
  obj.name = "heisenberg_q";
  const int p = detail::require_p(prm.p, 3, true);
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}};
  obj.anchor = "three-dimensional Heisenberg algebra with theta(b) = a, theta([a,b]) = a + [a,b]";
  const Scalar one = Scalar::one(obj.field);
  obj.L = std::make_shared<LieAlgebra>(LieAlgebra::from_rule(
      obj.field, {"a", "b", "c"}, [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
        if (i == 0 && j == 1) return SparseVec::unit(2, one);
        if (i == 1 && j == 0) return SparseVec::unit(2, -one);
        return SparseVec{};
      }));
  const auto& L = *obj.L;
  obj.ve = VirtualEndomorphism::from_pairs(obj.L, {{L.basis(1), L.basis(0)}, {L.basis(2), L.basis(0) + L.basis(2)}},
                                           {L.basis(0)}, {"a"}, 1, p == 0 ? 2 : p);
  obj.profile = ConditionProfile::abelian();
  detail::finish_with_profile(obj);
  return obj;
}

/// Strictly upper triangular 3x3 matrices over F_p[x], entries of degree <= D.
/// Basis blocks x^k e12, x^k e13, x^k e23 (k = 0..D); H and theta taken
/// literally (a_ij in x^{j-i} F_p[x], b_ij = x^{i-j} a_ij).
inline CatalogObject make_gl3_nilpotent(const CatalogParams& prm) {
  CatalogObject obj;
  obj.name = "gl3_nilpotent";
  const int p = detail::require_p(prm.p, 3, false);
  const int D = detail::require_range(prm.D, 4, 2, 32, "D");
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}, {"D", std::to_string(D)}};
  obj.anchor = "strictly upper triangular gl3(F_p[x]) with H given by a_ij in x^{j-i}F_p[x]";
  const std::size_t B = static_cast<std::size_t>(D + 1);
  std::vector<std::string> names;
  std::vector<int> deg;
  for (const char* e : {"e12", "e13", "e23"})
    for (int k = 0; k <= D; ++k) {
      names.push_back(k == 0 ? std::string(e) : detail::power_name("x", k) + "*" + e);
      deg.push_back(k);
    }
  const Scalar one = Scalar::one(obj.field);
  auto rule = [=](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
    const std::size_t bi = i / B, bj = j / B;
    const std::size_t k = i % B + j % B;
    if (bi == 0 && bj == 2) {
      if (k > static_cast<std::size_t>(D)) return std::nullopt;
      return SparseVec::unit(B + k, one);
    }
    if (bi == 2 && bj == 0) {
      if (k > static_cast<std::size_t>(D)) return std::nullopt;
      return SparseVec::unit(B + k, -one);
    }
    return SparseVec{};
  };
  obj.L = std::make_shared<LieAlgebra>(LieAlgebra::truncated(obj.field, names, {deg, D}, rule));
  const auto& L = *obj.L;
  std::vector<std::pair<LieElement, LieElement>> pairs;
  const int shift[3] = {1, 2, 1};  // j - i for e12, e13, e23
  for (std::size_t b = 0; b < 3; ++b)
    for (int k = shift[b]; k <= D; ++k) pairs.emplace_back(L.basis(b * B + k), L.basis(b * B + k - shift[b]));
  obj.ve = VirtualEndomorphism::from_pairs(obj.L, pairs, {L.basis(0), L.basis(B), L.basis(B + 1), L.basis(2 * B)},
                                           {"e12", "e13", "x*e13", "e23"}, 3, p);
  obj.profile = ConditionProfile::heisenberg_central_profile();
  detail::finish_with_profile(obj);
  return obj;
}

inline CatalogObject make_sl(const CatalogParams& prm, bool diagonal) {
  CatalogObject obj;
  obj.name = diagonal ? "sl_diagonal" : "sl_theorem_C";
  const int n = detail::require_range(prm.n, 1, 1, 4, "n");
  const int p = detail::require_p(prm.p, 3, true);
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}, {"n", std::to_string(n)}};
  obj.anchor = diagonal ? "diagonal structure psi(a) = 1(x)a + a on sl_{n+1}"
                        : "sl_{n+1} with psi(E_{i,n+1}) = d/dx_i and b_ij = E_ji - delta_ij E_{n+1,n+1}";
  SlStructure s = diagonal ? build_psi_diagonal(n, obj.field) : build_psi_theorem_C(n, obj.field);
  obj.L = s.structure.L;
  obj.sl = s.sl;
  obj.structure = std::make_shared<SelfSimilarStructure>(std::move(s.structure));
  return obj;
}

/// L = X x| L_0 with X abelian, L_0 acting through the profile's derivations,
/// H = X and theta(f) = epsilon(f) 1. Passes every profile; never faithful,
/// since k 1 is a theta-invariant ideal inside H.
inline CatalogObject make_function_module(const CatalogParams& prm) {
  CatalogObject obj;
  obj.name = "function_module";
  const ProfileFamily fam = parse_profile_family(prm.profile.value_or("abelian_B"));
  const int p = detail::require_p(prm.p, 3, false);
  const int n = detail::require_range(prm.n, 1, 1, 3, "n");
  ConditionProfile prof{fam, prm.j0.value_or(0), n};
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}, {"n", std::to_string(n)}, {"profile", to_string(fam)}};
  if (fam == ProfileFamily::witt_sl2) obj.params["j0"] = std::to_string(prof.j0);
  obj.anchor = "functions on X as an abelian ideal, theta = augmentation";
  const FieldSpec& f = obj.field;
  const int section_size = fam == ProfileFamily::abelian_B ? n : 0;
  const ProfileRealization real = profile_realization(prof, f, section_size, p);
  const TruncPolyAlgebra& X = real.X;
  const std::size_t dx = X.dim();
  std::vector<std::string> names;
  for (std::size_t u = 0; u < dx; ++u) names.push_back(X.format_monomial(X.exponents(u)));
  for (const auto& nm : real.expected_names) names.push_back(nm);
  SpanSolver der;
  for (const auto& d : real.images) der.add_generator(X.derivation_vector(d));
  auto rule = [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
    if (i < dx && j < dx) return SparseVec{};
    if (i >= dx && j < dx) return X.apply(real.images[i - dx], X.monomial(j));
    if (i < dx && j >= dx) return -X.apply(real.images[j - dx], X.monomial(i));
    const auto combo = der.solve(X.derivation_vector(X.bracket(real.images[i - dx], real.images[j - dx])));
    if (!combo) throw DomainError("profile derivations do not span a subalgebra");
    SparseVec v;
    for (const auto& [k, c] : *combo) v.add(dx + k, c);
    return v;
  };
  obj.L = std::make_shared<LieAlgebra>(LieAlgebra::from_rule(f, names, rule));
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (std::size_t u = 0; u < dx; ++u)
    pairs.emplace_back(obj.L->basis(u), u == X.one_index() ? obj.L->basis(0) : LieElement{});
  std::vector<LieElement> section;
  for (std::size_t k = 0; k < real.images.size(); ++k) section.push_back(obj.L->basis(dx + k));
  obj.ve = VirtualEndomorphism::from_pairs(obj.L, pairs, section, real.expected_names, real.differential_count, p);
  obj.profile = prof;
  detail::finish_with_profile(obj);
  return obj;
}

/// Abelian L = k a_2 x| k a_1 with theta(a_2) = a_2: a_2 acts trivially.
inline CatalogObject make_abelian_fixed_point(const CatalogParams& prm) {
  CatalogObject obj;
  obj.name = "abelian_fixed_point";
  const int p = detail::require_p(prm.p, 3, false);
  obj.field = detail::field_of(p);
  obj.params = {{"p", std::to_string(p)}};
  obj.anchor = "two-dimensional abelian algebra with theta(a2) = a2";
  obj.L = std::make_shared<LieAlgebra>(LieAlgebra::from_rule(
      obj.field, {"a1", "a2"}, [](std::size_t, std::size_t) -> LieAlgebra::BasisBracket { return SparseVec{}; }));
  obj.ve = VirtualEndomorphism::from_pairs(obj.L, {{obj.L->basis(1), obj.L->basis(1)}}, {obj.L->basis(0)}, {"a1"},
                                           1, p);
  obj.profile = ConditionProfile::abelian();
  detail::finish_with_profile(obj);
  return obj;
}

inline const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"lamplighter", "lamplighter algebra k[x] x| Q with [q_i, a] = x^i a", "p (0 or prime > n, default 3), n (default 1), D (default 6)",
       [](const CatalogParams& c) { return make_lamplighter(c, false); }},
      {"lamplighter_corrupted", "negative control: sign of x(x)a_0 in psi(q_1) flipped", "as lamplighter",
       [](const CatalogParams& c) { return make_lamplighter(c, true); }},
      {"abelian_shift", "abelian shift theta(a_i) = a_{i-1}, countable basis truncated at D", "p (default 3), D (default 5)",
       [](const CatalogParams& c) { return make_abelian_shift(c, true); }},
      {"abelian_shift_finite", "abelian shift theta(a_i) = a_{i-1} on a_1..a_n", "p (default 3), n (default 3)",
       [](const CatalogParams& c) { return make_abelian_shift(c, false); }},
      {"heisenberg_q", "Heisenberg algebra with theta(b) = a, theta([a,b]) = a + [a,b]", "p (0 or prime, default 3)",
       [](const CatalogParams& c) { return make_heisenberg_q(c); }},
      {"gl3_nilpotent", "upper triangular gl3(F_p[x]) with H literal (a_ij in x^{j-i}F_p[x])", "p (prime, default 3), D (default 4)",
       [](const CatalogParams& c) { return make_gl3_nilpotent(c); }},
      {"sl_theorem_C", "sl_{n+1} with psi(E_{i,n+1}) = d/dx_i", "p (0 or prime not dividing n+1, default 3), n (default 1)",
       [](const CatalogParams& c) { return make_sl(c, false); }},
      {"sl_diagonal", "sl_{n+1} with psi(a) = 1(x)a + a", "p (0 or prime not dividing n+1, default 3), n (default 1)",
       [](const CatalogParams& c) { return make_sl(c, true); }},
      {"function_module", "X x| L_0 with theta the augmentation (not faithful)", "profile (default abelian_B), p (prime, default 3), n (default 1), j0 (default 0)",
       [](const CatalogParams& c) { return make_function_module(c); }},
      {"abelian_fixed_point", "k a2 x| k a1 with theta(a2) = a2 (not transitive, not faithful)", "p (prime, default 3)",
       [](const CatalogParams& c) { return make_abelian_fixed_point(c); }},
  };
  return entries;
}

inline CatalogObject construct(const std::string& name, const CatalogParams& params = {}) {
  for (const auto& e : catalog_entries())
    if (e.name == name) return e.construct(params);
  throw InvalidParameter("unknown catalog entry '" + name + "'");
}

}  // namespace selfsim
