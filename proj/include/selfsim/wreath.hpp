#pragma once

// The wreath product (X (x) L) x| Der X, self-similar structures
// psi : L -> (X (x) L) x| Der X, the recursive action of L on X^{(x)m}, and
// the finite portraits delta_i.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/linalg.hpp"
#include "selfsim/trunc_poly.hpp"

namespace selfsim {

/// sum_J x^J (x) a_J + delta.
struct WreathElement {
  std::map<std::size_t, LieElement> tensor;  // monomial index -> Lie coefficient, zeros dropped
  Derivation der;

  bool is_zero() const { return tensor.empty() && der.is_zero(); }
  friend bool operator==(const WreathElement&, const WreathElement&) = default;
};

/// Arithmetic in (X (x) L) x| Der X for a fixed X and L.
class WreathAlgebra {
 public:
  WreathAlgebra(const TruncPolyAlgebra& X, const LieAlgebra& L) : X_(&X), L_(&L) {}

  const TruncPolyAlgebra& X() const { return *X_; }
  const LieAlgebra& L() const { return *L_; }

  WreathElement zero() const { return WreathElement{{}, X_->zero_derivation()}; }
  WreathElement pure(const Derivation& d) const { return WreathElement{{}, d}; }
  WreathElement tensor(std::size_t mono, const LieElement& a) const {
    WreathElement w = zero();
    add_tensor(w, mono, a);
    return w;
  }
  /// u (x) a for a polynomial u.
  WreathElement tensor(const TruncPoly& u, const LieElement& a) const {
    WreathElement w = zero();
    for (const auto& [m, c] : u) add_tensor(w, m, c * a);
    return w;
  }

  static void add_tensor(WreathElement& w, std::size_t mono, const LieElement& a) {
    if (a.is_zero()) return;
    auto [it, inserted] = w.tensor.try_emplace(mono, a);
    if (!inserted) {
      it->second += a;
      if (it->second.is_zero()) w.tensor.erase(it);
    }
  }

  void axpy(WreathElement& w, const Scalar& c, const WreathElement& o) const {
    if (c.is_zero()) return;
    for (const auto& [m, a] : o.tensor) add_tensor(w, m, c * a);
    if (w.der.images.empty()) w.der = X_->zero_derivation();
    w.der.axpy(c, o.der);
  }
  WreathElement add(const WreathElement& a, const WreathElement& b) const {
    WreathElement out = a;
    axpy(out, Scalar::one(X_->field()), b);
    return out;
  }
  WreathElement sub(const WreathElement& a, const WreathElement& b) const {
    WreathElement out = a;
    axpy(out, -Scalar::one(X_->field()), b);
    return out;
  }
  WreathElement scale(const Scalar& c, const WreathElement& a) const {
    WreathElement out = zero();
    axpy(out, c, a);
    return out;
  }

  /// [f(x)a + delta, g(x)b + eta] = fg(x)[a,b] + delta(g)(x)b - eta(f)(x)a + [delta, eta].
  WreathElement bracket(const WreathElement& u, const WreathElement& v) const {
    WreathElement out = zero();
    for (const auto& [f, a] : u.tensor)
      for (const auto& [g, b] : v.tensor) {
        const long fg = X_->mono_mul(f, g);
        if (fg == TruncPolyAlgebra::kVanishes) continue;
        if (fg == TruncPolyAlgebra::kOverflow)
          throw TruncationExceeded("tensor product " + X_->format_monomial(X_->exponents(f)) + " * " +
                                   X_->format_monomial(X_->exponents(g)) + " leaves the degree truncation of X");
        add_tensor(out, static_cast<std::size_t>(fg), L_->bracket(a, b));
      }
    if (!u.der.is_zero())
      for (const auto& [g, b] : v.tensor)
        for (const auto& [m, c] : X_->apply(u.der, X_->monomial(g))) add_tensor(out, m, c * b);
    if (!v.der.is_zero())
      for (const auto& [f, a] : u.tensor)
        for (const auto& [m, c] : X_->apply(v.der, X_->monomial(f))) add_tensor(out, m, -c * a);
    out.der = X_->bracket(u.der, v.der);
    return out;
  }

  /// pi: the Der X component.
  const Derivation& project_der(const WreathElement& u) const { return u.der; }

  /// Coordinates: tensor part at mono * dim L + lie; derivation part after dim X * dim L.
  SparseVec to_vector(const WreathElement& u) const {
    SparseVec out;
    const Index dl = L_->dim();
    for (const auto& [m, a] : u.tensor)
      for (const auto& [i, c] : a) out.add(m * dl + i, c);
    const Index off = tensor_dim();
    for (const auto& [k, c] : X_->derivation_vector(u.der)) out.add(off + k, c);
    return out;
  }
  WreathElement from_vector(const SparseVec& v) const {
    WreathElement out = zero();
    const Index dl = L_->dim();
    const Index off = tensor_dim();
    SparseVec dv;
    for (const auto& [k, c] : v) {
      if (k < off)
        add_tensor(out, k / dl, SparseVec::unit(k % dl, c));
      else
        dv.add(k - off, c);
    }
    out.der = X_->derivation_from_vector(dv);
    return out;
  }
  Index tensor_dim() const { return static_cast<Index>(X_->dim()) * L_->dim(); }
  Index vector_dim() const { return tensor_dim() + X_->derivation_dim(); }

  std::string format(const WreathElement& u) const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, a] : u.tensor) {
      if (!first) os << " + ";
      first = false;
      const std::string mono = X_->format_monomial(X_->exponents(m));
      const std::string lie = L_->format(a);
      os << mono << "⊗" << (a.size() > 1 ? "(" + lie + ")" : lie);
    }
    if (!u.der.is_zero()) {
      if (!first) os << " + ";
      first = false;
      os << X_->format(u.der);
    }
    return first ? std::string("0") : os.str();
  }

 private:
  const TruncPolyAlgebra* X_;
  const LieAlgebra* L_;
};

/// psi given on the basis of L.
struct SelfSimilarStructure {
  std::shared_ptr<const LieAlgebra> L;
  TruncPolyAlgebra X;
  std::vector<WreathElement> psi;  // psi(e_i)
  std::string provenance;

  WreathAlgebra wreath() const { return WreathAlgebra(X, *L); }

  WreathElement image(const LieElement& a) const {
    const WreathAlgebra W = wreath();
    WreathElement out = W.zero();
    for (const auto& [i, c] : a) W.axpy(out, c, psi.at(i));
    return out;
  }
};

/// Default cap on dim X^{(x)m}: SELFSIM_MAX_DIM, else 729.
inline std::size_t default_max_level_dim() {
  if (const char* env = std::getenv("SELFSIM_MAX_DIM")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 729;
}

/// Vectors of X^{(x)m} are keyed by tuples of monomial indices; slot 1 is
/// the most significant digit in base dim X.
inline Index encode_tuple(const std::vector<std::size_t>& slots, std::size_t dimx) {
  Index k = 0;
  for (std::size_t s : slots) k = k * dimx + s;
  return k;
}
inline std::vector<std::size_t> decode_tuple(Index key, std::size_t m, std::size_t dimx) {
  std::vector<std::size_t> slots(m);
  for (std::size_t i = m; i-- > 0;) {
    slots[i] = key % dimx;
    key /= dimx;
  }
  return slots;
}

inline Index checked_level_dim(std::size_t dimx, int m, std::size_t cap) {
  if (m < 1) throw DomainError("level must be at least 1");
  Index d = 1;
  for (int k = 0; k < m; ++k) {
    d *= dimx;
    if (d > cap)
      throw DimensionExceeded("dim X^(" + std::to_string(m) + ") = " + std::to_string(dimx) + "^" +
                              std::to_string(m) + " exceeds the cap " + std::to_string(cap) +
                              " (raise SELFSIM_MAX_DIM)");
  }
  return d;
}

/// Lazily builds and caches the level operators nu_m(e_i) of a structure.
class LevelActionEngine {
 public:
  explicit LevelActionEngine(std::shared_ptr<const SelfSimilarStructure> s, std::size_t max_dim = 0)
      : s_(std::move(s)), cap_(max_dim ? max_dim : default_max_level_dim()) {}

  const SelfSimilarStructure& structure() const { return *s_; }
  std::size_t max_dim() const { return cap_; }
  Index level_dim(int m) const { return checked_level_dim(s_->X.dim(), m, cap_); }

  /// nu_m(e_i) as a sparse matrix on X^{(x)m}.
  const SparseMatrix& basis_operator(std::size_t i, int m) {
    std::lock_guard<std::mutex> lock(mu_);
    return basis_operator_locked(i, m);
  }

  /// nu_m(a).
  SparseMatrix operator_matrix(const LieElement& a, int m) {
    SparseMatrix out;
    out.dim = level_dim(m);
    out.columns.assign(out.dim, SparseVec{});
    for (const auto& [i, c] : a) out.axpy(c, basis_operator(i, m));
    return out;
  }

  /// a . v on X^{(x)m}.
  SparseVec act(const LieElement& a, int m, const SparseVec& v) {
    SparseVec out;
    for (const auto& [i, c] : a) out.axpy(c, basis_operator(i, m).apply(v));
    return out;
  }

 private:
  const SparseMatrix& basis_operator_locked(std::size_t i, int m) {
    auto key = std::make_pair(i, m);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const TruncPolyAlgebra& X = s_->X;
    const std::size_t dx = X.dim();
    const Index dim = level_dim(m);
    const Index rest_dim = dim / dx;
    const WreathElement& w = s_->psi.at(i);
    SparseMatrix mat;
    mat.dim = dim;
    mat.columns.assign(dim, SparseVec{});
    // Lower-level operators of the coefficients a_J, assembled once.
    std::vector<std::pair<std::size_t, SparseMatrix>> lower;
    if (m > 1)
      for (const auto& [mono, a] : w.tensor) {
        SparseMatrix op;
        op.dim = rest_dim;
        op.columns.assign(rest_dim, SparseVec{});
        for (const auto& [j, c] : a) op.axpy(c, basis_operator_locked(j, m - 1));
        lower.emplace_back(mono, std::move(op));
      }
    std::vector<TruncPoly> der_images(dx);
    for (std::size_t u = 0; u < dx; ++u) der_images[u] = X.apply(w.der, X.monomial(u));
    for (Index col = 0; col < dim; ++col) {
      const std::size_t u1 = col / rest_dim;
      const Index rest = col % rest_dim;
      SparseVec& out = mat.columns[col];
      for (const auto& [mono, op] : lower) {
        const long prod = X.mono_mul(mono, u1);
        if (prod == TruncPolyAlgebra::kVanishes) continue;
        const SparseVec& tail = op.columns[rest];
        if (tail.is_zero()) continue;
        if (prod == TruncPolyAlgebra::kOverflow)
          throw TruncationExceeded("level action leaves the degree truncation of X");
        for (const auto& [r, c] : tail) out.add(static_cast<Index>(prod) * rest_dim + r, c);
      }
      for (const auto& [u, c] : der_images[u1]) out.add(u * rest_dim + rest, c);
    }
    return cache_.emplace(key, std::move(mat)).first->second;
  }

  std::shared_ptr<const SelfSimilarStructure> s_;
  std::size_t cap_;
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, SparseMatrix> cache_;
};

/// One-shot level action (builds operators as needed).
inline SparseVec level_action(const std::shared_ptr<const SelfSimilarStructure>& s, const LieElement& a, int m,
                              const SparseVec& v, std::size_t max_dim = 0) {
  LevelActionEngine eng(s, max_dim);
  return eng.act(a, m, v);
}

inline SparseMatrix level_operator_matrix(const std::shared_ptr<const SelfSimilarStructure>& s,
                                          const LieElement& a, int m, std::size_t max_dim = 0) {
  LevelActionEngine eng(s, max_dim);
  return eng.operator_matrix(a, m);
}

/// Components (delta_0(a), ..., delta_i(a)). Component j lives in
/// X^{(x)j} (x) Der X, keyed by tuple * dim(Der X) + derivation coordinate.
struct LevelPortrait {
  std::vector<SparseVec> components;

  bool is_zero() const {
    for (const auto& c : components)
      if (!c.is_zero()) return false;
    return true;
  }
};

inline LevelPortrait level_portrait(const SelfSimilarStructure& s, const LieElement& a, int depth) {
  if (depth < 0) throw DomainError("portrait depth must be nonnegative");
  const TruncPolyAlgebra& X = s.X;
  const Index dd = X.derivation_dim();
  const Index dx = X.dim();
  LevelPortrait out;
  // comp_0(e_i) = pi psi(e_i); comp_j(e_i) = sum_J x^J (x) comp_{j-1}(a_J).
  std::vector<SparseVec> prev(s.L->dim());
  for (std::size_t i = 0; i < s.L->dim(); ++i) prev[i] = X.derivation_vector(s.psi[i].der);
  auto combine = [&](const std::vector<SparseVec>& per_basis, const LieElement& v) {
    SparseVec r;
    for (const auto& [i, c] : v) r.axpy(c, per_basis[i]);
    return r;
  };
  out.components.push_back(combine(prev, a));
  Index level_dim = 1;  // dim X^{(x)(j-1)}
  for (int j = 1; j <= depth; ++j) {
    std::vector<SparseVec> next(s.L->dim());
    for (std::size_t i = 0; i < s.L->dim(); ++i)
      for (const auto& [mono, coef] : s.psi[i].tensor) {
        const SparseVec lower = combine(prev, coef);
        for (const auto& [k, c] : lower) {
          const Index tuple = k / dd, d = k % dd;
          next[i].add((static_cast<Index>(mono) * level_dim + tuple) * dd + d, c);
        }
      }
    prev = std::move(next);
    level_dim *= dx;
    out.components.push_back(combine(prev, a));
  }
  return out;
}

/// Bracket of truncated portraits (components 0..depth) in prod_j X^{(x)j} (x) Der X:
/// equal lengths multiply slotwise and bracket the derivations; when a is
/// shorter, its derivation acts on the first slot of b beyond a's length.
inline LevelPortrait portrait_bracket(const TruncPolyAlgebra& X, const LevelPortrait& a, const LevelPortrait& b) {
  const std::size_t depth = std::min(a.components.size(), b.components.size());
  const Index dd = X.derivation_dim();
  const Index dx = X.dim();
  LevelPortrait out;
  out.components.assign(depth, SparseVec{});
  auto pow = [&](std::size_t e) {
    Index r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= dx;
    return r;
  };
  // Slotwise product of the first j slots; nullopt when a slot vanishes.
  auto slot_product = [&](Index ta, std::size_t j, Index tb_prefix) -> std::optional<Index> {
    Index out_key = 0;
    for (std::size_t s = 0; s < j; ++s) {
      const Index scale = pow(j - 1 - s);
      const std::size_t ua = static_cast<std::size_t>((ta / scale) % dx);
      const std::size_t ub = static_cast<std::size_t>((tb_prefix / scale) % dx);
      const long prod = X.mono_mul(ua, ub);
      if (prod == TruncPolyAlgebra::kVanishes) return std::nullopt;
      if (prod == TruncPolyAlgebra::kOverflow) throw TruncationExceeded("portrait bracket leaves the truncation of X");
      out_key = out_key * dx + static_cast<Index>(prod);
    }
    return out_key;
  };
  // [u (x) delta, v (x) eps] with len(u) = j < k = len(v) lands in component k.
  auto shorter_acts = [&](const SparseVec& cj, std::size_t j, const SparseVec& ck, std::size_t k, const Scalar& sign,
                          SparseVec& dst) {
    const Index tail = pow(k - j);
    const Index tail_rest = pow(k - j - 1);
    for (const auto& [ka, ca] : cj) {
      const Index ta = ka / dd;
      const Derivation delta = X.derivation_from_vector(SparseVec::unit(ka % dd, ca));
      for (const auto& [kb, cb] : ck) {
        const Index tb = kb / dd;
        const auto head = slot_product(ta, j, tb / tail);
        if (!head) continue;
        const std::size_t y_next = static_cast<std::size_t>((tb / tail_rest) % dx);
        const Index rest = tb % tail_rest;
        for (const auto& [u, c] : X.apply(delta, X.monomial(y_next)))
          dst.add(((*head * dx + u) * tail_rest + rest) * dd + kb % dd, sign * c * cb);
      }
    }
  };
  const Scalar one = Scalar::one(X.field());
  for (std::size_t j = 0; j < depth; ++j)
    for (std::size_t k = 0; k < depth; ++k) {
      const SparseVec& cj = a.components[j];
      const SparseVec& ck = b.components[k];
      if (cj.is_zero() || ck.is_zero()) continue;
      if (j == k) {
        for (const auto& [ka, ca] : cj)
          for (const auto& [kb, cb] : ck) {
            const auto head = slot_product(ka / dd, j, kb / dd);
            if (!head) continue;
            const Derivation br = X.bracket(X.derivation_from_vector(SparseVec::unit(ka % dd, ca)),
                                            X.derivation_from_vector(SparseVec::unit(kb % dd, cb)));
            for (const auto& [d, c] : X.derivation_vector(br)) out.components[j].add(*head * dd + d, c);
          }
      } else if (j < k) {
        shorter_acts(cj, j, ck, k, one, out.components[k]);
      } else {
        shorter_acts(ck, k, cj, j, -one, out.components[j]);
      }
    }
  return out;
}

}  // namespace selfsim
