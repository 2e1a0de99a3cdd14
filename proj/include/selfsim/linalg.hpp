#pragma once

// Exact sparse linear algebra: sparse vectors, canonical echelon subspaces,
// kernels, and the two fixed-point constructions used by the analyses
// (smallest invariant superspace, greatest invariant subspace).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"

namespace selfsim {

using Index = std::uint64_t;

/// Finite sparse coefficient vector. Never stores zero coefficients.
class SparseVec {
 public:
  using Map = std::map<Index, Scalar>;
  using const_iterator = Map::const_iterator;

  SparseVec() = default;

  static SparseVec unit(Index i, const Scalar& c) {
    SparseVec v;
    v.add(i, c);
    return v;
  }

  void add(Index i, const Scalar& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(i, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void set(Index i, const Scalar& c) {
    if (c.is_zero())
      terms_.erase(i);
    else
      terms_[i] = c;
  }

  /// this += c * other
  void axpy(const Scalar& c, const SparseVec& other) {
    if (c.is_zero()) return;
    for (const auto& [i, v] : other.terms_) add(i, c * v);
  }

  Scalar get(Index i) const {
    auto it = terms_.find(i);
    return it == terms_.end() ? Scalar{} : it->second;
  }

  bool empty() const { return terms_.empty(); }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const_iterator begin() const { return terms_.begin(); }
  const_iterator end() const { return terms_.end(); }
  Index leading() const { return terms_.begin()->first; }
  const Map& terms() const { return terms_; }

  SparseVec& operator+=(const SparseVec& o) {
    for (const auto& [i, v] : o.terms_) add(i, v);
    return *this;
  }
  SparseVec& operator-=(const SparseVec& o) {
    for (const auto& [i, v] : o.terms_) add(i, -v);
    return *this;
  }
  SparseVec& operator*=(const Scalar& c) {
    if (c.is_zero()) {
      terms_.clear();
      return *this;
    }
    for (auto& [i, v] : terms_) v *= c;
    return *this;
  }
  friend SparseVec operator+(SparseVec a, const SparseVec& b) { return a += b; }
  friend SparseVec operator-(SparseVec a, const SparseVec& b) { return a -= b; }
  friend SparseVec operator*(const Scalar& c, SparseVec a) { return a *= c; }
  SparseVec operator-() const {
    SparseVec out = *this;
    for (auto& [i, v] : out.terms_) v = -v;
    return out;
  }

  friend bool operator==(const SparseVec& a, const SparseVec& b) { return a.terms_ == b.terms_; }

 private:
  Map terms_;
};

using LinearOp = std::function<SparseVec(const SparseVec&)>;

/// A subspace held as its reduced row echelon basis. Pivots are the
/// smallest index of each basis vector, normalized to 1 and cleared from
/// every other basis vector, so equal subspaces have identical bases.
class Subspace {
 public:
  Subspace() = default;
  explicit Subspace(std::size_t ambient_dim) : ambient_(ambient_dim) {}

  static Subspace span(std::size_t ambient_dim, const std::vector<SparseVec>& gens) {
    Subspace s(ambient_dim);
    for (const auto& g : gens) s.add(g);
    return s;
  }
  static Subspace full(std::size_t ambient_dim, const FieldSpec& field) {
    Subspace s(ambient_dim);
    for (std::size_t i = 0; i < ambient_dim; ++i) s.add(SparseVec::unit(i, Scalar::one(field)));
    return s;
  }

  std::size_t ambient_dim() const { return ambient_; }
  std::size_t dim() const { return rows_.size(); }
  bool is_zero() const { return rows_.empty(); }
  const std::vector<SparseVec>& basis() const { return rows_; }
  std::vector<Index> pivots() const {
    std::vector<Index> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.leading());
    return out;
  }

  /// v minus its projection along the echelon basis.
  SparseVec reduce(SparseVec v) const {
    if (rows_.empty()) return v;
    for (const auto& row : rows_) {
      const Scalar c = v.get(row.leading());
      if (!c.is_zero()) v.axpy(-c, row);
    }
    return v;
  }

  bool contains(const SparseVec& v) const { return reduce(v).is_zero(); }
  bool contains(const Subspace& other) const {
    for (const auto& r : other.rows_)
      if (!contains(r)) return false;
    return true;
  }

  /// Adds v; returns false when v was already in the span.
  bool add(const SparseVec& v) {
    SparseVec r = reduce(v);
    if (r.is_zero()) return false;
    r *= r.begin()->second.inverse();
    const Index piv = r.leading();
    for (auto& row : rows_) {
      const Scalar c = row.get(piv);
      if (!c.is_zero()) row.axpy(-c, r);
    }
    auto pos = std::lower_bound(rows_.begin(), rows_.end(), piv,
                                [](const SparseVec& a, Index p) { return a.leading() < p; });
    rows_.insert(pos, std::move(r));
    return true;
  }

  /// Coordinates of v in basis(), or nullopt when v is outside the span.
  std::optional<std::vector<Scalar>> coordinates(const SparseVec& v) const {
    std::vector<Scalar> out;
    out.reserve(rows_.size());
    SparseVec check = v;
    for (const auto& row : rows_) {
      const Scalar c = v.get(row.leading());
      out.push_back(c);
      check.axpy(-c, row);
    }
    if (!check.is_zero()) return std::nullopt;
    return out;
  }

  Subspace sum(const Subspace& other) const {
    Subspace out = *this;
    out.ambient_ = std::max(ambient_, other.ambient_);
    for (const auto& r : other.rows_) out.add(r);
    return out;
  }

  friend bool operator==(const Subspace& a, const Subspace& b) { return a.rows_ == b.rows_; }

 private:
  std::size_t ambient_ = 0;
  std::vector<SparseVec> rows_;
};

/// Incremental solver: keeps a set of generators and expresses vectors in
/// their span as combinations of the generators (by generator index).
class SpanSolver {
 public:
  /// Returns false (and ignores g) when g depends on earlier generators.
  bool add_generator(const SparseVec& g) {
    SparseVec combo = SparseVec::unit(count_, one_of(g));
    SparseVec r = g;
    eliminate(r, combo);
    ++count_;
    if (r.is_zero()) return false;
    const Scalar inv = r.begin()->second.inverse();
    r *= inv;
    combo *= inv;
    const Index piv = r.leading();
    rows_.emplace(piv, Row{std::move(r), std::move(combo)});
    return true;
  }

  std::size_t generator_count() const { return count_; }
  std::size_t rank() const { return rows_.size(); }

  /// Combination of generators equal to v, or nullopt.
  std::optional<SparseVec> solve(const SparseVec& v) const {
    SparseVec r = v;
    SparseVec combo;
    for (const auto& [piv, row] : rows_) {
      const Scalar c = r.get(piv);
      if (c.is_zero()) continue;
      r.axpy(-c, row.vec);
      combo.axpy(c, row.combo);
    }
    if (!r.is_zero()) return std::nullopt;
    return combo;
  }

 private:
  struct Row {
    SparseVec vec;
    SparseVec combo;
  };

  static Scalar one_of(const SparseVec& g) {
    return g.is_zero() ? Scalar{} : Scalar::one(g.begin()->second.field());
  }

  // Row-reduces r (tracking combo) by pivots in increasing order.
  void eliminate(SparseVec& r, SparseVec& combo) const {
    for (const auto& [piv, row] : rows_) {
      const Scalar c = r.get(piv);
      if (c.is_zero()) continue;
      r.axpy(-c, row.vec);
      combo.axpy(-c, row.combo);
    }
  }

  std::map<Index, Row> rows_;
  std::size_t count_ = 0;
};

/// Kernel of the linear map sending unit vector e_i to images[i].
/// Result is a canonical subspace of the domain (dimension images.size()).
inline Subspace kernel(const std::vector<SparseVec>& images, const FieldSpec& field) {
  Subspace out(images.size());
  // Rows [image | e_i]; reduce on the image part, zero image rows are kernel.
  std::map<Index, std::pair<SparseVec, SparseVec>> pivots;
  for (std::size_t i = 0; i < images.size(); ++i) {
    SparseVec r = images[i];
    SparseVec combo = SparseVec::unit(i, Scalar::one(field));
    bool reduced = true;
    while (reduced && !r.is_zero()) {
      reduced = false;
      auto it = pivots.find(r.leading());
      if (it != pivots.end()) {
        const Scalar c = r.begin()->second;
        r.axpy(-c, it->second.first);
        combo.axpy(-c, it->second.second);
        reduced = true;
      }
    }
    if (r.is_zero()) {
      out.add(combo);
    } else {
      const Scalar inv = r.begin()->second.inverse();
      r *= inv;
      combo *= inv;
      const Index piv = r.leading();
      pivots.emplace(piv, std::make_pair(std::move(r), std::move(combo)));
    }
  }
  return out;
}

/// Rank of a family of vectors.
inline std::size_t rank_of(const std::vector<SparseVec>& vs) {
  Subspace s;
  for (const auto& v : vs) s.add(v);
  return s.dim();
}

/// U ∩ W.
inline Subspace intersect(const Subspace& u, const Subspace& w, const FieldSpec& field) {
  const auto& ub = u.basis();
  const auto& wb = w.basis();
  std::vector<SparseVec> cols;
  cols.reserve(ub.size() + wb.size());
  for (const auto& v : ub) cols.push_back(v);
  for (const auto& v : wb) cols.push_back(-v);
  const Subspace rel = kernel(cols, field);
  Subspace out(std::max(u.ambient_dim(), w.ambient_dim()));
  for (const auto& c : rel.basis()) {
    SparseVec v;
    for (const auto& [i, coef] : c)
      if (i < ub.size()) v.axpy(coef, ub[i]);
    out.add(v);
  }
  return out;
}

/// Smallest subspace containing `seed` and closed under every operator.
inline Subspace span_closure(const Subspace& seed, const std::vector<LinearOp>& ops) {
  Subspace out = seed;
  std::deque<SparseVec> frontier(seed.basis().begin(), seed.basis().end());
  while (!frontier.empty()) {
    SparseVec v = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& op : ops) {
      SparseVec w = op(v);
      if (out.add(w)) frontier.push_back(std::move(w));
    }
  }
  return out;
}

/// Largest V ⊆ start with op(V) ⊆ V for every operator. Iterates
/// V <- {v in V : op(v) in V for all ops} until the dimension stops dropping.
/// Operators are only ever applied to vectors of `start`.
inline Subspace greatest_invariant_subspace(const Subspace& start, const std::vector<LinearOp>& ops,
                                            const FieldSpec& field) {
  Subspace current = start;
  while (!current.is_zero()) {
    const auto& basis = current.basis();
    // Column j stacks the residues of op_k(b_j) modulo V, offset per operator.
    std::vector<SparseVec> cols(basis.size());
    Index offset = 0;
    Index stride = 0;
    std::vector<std::vector<SparseVec>> residues(ops.size());
    for (std::size_t k = 0; k < ops.size(); ++k) {
      for (const auto& b : basis) {
        residues[k].push_back(current.reduce(ops[k](b)));
        for (const auto& [i, c] : residues[k].back()) stride = std::max<Index>(stride, i + 1);
      }
    }
    for (std::size_t k = 0; k < ops.size(); ++k, offset += stride)
      for (std::size_t j = 0; j < basis.size(); ++j)
        for (const auto& [i, c] : residues[k][j]) cols[j].add(offset + i, c);
    const Subspace rel = kernel(cols, field);
    if (rel.dim() == basis.size()) break;
    Subspace next(current.ambient_dim());
    for (const auto& c : rel.basis()) {
      SparseVec v;
      for (const auto& [j, coef] : c) v.axpy(coef, basis[j]);
      next.add(v);
    }
    current = std::move(next);
  }
  return current;
}

/// Column-major sparse square matrix.
struct SparseMatrix {
  std::size_t dim = 0;
  std::vector<SparseVec> columns;

  SparseVec apply(const SparseVec& v) const {
    SparseVec out;
    for (const auto& [i, c] : v) out.axpy(c, columns.at(i));
    return out;
  }
  bool is_zero() const {
    return std::all_of(columns.begin(), columns.end(), [](const SparseVec& c) { return c.is_zero(); });
  }
  /// Entries flattened to a single vector keyed by column * dim + row.
  SparseVec flatten() const {
    SparseVec out;
    for (std::size_t c = 0; c < columns.size(); ++c)
      for (const auto& [r, v] : columns[c]) out.add(c * dim + r, v);
    return out;
  }
  SparseMatrix& axpy(const Scalar& s, const SparseMatrix& o) {
    if (columns.empty()) {
      dim = o.dim;
      columns.assign(o.dim, SparseVec{});
    }
    for (std::size_t c = 0; c < o.columns.size(); ++c) columns[c].axpy(s, o.columns[c]);
    return *this;
  }
  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

inline SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out;
  out.dim = a.dim;
  out.columns.resize(a.dim);
  for (std::size_t c = 0; c < a.dim; ++c) {
    out.columns[c] = a.apply(b.columns[c]);
    out.columns[c] -= b.apply(a.columns[c]);
  }
  return out;
}

}  // namespace selfsim
