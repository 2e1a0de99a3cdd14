#pragma once

// Lie algebras on an ordered finite basis. Countable algebras are carried as
// their degree-truncated part: every basis symbol has a degree, and any
// bracket that would leave degree <= bound raises TruncationExceeded.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/linalg.hpp"

namespace selfsim {

/// An element of a LieAlgebra: coordinates over its basis.
using LieElement = SparseVec;

class LieAlgebra {
 public:
  /// Result of a basis bracket; nullopt marks a bracket escaping the truncation.
  using BasisBracket = std::optional<SparseVec>;
  using Rule = std::function<BasisBracket(std::size_t, std::size_t)>;

  struct Truncation {
    std::vector<int> degrees;
    int bound = 0;
  };

  LieAlgebra() = default;

  /// Finite algebra from structure constants; unlisted pairs bracket to zero.
  /// `table` entries are (i, j, [e_i, e_j]); antisymmetric partners are NOT
  /// filled in, so a table can deliberately violate antisymmetry.
  static LieAlgebra from_table(FieldSpec field, std::vector<std::string> names,
                               const std::vector<std::tuple<std::size_t, std::size_t, SparseVec>>& table) {
    LieAlgebra L(field, std::move(names));
    for (const auto& [i, j, v] : table) L.at(i, j) = v;
    return L;
  }

  /// Finite algebra from a bracket rule on basis indices (rule must not overflow).
  static LieAlgebra from_rule(FieldSpec field, std::vector<std::string> names, const Rule& rule) {
    LieAlgebra L(field, std::move(names));
    L.fill(rule);
    for (const auto& e : L.table_)
      if (!e) throw DomainError("finite algebra rule reported a truncation overflow");
    return L;
  }

  /// Degree-truncated part of a countable graded algebra.
  static LieAlgebra truncated(FieldSpec field, std::vector<std::string> names, Truncation trunc, const Rule& rule) {
    if (trunc.degrees.size() != names.size()) throw DomainError("one degree per basis symbol required");
    LieAlgebra L(field, std::move(names));
    L.trunc_ = std::move(trunc);
    L.fill(rule);
    return L;
  }

  const FieldSpec& field() const { return field_; }
  std::size_t dim() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }
  bool is_truncated() const { return trunc_.has_value(); }
  const std::optional<Truncation>& truncation() const { return trunc_; }
  std::optional<int> degree(std::size_t i) const {
    if (!trunc_) return std::nullopt;
    return trunc_->degrees.at(i);
  }

  /// Raw table entry (nullopt = escapes truncation).
  const BasisBracket& basis_bracket_entry(std::size_t i, std::size_t j) const { return table_.at(i * dim() + j); }

  SparseVec basis_bracket(std::size_t i, std::size_t j) const {
    const auto& e = basis_bracket_entry(i, j);
    if (!e)
      throw TruncationExceeded("[" + name(i) + ", " + name(j) + "] leaves degree <= " +
                               std::to_string(trunc_ ? trunc_->bound : 0));
    return *e;
  }

  LieElement basis(std::size_t i) const { return SparseVec::unit(i, Scalar::one(field_)); }

  LieElement bracket(const LieElement& a, const LieElement& b) const {
    LieElement out;
    for (const auto& [i, ca] : a)
      for (const auto& [j, cb] : b) out.axpy(ca * cb, basis_bracket(i, j));
    return out;
  }

  /// ad(a) as an operator on coordinate vectors.
  LinearOp ad(const LieElement& a) const {
    return [this, a](const SparseVec& v) { return bracket(a, v); };
  }

  std::string format(const LieElement& v) const {
    if (v.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [i, c] : v) {
      if (!first) os << " + ";
      first = false;
      if (!c.is_one()) os << c << "*";
      os << name(i);
    }
    return os.str();
  }

  /// Parses a basis symbol name or "c*name + c*name" combination.
  LieElement parse_element(const std::string& text) const;

  std::shared_ptr<const LieAlgebra> share() const { return std::make_shared<const LieAlgebra>(*this); }

 private:
  LieAlgebra(FieldSpec field, std::vector<std::string> names)
      : field_(field), names_(std::move(names)), table_(names_.size() * names_.size(), SparseVec{}) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!lookup_.emplace(names_[i], i).second) throw DomainError("duplicate basis symbol '" + names_[i] + "'");
    }
  }

  BasisBracket& at(std::size_t i, std::size_t j) { return table_.at(i * dim() + j); }

  void fill(const Rule& rule) {
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) at(i, j) = rule(i, j);
  }

  FieldSpec field_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<BasisBracket> table_;
  std::optional<Truncation> trunc_;
};

inline LieElement LieAlgebra::parse_element(const std::string& text) const {
  LieElement out;
  std::string term;
  auto flush = [&](std::string t, bool negate) {
    // trim
    const auto b = t.find_first_not_of(' ');
    if (b == std::string::npos) return;
    t = t.substr(b, t.find_last_not_of(' ') - b + 1);
    Scalar coef = Scalar::one(field_);
    const auto star = t.find('*');
    std::string sym = t;
    if (star != std::string::npos) {
      coef = Scalar::parse(field_, t.substr(0, star));
      sym = t.substr(star + 1);
    }
    const auto idx = index_of(sym);
    if (!idx) throw DomainError("unknown basis symbol '" + sym + "'");
    out.add(*idx, negate ? -coef : coef);
  };
  bool negate = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char ch = text[k];
    // '+'/'-' separate terms only when surrounded by spaces, so names like "e-1" survive.
    if ((ch == '+' || ch == '-') && k > 0 && text[k - 1] == ' ' && k + 1 < text.size() && text[k + 1] == ' ') {
      flush(term, negate);
      term.clear();
      negate = ch == '-';
      continue;
    }
    term.push_back(ch);
  }
  flush(term, negate);
  return out;
}

/// Outcome of verify_axioms.
struct AxiomReport {
  bool ok = true;
  std::string violation;  // empty on success
  std::size_t pairs_checked = 0;
  std::size_t triples_checked = 0;
  std::size_t triples_skipped = 0;  // nested bracket escaped the truncation
};

/// Exhaustive antisymmetry and Jacobi check over the (truncated) basis.
inline AxiomReport verify_axioms(const LieAlgebra& L) {
  AxiomReport rep;
  const std::size_t n = L.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      ++rep.pairs_checked;
      const auto& ij = L.basis_bracket_entry(i, j);
      const auto& ji = L.basis_bracket_entry(j, i);
      const bool bad = ij.has_value() != ji.has_value() || (ij && !(*ij + *ji).is_zero());
      if (bad) {
        rep.ok = false;
        rep.violation = "antisymmetry violated at (" + L.name(i) + ", " + L.name(j) + ")";
        return rep;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        try {
          const auto a = L.basis(i), b = L.basis(j), c = L.basis(k);
          SparseVec s = L.bracket(a, L.bracket(b, c));
          s += L.bracket(b, L.bracket(c, a));
          s += L.bracket(c, L.bracket(a, b));
          ++rep.triples_checked;
          if (!s.is_zero()) {
            rep.ok = false;
            rep.violation = "Jacobi identity fails at (" + L.name(i) + ", " + L.name(j) + ", " + L.name(k) +
                            "): sum = " + L.format(s);
            return rep;
          }
        } catch (const TruncationExceeded&) {
          ++rep.triples_skipped;
        }
      }
  return rep;
}

/// y_1^{e_1} o (y_2^{e_2} o ( ... (y_n^{e_n} o h))): iterated adjoint action,
/// innermost factor applied first. An empty word returns h.
inline LieElement ad_word(const LieAlgebra& L, const std::vector<LieElement>& ys, const std::vector<int>& exps,
                          LieElement h) {
  if (ys.size() != exps.size()) throw DomainError("ad_word: one exponent per generator required");
  for (std::size_t k = ys.size(); k-- > 0;)
    for (int r = 0; r < exps[k]; ++r) {
      if (h.is_zero()) return h;
      h = L.bracket(ys[k], h);
    }
  return h;
}

/// A subspace of L spanned by basis vectors of a Lie algebra is an ideal
/// iff [e_b, v] stays inside for all basis e_b. Returns the first witness
/// (b, v) otherwise; pairs escaping truncation are skipped and counted.
struct IdealCheck {
  bool ok = true;
  std::optional<std::pair<std::size_t, std::size_t>> witness;  // (basis index, subspace basis position)
  LieElement witness_value;
  std::size_t skipped = 0;
};

inline IdealCheck check_ideal(const LieAlgebra& L, const Subspace& S) {
  IdealCheck out;
  for (std::size_t b = 0; b < L.dim(); ++b)
    for (std::size_t k = 0; k < S.dim(); ++k) {
      try {
        LieElement v = L.bracket(L.basis(b), S.basis()[k]);
        if (!S.contains(v)) {
          out.ok = false;
          out.witness = {b, k};
          out.witness_value = v;
          return out;
        }
      } catch (const TruncationExceeded&) {
        ++out.skipped;
      }
    }
  return out;
}

}  // namespace selfsim
