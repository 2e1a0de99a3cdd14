#pragma once

// Virtual endomorphisms theta : H -> L, the condition profiles that decide
// whether theta extends to a self-similar structure, the reconstruction
// psi(h) = sum_J (J!)^{-1} x^J (x) theta(y^J o h), and the explicit sl_{n+1}
// structures.

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/derivation_algebras.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/linalg.hpp"
#include "selfsim/trunc_poly.hpp"
#include "selfsim/wreath.hpp"

namespace selfsim {

/// L = H x| L_0 together with theta on H.
class VirtualEndomorphism {
 public:
  VirtualEndomorphism() = default;

  /// theta given on pairs (h, theta(h)); the h need not be independent, but
  /// dependent pairs must be consistent. `section` is the ordered basis of
  /// L_0; its first `differential_count` entries are y_1..y_n.
  static VirtualEndomorphism from_pairs(std::shared_ptr<const LieAlgebra> L,
                                        const std::vector<std::pair<LieElement, LieElement>>& pairs,
                                        std::vector<LieElement> section, std::vector<std::string> section_names,
                                        int differential_count, int m) {
    VirtualEndomorphism ve;
    ve.L_ = std::move(L);
    ve.section_ = std::move(section);
    ve.section_names_ = std::move(section_names);
    ve.n_ = differential_count;
    ve.m_ = m;
    if (ve.section_names_.size() != ve.section_.size()) throw DomainError("one name per section vector required");
    if (differential_count < 0 || differential_count > static_cast<int>(ve.section_.size()))
      throw DomainError("differential count exceeds the section size");
    if (m < 1) throw InvalidParameter("truncation order m must be positive");
    SpanSolver solver;
    std::vector<LieElement> images;
    for (const auto& [h, th] : pairs) {
      if (!solver.add_generator(h)) {
        auto combo = solver.solve(h);
        LieElement expect;
        for (const auto& [k, c] : *combo) expect.axpy(c, images[k]);
        if (!(expect == th)) throw DomainError("inconsistent theta on dependent vectors");
      }
      images.push_back(th);
    }
    ve.H_ = Subspace(ve.L_->dim());
    for (const auto& [h, th] : pairs) ve.H_.add(h);
    for (const auto& row : ve.H_.basis()) {
      auto combo = solver.solve(row);
      LieElement t;
      for (const auto& [k, c] : *combo) t.axpy(c, images[k]);
      ve.theta_rows_.push_back(std::move(t));
    }
    return ve;
  }

  const LieAlgebra& L() const { return *L_; }
  std::shared_ptr<const LieAlgebra> L_ptr() const { return L_; }
  const Subspace& H() const { return H_; }
  const std::vector<LieElement>& theta_rows() const { return theta_rows_; }
  const std::vector<LieElement>& section() const { return section_; }
  const std::vector<std::string>& section_names() const { return section_names_; }
  int differential_count() const { return n_; }
  int m() const { return m_; }
  const FieldSpec& field() const { return L_->field(); }

  bool in_H(const LieElement& v) const { return H_.contains(v); }

  LieElement theta(const LieElement& h) const {
    auto coords = H_.coordinates(h);
    if (!coords) throw DomainError("theta applied outside H: " + L_->format(h));
    LieElement out;
    for (std::size_t k = 0; k < coords->size(); ++k) out.axpy((*coords)[k], theta_rows_[k]);
    return out;
  }
  LinearOp theta_op() const {
    return [this](const SparseVec& v) { return theta(v); };
  }

  /// y_1^{J_1} ... y_n^{J_n} o h.
  LieElement differential_word(const std::vector<int>& J, const LieElement& h) const {
    std::vector<LieElement> ys(section_.begin(), section_.begin() + n_);
    return ad_word(*L_, ys, J, h);
  }

 private:
  std::shared_ptr<const LieAlgebra> L_;
  Subspace H_;
  std::vector<LieElement> theta_rows_;
  std::vector<LieElement> section_;
  std::vector<std::string> section_names_;
  int n_ = 0;
  int m_ = 1;
};

enum class ProfileFamily { abelian_B, witt_sl2, frank, sl_np1, heisenberg, heisenberg_central };

inline std::string to_string(ProfileFamily f) {
  switch (f) {
    case ProfileFamily::abelian_B: return "abelian_B";
    case ProfileFamily::witt_sl2: return "witt_sl2";
    case ProfileFamily::frank: return "frank";
    case ProfileFamily::sl_np1: return "sl_np1";
    case ProfileFamily::heisenberg: return "heisenberg";
    case ProfileFamily::heisenberg_central: return "heisenberg_central";
  }
  return "?";
}

inline ProfileFamily parse_profile_family(const std::string& s) {
  for (auto f : {ProfileFamily::abelian_B, ProfileFamily::witt_sl2, ProfileFamily::frank, ProfileFamily::sl_np1,
                 ProfileFamily::heisenberg, ProfileFamily::heisenberg_central})
    if (to_string(f) == s) return f;
  throw InvalidParameter("unknown profile '" + s + "'");
}

struct ConditionProfile {
  ProfileFamily family = ProfileFamily::abelian_B;
  int j0 = 0;  // witt_sl2
  int n = 1;   // frank, sl_np1 (abelian_B takes n from the section)
  /// sl_np1 only: test the last identity with the coefficient sum_k i_k i_j
  /// exactly as printed in the source, instead of the corrected i_j(|J|-1).
  bool sl_printed_coefficient = false;

  static ConditionProfile abelian() { return {ProfileFamily::abelian_B}; }
  static ConditionProfile witt(int j0) { return {ProfileFamily::witt_sl2, j0}; }
  static ConditionProfile frank_profile(int n) { return {ProfileFamily::frank, 0, n}; }
  static ConditionProfile sl(int n) { return {ProfileFamily::sl_np1, 0, n}; }
  static ConditionProfile heisenberg_profile() { return {ProfileFamily::heisenberg}; }
  static ConditionProfile heisenberg_central_profile() { return {ProfileFamily::heisenberg_central}; }

  std::string to_string() const {
    std::string s = selfsim::to_string(family);
    if (family == ProfileFamily::witt_sl2) s += "(j0=" + std::to_string(j0) + ")";
    if (family == ProfileFamily::frank || family == ProfileFamily::sl_np1) s += "(n=" + std::to_string(n) + ")";
    return s;
  }
};

/// Re-expresses a derivation of one presentation of X in another with the same
/// field and variables (monomials matched by exponents).
inline Derivation transfer_derivation(const Derivation& d, const TruncPolyAlgebra& from, const TruncPolyAlgebra& to) {
  Derivation out = to.zero_derivation();
  for (int i = 0; i < from.n(); ++i)
    for (const auto& [m, c] : d.images[i]) out.images[i].add(to.index(from.exponents(m)), c);
  return out;
}

/// X and the derivations attached to the section basis for a profile.
struct ProfileRealization {
  TruncPolyAlgebra X;
  std::vector<Derivation> images;
  std::vector<std::string> expected_names;
  int differential_count = 0;
  std::vector<std::string> notes;
};

/// char 0 uses the total-degree bound max(2n(m-1), 2), enough for brackets of psi images.
inline ProfileRealization profile_realization(const ConditionProfile& prof, const FieldSpec& f, int section_size,
                                              int m) {
  ProfileRealization out;
  auto make_X = [&](int n) { return TruncPolyAlgebra(f, n, std::max(2 * n * (m - 1), 2)); };
  auto from_named = [&](const NamedDerivationAlgebra& nd, std::size_t count) {
    out.X = make_X(nd.X.n());
    for (std::size_t k = 0; k < count; ++k) {
      out.images.push_back(transfer_derivation(nd.realization[k], nd.X, out.X));
      out.expected_names.push_back(nd.algebra->name(k));
    }
  };
  switch (prof.family) {
    case ProfileFamily::abelian_B: {
      if (section_size < 1) throw InvalidParameter("abelian profile needs a nonempty section");
      out.X = make_X(section_size);
      for (int i = 0; i < section_size; ++i) {
        out.images.push_back(out.X.partial_derivation(i));
        out.expected_names.push_back("y" + std::to_string(i + 1));
      }
      out.differential_count = section_size;
      break;
    }
    case ProfileFamily::witt_sl2: {
      detail::require_char_p(f, "the witt_sl2 profile");
      const int p = static_cast<int>(f.characteristic());
      const bool ok_j0 = prof.j0 == p - 2 || (prof.j0 >= -1 && prof.j0 <= 1 && prof.j0 <= p - 2);
      if (!ok_j0)
        throw InvalidParameter("witt_sl2 requires j0 = p-2 or -1 <= j0 <= 1 (got j0 = " + std::to_string(prof.j0) +
                               ", p = " + std::to_string(p) + ")");
      if (p == 2)
        out.notes.push_back("p = 2: further choices of L_0 inside span{e-1, e0, e1} exist; only the listed j0 cases "
                            "are handled");
      from_named(witt_algebra(f), static_cast<std::size_t>(prof.j0 + 2));
      out.differential_count = 1;
      break;
    }
    case ProfileFamily::frank: {
      detail::require_char_p(f, "the frank profile");
      const auto nd = frank_algebra(prof.n, f);
      from_named(nd, nd.realization.size());
      out.differential_count = prof.n;
      break;
    }
    case ProfileFamily::sl_np1: {
      detail::require_char_p(f, "the sl_np1 profile");
      const auto nd = sl_realization(prof.n, f);
      from_named(nd, nd.realization.size());
      out.differential_count = prof.n;
      break;
    }
    case ProfileFamily::heisenberg:
    case ProfileFamily::heisenberg_central: {
      const bool central = prof.family == ProfileFamily::heisenberg_central;
      const auto nd = heisenberg_realization(f, central);
      from_named(nd, nd.realization.size());
      out.differential_count = central ? 3 : 2;
      break;
    }
  }
  return out;
}

enum class Status { pass, fail, undecided, skipped };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::undecided: return "undecided";
    case Status::skipped: return "skipped";
  }
  return "?";
}

/// One line of a verification report.
struct CheckResult {
  std::string name;
  Status status = Status::pass;
  std::string scope;
  std::string anchor;
  std::string details;
};

/// Outcome of check_conditions: ordered stage results, first failure wins.
struct ConditionReport {
  bool ok = true;
  std::vector<CheckResult> stages;
  std::vector<std::string> notes;

  const CheckResult* first_failure() const {
    for (const auto& s : stages)
      if (s.status == Status::fail) return &s;
    return nullptr;
  }
};

/// Outcome of verify_homomorphism.
struct HomomorphismReport {
  bool ok = true;
  std::size_t pairs_checked = 0;
  std::size_t pairs_skipped = 0;  // bracket escapes the truncation of L or X
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  std::string lhs, rhs;  // psi([a,b]) and [psi(a), psi(b)] at the witness

  std::string describe(const LieAlgebra& L) const {
    if (ok) return "all " + std::to_string(pairs_checked) + " basis pairs";
    return "psi([" + L.name(witness->first) + ", " + L.name(witness->second) + "]) = " + lhs + " but [psi(" +
           L.name(witness->first) + "), psi(" + L.name(witness->second) + ")] = " + rhs;
  }
};

/// psi([e_i, e_j]) = [psi(e_i), psi(e_j)] for all i < j.
inline HomomorphismReport verify_homomorphism(const SelfSimilarStructure& s) {
  HomomorphismReport rep;
  const WreathAlgebra W = s.wreath();
  const LieAlgebra& L = *s.L;
  for (std::size_t i = 0; i < L.dim(); ++i)
    for (std::size_t j = i + 1; j < L.dim(); ++j) {
      try {
        const WreathElement lhs = s.image(L.basis_bracket(i, j));
        const WreathElement rhs = W.bracket(s.psi[i], s.psi[j]);
        ++rep.pairs_checked;
        if (!(W.to_vector(lhs) == W.to_vector(rhs))) {
          rep.ok = false;
          rep.witness = {i, j};
          rep.lhs = W.format(lhs);
          rep.rhs = W.format(rhs);
          return rep;
        }
      } catch (const TruncationExceeded&) {
        ++rep.pairs_skipped;
      }
    }
  return rep;
}

namespace detail {

/// Enumerates all J in [0, hi]^n.
template <class F>
void for_each_tuple(int n, int hi, F&& f) {
  std::vector<int> J(n, 0);
  while (true) {
    f(J);
    int k = 0;
    while (k < n && ++J[k] > hi) J[k++] = 0;
    if (k == n) return;
  }
}

inline std::string tuple_string(const std::vector<int>& J) {
  std::string s = "(";
  for (std::size_t i = 0; i < J.size(); ++i) s += (i ? "," : "") + std::to_string(J[i]);
  return s + ")";
}

/// Identity checker over every H basis vector; counts truncation skips.
class IdentityRunner {
 public:
  explicit IdentityRunner(const VirtualEndomorphism& ve) : ve_(ve), L_(ve.L()) {}

  /// theta(y^J w o h), with w a list of section indices applied last-first.
  LieElement theta_of(const std::vector<int>& J, const std::vector<std::size_t>& w, const LieElement& h) const {
    LieElement v = h;
    for (std::size_t k = w.size(); k-- > 0;) v = L_.bracket(ve_.section()[w[k]], v);
    v = ve_.differential_word(J, v);
    return ve_.theta(v);
  }

  /// Runs `body(h, hname)` for each H basis vector; body returns an error text or "".
  template <class Body>
  bool run(const std::string& label, Body&& body) {
    for (const auto& h : ve_.H().basis()) {
      try {
        std::string err = body(h);
        ++checked_;
        if (!err.empty()) {
          failure_ = label + " fails at h = " + L_.format(h) + ": " + err;
          return false;
        }
      } catch (const TruncationExceeded&) {
        ++skipped_;
      }
    }
    return true;
  }

  std::string mismatch(const std::string& where, const LieElement& lhs, const LieElement& rhs) const {
    return where + ": lhs = " + L_.format(lhs) + ", rhs = " + L_.format(rhs);
  }

  std::size_t checked() const { return checked_; }
  std::size_t skipped() const { return skipped_; }
  const std::string& failure() const { return failure_; }
  const LieAlgebra& L() const { return L_; }

 private:
  const VirtualEndomorphism& ve_;
  const LieAlgebra& L_;
  std::size_t checked_ = 0;
  std::size_t skipped_ = 0;
  std::string failure_;
};

}  // namespace detail

inline ConditionReport check_conditions(const ConditionProfile& prof, const VirtualEndomorphism& ve) {
  ConditionReport rep;
  const LieAlgebra& L = ve.L();
  const FieldSpec& f = ve.field();
  const int m = ve.m();
  const bool truncated = L.is_truncated();
  const std::string trunc_scope =
      truncated ? "basis of degree <= " + std::to_string(L.truncation()->bound) : "full basis";
  auto fail = [&](CheckResult r) {
    r.status = Status::fail;
    rep.ok = false;
    rep.stages.push_back(std::move(r));
    return rep;
  };

  // Stage 1: the decomposition L = H x| L_0 and theta.
  {
    CheckResult r{"decomposition", Status::pass, trunc_scope, "semidirect decomposition and theta", ""};
    if (f.is_prime_field() && m != static_cast<int>(f.characteristic())) {
      r.details = "m = " + std::to_string(m) + " but characteristic p = " + std::to_string(f.characteristic()) +
                  " forces m = p";
      return fail(r);
    }
    Subspace total = ve.H();
    bool independent = true;
    for (const auto& s : ve.section()) independent = total.add(s) && independent;
    if (!independent || total.dim() != L.dim()) {
      r.details = "H + L_0 is not a direct sum equal to L (dim H = " + std::to_string(ve.H().dim()) +
                  ", dim L_0 = " + std::to_string(ve.section().size()) + ", dim L = " + std::to_string(L.dim()) +
                  ")";
      return fail(r);
    }
    const IdealCheck ideal = check_ideal(L, ve.H());
    if (!ideal.ok) {
      const auto [b, k] = *ideal.witness;
      r.details = "H is not an ideal: [" + L.name(b) + ", " + L.format(ve.H().basis()[k]) +
                  "] = " + L.format(ideal.witness_value) + " is not in H";
      return fail(r);
    }
    const Subspace L0 = Subspace::span(L.dim(), ve.section());
    for (std::size_t a = 0; a < ve.section().size(); ++a)
      for (std::size_t b = a + 1; b < ve.section().size(); ++b) {
        try {
          const LieElement v = L.bracket(ve.section()[a], ve.section()[b]);
          if (!L0.contains(v)) {
            r.details = "L_0 is not a subalgebra: [" + ve.section_names()[a] + ", " + ve.section_names()[b] +
                        "] = " + L.format(v);
            return fail(r);
          }
        } catch (const TruncationExceeded&) {
        }
      }
    const auto& hb = ve.H().basis();
    std::size_t skipped = ideal.skipped;
    for (std::size_t a = 0; a < hb.size(); ++a)
      for (std::size_t b = a + 1; b < hb.size(); ++b) {
        try {
          const LieElement lhs = ve.theta(L.bracket(hb[a], hb[b]));
          const LieElement rhs = L.bracket(ve.theta(hb[a]), ve.theta(hb[b]));
          if (!(lhs == rhs)) {
            r.details = "theta is not a homomorphism at (" + L.format(hb[a]) + ", " + L.format(hb[b]) +
                        "): theta([h1,h2]) = " + L.format(lhs) + ", [theta h1, theta h2] = " + L.format(rhs);
            return fail(r);
          }
        } catch (const TruncationExceeded&) {
          ++skipped;
        }
      }
    r.details = "H ideal, L_0 subalgebra, L = H + L_0 direct, theta a homomorphism";
    if (skipped) r.details += " (" + std::to_string(skipped) + " bracket(s) beyond the truncation skipped)";
    rep.stages.push_back(r);
  }

  // Stage 2: profile hypotheses on L_0.
  ProfileRealization real;
  {
    CheckResult r{"hypotheses", Status::pass, "section basis", "profile hypotheses on L_0", ""};
    try {
      real = profile_realization(prof, f, static_cast<int>(ve.section().size()), m);
    } catch (const Error& e) {
      r.details = e.what();
      return fail(r);
    }
    rep.notes = real.notes;
    if (real.images.size() != ve.section().size()) {
      r.details = "profile " + prof.to_string() + " expects " + std::to_string(real.images.size()) +
                  " section vectors, got " + std::to_string(ve.section().size());
      return fail(r);
    }
    if (real.differential_count != ve.differential_count()) {
      r.details = "profile expects " + std::to_string(real.differential_count) + " differentials y_i, got " +
                  std::to_string(ve.differential_count());
      return fail(r);
    }
    const TruncPolyAlgebra& X = real.X;
    SpanSolver der_span;
    for (std::size_t a = 0; a < real.images.size(); ++a)
      if (!der_span.add_generator(X.derivation_vector(real.images[a]))) {
        r.details = "section images in Der X are dependent";
        return fail(r);
      }
    SpanSolver sec;
    for (const auto& s : ve.section()) sec.add_generator(s);
    for (std::size_t a = 0; a < ve.section().size(); ++a)
      for (std::size_t b = a + 1; b < ve.section().size(); ++b) {
        const LieElement v = L.bracket(ve.section()[a], ve.section()[b]);
        const auto coords = sec.solve(v);
        Derivation img = X.zero_derivation();
        for (const auto& [k, c] : *coords) img.axpy(c, real.images[k]);
        const Derivation want = X.bracket(real.images[a], real.images[b]);
        if (!(X.derivation_vector(img) == X.derivation_vector(want))) {
          r.details = "section -> Der X is not a homomorphism at (" + ve.section_names()[a] + ", " +
                      ve.section_names()[b] + "): [" + ve.section_names()[a] + ", " + ve.section_names()[b] +
                      "] maps to " + X.format(img) + ", expected " + X.format(want);
          return fail(r);
        }
      }
    if (prof.family == ProfileFamily::abelian_B) {
      for (std::size_t a = 0; a < ve.section().size(); ++a)
        for (std::size_t b = a + 1; b < ve.section().size(); ++b)
          if (!L.bracket(ve.section()[a], ve.section()[b]).is_zero()) {
            r.details = "L_0 is not abelian";
            return fail(r);
          }
    }
    r.details = "L_0 realized in Der X as " + prof.to_string() + " (injective homomorphism)";
    rep.stages.push_back(r);
  }

  // Stage 3: the identities on theta.
  detail::IdentityRunner run(ve);
  const int n = ve.differential_count();
  const int p = static_cast<int>(f.characteristic());
  const Scalar one = Scalar::one(f);
  auto S = [&](long long v) { return Scalar(f, v); };
  bool ok = true;
  auto zero_check = [&](const std::string& label, std::vector<int> J, std::vector<std::size_t> w) {
    return run.run(label, [&](const LieElement& h) -> std::string {
      const LieElement v = run.theta_of(J, w, h);
      return v.is_zero() ? "" : run.mismatch("J = " + detail::tuple_string(J), v, LieElement{});
    });
  };

  switch (prof.family) {
    case ProfileFamily::abelian_B: {
      if (f.is_prime_field()) {
        for (int j = 0; j < n && ok; ++j) {
          std::vector<int> J(n, 0);
          J[j] = p;
          ok = zero_check("theta(y_" + std::to_string(j + 1) + "^p o h) = 0", J, {});
        }
      } else {
        // (sum c_j y_j)^m o h expands into the y^J o h with |J| = m.
        detail::for_each_tuple(n, m, [&](const std::vector<int>& J) {
          int tot = 0;
          for (int e : J) tot += e;
          if (ok && tot == m) ok = zero_check("theta(b^m o h) = 0 (monomial y^J, |J| = m)", J, {});
        });
      }
      break;
    }
    case ProfileFamily::witt_sl2: {
      ok = zero_check("theta(e-1^p o h) = 0", {p}, {});
      for (int j = 0; j <= prof.j0 && ok; ++j)
        for (int i = 0; i <= j && ok; ++i)
          ok = zero_check("theta(e-1^i e_j o h) = 0 for i <= j (i=" + std::to_string(i) +
                              ", j=" + std::to_string(j) + ")",
                          {i}, {static_cast<std::size_t>(j + 1)});
      for (int j = 0; j <= prof.j0 && ok; ++j)
        for (int i = j + 1; i <= p - 1 && ok; ++i)
          ok = run.run("i! theta(e-1^{i-j} o h) = (i-j-1)! theta(e-1^i e_j o h) (i=" + std::to_string(i) +
                           ", j=" + std::to_string(j) + ")",
                       [&](const LieElement& h) -> std::string {
                         const LieElement lhs = factorial(i, f) * run.theta_of({i - j}, {}, h);
                         const LieElement rhs =
                             factorial(i - j - 1, f) * run.theta_of({i}, {static_cast<std::size_t>(j + 1)}, h);
                         return lhs == rhs ? "" : run.mismatch("", lhs, rhs);
                       });
      break;
    }
    case ProfileFamily::frank:
    case ProfileFamily::sl_np1: {
      // Section order: y_1..y_n, then y_{k,j} (k != j) row by row, then the rest.
      auto ykj = [&](int k, int j) {  // 1-based, k != j
        std::size_t idx = n;
        for (int a = 1; a <= n; ++a)
          for (int b = 1; b <= n; ++b)
            if (a != b) {
              if (a == k && b == j) return idx;
              ++idx;
            }
        return idx;
      };
      const std::size_t tail = static_cast<std::size_t>(n + n * (n - 1));
      for (int i = 0; i < n && ok; ++i) {
        std::vector<int> J(n, 0);
        J[i] = p;
        ok = zero_check("theta(y_" + std::to_string(i + 1) + "^p o h) = 0", J, {});
      }
      for (int k = 1; k <= n && ok; ++k)
        for (int j = 1; j <= n && ok; ++j) {
          if (k == j) continue;
          detail::for_each_tuple(n, p - 1, [&](const std::vector<int>& J) {
            if (!ok) return;
            const std::string at = "J = " + detail::tuple_string(J) + ", (k,j) = (" + std::to_string(k) + "," +
                                   std::to_string(j) + ")";
            if (J[k - 1] >= 1 && J[j - 1] <= p - 2) {
              std::vector<int> J2 = J;
              --J2[k - 1];
              ++J2[j - 1];
              ok = run.run("theta(y^J y_{k,j} o h) = i_k theta(y^{J-e_k+e_j} o h)",
                           [&](const LieElement& h) -> std::string {
                             const LieElement lhs = run.theta_of(J, {ykj(k, j)}, h);
                             const LieElement rhs = S(J[k - 1]) * run.theta_of(J2, {}, h);
                             return lhs == rhs ? "" : run.mismatch(at, lhs, rhs);
                           });
            } else {
              ok = zero_check("theta(y^J y_{k,j} o h) = 0 when i_k = 0 or i_j = p-1 [" + at + "]", J, {ykj(k, j)});
            }
          });
        }
      if (prof.family == ProfileFamily::frank) {
        for (int j = 2; j <= n && ok; ++j) {
          const std::size_t idx = tail + (j - 2);
          detail::for_each_tuple(n, p - 1, [&](const std::vector<int>& J) {
            if (!ok) return;
            ok = run.run("theta(y^J (y_{j,j} - y_{1,1}) o h) = (i_j - i_1) theta(y^J o h) (j=" +
                             std::to_string(j) + ")",
                         [&](const LieElement& h) -> std::string {
                           const LieElement lhs = run.theta_of(J, {idx}, h);
                           const LieElement rhs = S(J[j - 1] - J[0]) * run.theta_of(J, {}, h);
                           return lhs == rhs ? "" : run.mismatch("J = " + detail::tuple_string(J), lhs, rhs);
                         });
          });
        }
      } else {
        // sl order continues with y_{j,n+1} (j = 1..n) then y_{j,j} (j = 1..n).
        for (int j = 1; j <= n && ok; ++j) {
          const std::size_t idx = tail + n + (j - 1);
          detail::for_each_tuple(n, p - 1, [&](const std::vector<int>& J) {
            if (!ok) return;
            ok = run.run("theta(y^J y_{j,j} o h) = i_j theta(y^J o h) (j=" + std::to_string(j) + ")",
                         [&](const LieElement& h) -> std::string {
                           const LieElement lhs = run.theta_of(J, {idx}, h);
                           const LieElement rhs = S(J[j - 1]) * run.theta_of(J, {}, h);
                           return lhs == rhs ? "" : run.mismatch("J = " + detail::tuple_string(J), lhs, rhs);
                         });
          });
        }
        for (int j = 1; j <= n && ok; ++j) {
          const std::size_t idx = tail + (j - 1);
          detail::for_each_tuple(n, p - 1, [&](const std::vector<int>& J) {
            if (!ok) return;
            const std::string at = "J = " + detail::tuple_string(J) + ", j = " + std::to_string(j);
            if (J[j - 1] == 0) {
              ok = zero_check("theta(y^J y_{j,n+1} o h) = 0 when i_j = 0 [" + at + "]", J, {idx});
              return;
            }
            int total = 0;
            for (int e : J) total += e;
            const long long coef =
                prof.sl_printed_coefficient ? static_cast<long long>(total) * J[j - 1]
                                            : static_cast<long long>(J[j - 1]) * (total - 1);
            std::vector<int> J2 = J;
            --J2[j - 1];
            ok = run.run(prof.sl_printed_coefficient
                             ? "theta(y^J y_{j,n+1} o h) = (sum_k i_k i_j) theta(y^{J-e_j} o h)"
                             : "theta(y^J y_{j,n+1} o h) = i_j (|J|-1) theta(y^{J-e_j} o h)",
                         [&](const LieElement& h) -> std::string {
                           const LieElement lhs = run.theta_of(J, {idx}, h);
                           const LieElement rhs = S(coef) * run.theta_of(J2, {}, h);
                           return lhs == rhs ? "" : run.mismatch(at, lhs, rhs);
                         });
          });
        }
      }
      break;
    }
    case ProfileFamily::heisenberg:
    case ProfileFamily::heisenberg_central: {
      const bool central = prof.family == ProfileFamily::heisenberg_central;
      const std::size_t y3 = central ? 3 : 2;
      for (int b = 0; b < n && ok; ++b) {
        std::vector<int> J(n, 0);
        J[b] = m;
        ok = zero_check("theta(" + ve.section_names()[b] + "^m o h) = 0", J, {});
      }
      if (ok)
        ok = run.run("theta(y1 y3 o h) = theta(y2 o h)", [&](const LieElement& h) -> std::string {
          std::vector<int> J1(n, 0), J2(n, 0);
          J1[0] = 1;
          J2[1] = 1;
          const LieElement lhs = run.theta_of(J1, {y3}, h);
          const LieElement rhs = run.theta_of(J2, {}, h);
          return lhs == rhs ? "" : run.mismatch("", lhs, rhs);
        });
      if (ok) ok = zero_check("theta(y3 o h) = 0", std::vector<int>(n, 0), {y3});
      break;
    }
  }

  CheckResult r{"identities", ok ? Status::pass : Status::fail, "", "identities on theta for " + prof.to_string(),
                ""};
  r.scope = "all " + std::to_string(ve.H().dim()) + " basis vectors of H (" + trunc_scope + "), exponents 0.." +
            std::to_string(f.is_prime_field() ? p - 1 : m - 1);
  if (run.skipped()) r.scope += "; " + std::to_string(run.skipped()) + " instance(s) beyond the truncation skipped";
  r.details = ok ? std::to_string(run.checked()) + " instances hold" : run.failure();
  if (!ok) rep.ok = false;
  rep.stages.push_back(r);
  (void)one;
  return rep;
}

/// psi(h) = sum_{J in [0,m-1]^n} (J!)^{-1} x^J (x) theta(y^J o h) on H, the
/// profile's derivations on L_0. Refuses when the conditions fail and always
/// re-verifies the homomorphism property.
inline SelfSimilarStructure build_psi(const VirtualEndomorphism& ve, const ConditionProfile& prof) {
  const ConditionReport rep = check_conditions(prof, ve);
  if (!rep.ok) throw ConditionsFailed(rep.first_failure()->name + ": " + rep.first_failure()->details);
  const LieAlgebra& L = ve.L();
  const FieldSpec& f = ve.field();
  const ProfileRealization real = profile_realization(prof, f, static_cast<int>(ve.section().size()), ve.m());
  SelfSimilarStructure s;
  s.L = ve.L_ptr();
  s.X = real.X;
  s.provenance = "reconstruction formula from theta, profile " + prof.to_string();
  const WreathAlgebra W = s.wreath();
  const int n = ve.differential_count();
  const int hi = f.is_prime_field() ? static_cast<int>(f.characteristic()) - 1 : ve.m() - 1;

  // psi on H rows.
  std::vector<WreathElement> on_rows;
  for (const auto& h : ve.H().basis()) {
    WreathElement w = W.zero();
    detail::for_each_tuple(n, hi, [&](const std::vector<int>& J) {
      const LieElement t = ve.theta(ve.differential_word(J, h));
      if (t.is_zero()) return;
      Scalar c = Scalar::one(f);
      for (int e : J) c *= factorial_inverse(static_cast<unsigned>(e), f);
      WreathAlgebra::add_tensor(w, s.X.index(J), c * t);
    });
    on_rows.push_back(std::move(w));
  }
  SpanSolver split;  // generators: H rows, then section vectors
  for (const auto& h : ve.H().basis()) split.add_generator(h);
  for (const auto& y : ve.section()) split.add_generator(y);
  const std::size_t nh = ve.H().dim();
  for (std::size_t b = 0; b < L.dim(); ++b) {
    const auto combo = split.solve(L.basis(b));
    WreathElement w = W.zero();
    for (const auto& [g, c] : *combo) {
      if (g < nh)
        W.axpy(w, c, on_rows[g]);
      else
        W.axpy(w, c, W.pure(real.images[g - nh]));
    }
    s.psi.push_back(std::move(w));
  }
  const HomomorphismReport hom = verify_homomorphism(s);
  if (!hom.ok) throw ConditionsFailed("constructed psi is not a homomorphism: " + hom.describe(L));
  return s;
}

/// Derivation realization of sl_{n+1} used by the explicit constructions:
/// E_{i,j} = -x_j d_i, E_{n+1,i} = -x_i sum_j x_j d_j, E_{i,n+1} = d_i (i, j <= n).
inline Derivation sl_unit_derivation(const TruncPolyAlgebra& X, int n, int a, int b) {
  auto xd = [&](int i, int j) {
    Exponents z(n, 0);
    z[i - 1] = 1;
    return X.monomial_derivation(X.index(z), j - 1);
  };
  Derivation euler = X.zero_derivation();
  for (int j = 1; j <= n; ++j) euler += xd(j, j);
  const Scalar one = Scalar::one(X.field());
  if (a <= n && b <= n) return -xd(b, a);
  if (a <= n && b == n + 1) return X.partial_derivation(a - 1);
  if (a == n + 1 && b <= n) {
    Derivation out = X.zero_derivation();
    for (int k = 0; k < n; ++k) out.images[k] = X.mul(X.variable(b - 1), euler.images[k]);
    return -one * out;
  }
  return euler;  // E_{n+1,n+1}
}

inline Derivation sl_element_derivation(const TruncPolyAlgebra& X, const SlMatrixAlgebra& sl, const LieElement& v) {
  Derivation d = X.zero_derivation();
  for (const auto& [k, c] : v) {
    const auto [a, b] = sl.units.at(k);
    d.axpy(c, sl_unit_derivation(X, sl.n, a, b));
  }
  return d;
}

struct SlStructure {
  SlMatrixAlgebra sl;
  SelfSimilarStructure structure;
};

/// psi(E_{i,n+1}) = d_i; psi(E_{i,j}) = 1 (x) E_{i,j} + E_{i,j};
/// psi(E_{n+1,i}) = sum_j x_j (x) b_{i,j} + 1 (x) E_{n+1,i} + E_{n+1,i}, with
/// b_{i,j} = E_{j,i} - delta_{i,j} E_{n+1,n+1}. char 0 truncates X at `degree_bound`.
inline SlStructure build_psi_theorem_C(int n, const FieldSpec& f, int degree_bound = 4) {
  SlStructure out;
  out.sl = sl_matrix_algebra(n, f);  // applies the char(k) does not divide n+1 gate
  const SlMatrixAlgebra& sl = out.sl;
  SelfSimilarStructure& s = out.structure;
  s.L = sl.algebra;
  s.X = TruncPolyAlgebra(f, n, degree_bound);
  s.provenance = "explicit sl_{n+1} structure with psi(E_{i,n+1}) = d/dx_i";
  const WreathAlgebra W = s.wreath();
  for (std::size_t k = 0; k < sl.units.size(); ++k) {
    const auto [a, b] = sl.units[k];
    const LieElement e = sl.algebra->basis(k);
    WreathElement w = W.zero();
    if (a <= n && b == n + 1) {
      w = W.pure(sl_unit_derivation(s.X, n, a, b));
    } else if (a <= n && b <= n) {
      w = W.add(W.tensor(s.X.one_index(), e), W.pure(sl_unit_derivation(s.X, n, a, b)));
    } else {
      const int i = b;
      for (int j = 1; j <= n; ++j) {
        LieElement bij = sl.unit(j, i);
        if (i == j) bij -= sl.unit(n + 1, n + 1);
        Exponents z(n, 0);
        z[j - 1] = 1;
        WreathAlgebra::add_tensor(w, s.X.index(z), bij);
      }
      WreathAlgebra::add_tensor(w, s.X.one_index(), e);
      w.der = sl_unit_derivation(s.X, n, a, b);
    }
    s.psi.push_back(std::move(w));
  }
  const HomomorphismReport hom = verify_homomorphism(s);
  if (!hom.ok) throw ConditionsFailed("explicit sl structure is not a homomorphism: " + hom.describe(*s.L));
  return out;
}

/// psi(a) = 1 (x) a + a.
inline SlStructure build_psi_diagonal(int n, const FieldSpec& f, int degree_bound = 4) {
  SlStructure out;
  out.sl = sl_matrix_algebra(n, f);
  SelfSimilarStructure& s = out.structure;
  s.L = out.sl.algebra;
  s.X = TruncPolyAlgebra(f, n, degree_bound);
  s.provenance = "diagonal embedding psi(a) = 1 (x) a + a";
  const WreathAlgebra W = s.wreath();
  for (std::size_t k = 0; k < out.sl.units.size(); ++k) {
    const LieElement e = out.sl.algebra->basis(k);
    s.psi.push_back(W.add(W.tensor(s.X.one_index(), e), W.pure(sl_element_derivation(s.X, out.sl, e))));
  }
  const HomomorphismReport hom = verify_homomorphism(s);
  if (!hom.ok) throw ConditionsFailed("diagonal structure is not a homomorphism: " + hom.describe(*s.L));
  return out;
}

/// H = Ker(pi psi), theta = (epsilon (x) id) psi. The section is the set of
/// basis vectors at non-pivot positions of H; m = p in characteristic p.
inline VirtualEndomorphism associated_endomorphism(const SelfSimilarStructure& s, int m = 0) {
  const LieAlgebra& L = *s.L;
  const FieldSpec& f = L.field();
  std::vector<SparseVec> pi_images;
  for (const auto& w : s.psi) pi_images.push_back(s.X.derivation_vector(w.der));
  const Subspace H = kernel(pi_images, f);
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (const auto& h : H.basis()) {
    const WreathElement w = s.image(h);
    auto it = w.tensor.find(s.X.one_index());
    pairs.emplace_back(h, it == w.tensor.end() ? LieElement{} : it->second);
  }
  std::vector<LieElement> section;
  std::vector<std::string> names;
  const auto piv = H.pivots();
  for (std::size_t b = 0; b < L.dim(); ++b)
    if (std::find(piv.begin(), piv.end(), b) == piv.end()) {
      section.push_back(L.basis(b));
      names.push_back(L.name(b));
    }
  if (m == 0) m = f.is_prime_field() ? static_cast<int>(f.characteristic()) : 1;
  return VirtualEndomorphism::from_pairs(s.L, pairs, std::move(section), std::move(names), 0, m);
}

}  // namespace selfsim
