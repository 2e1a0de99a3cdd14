#pragma once

// Properties of a self-similar structure: kernel of psi, faithfulness,
// transitivity on levels, states, contraction, recurrence, branching.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/linalg.hpp"
#include "selfsim/virtual_endomorphism.hpp"
#include "selfsim/wreath.hpp"

namespace selfsim {

/// Ker psi = {h in H : theta(y^J o h) = 0 for all J in [0, m-1]^n}.
inline Subspace kernel_of_psi(const VirtualEndomorphism& ve) {
  const auto& hb = ve.H().basis();
  const FieldSpec& f = ve.field();
  const int n = ve.differential_count();
  const int hi = f.is_prime_field() ? static_cast<int>(f.characteristic()) - 1 : ve.m() - 1;
  const Index stride = ve.L().dim();
  std::vector<SparseVec> images(hb.size());
  Index block = 0;
  detail::for_each_tuple(n, hi, [&](const std::vector<int>& J) {
    for (std::size_t k = 0; k < hb.size(); ++k)
      for (const auto& [i, c] : ve.theta(ve.differential_word(J, hb[k]))) images[k].add(block * stride + i, c);
    ++block;
  });
  const Subspace rel = kernel(images, f);
  Subspace out(ve.L().dim());
  for (const auto& c : rel.basis()) {
    SparseVec v;
    for (const auto& [k, coef] : c) v.axpy(coef, hb[k]);
    out.add(v);
  }
  return out;
}

/// Kernel of psi read off its wreath coordinates.
inline Subspace kernel_of_psi(const SelfSimilarStructure& s) {
  const WreathAlgebra W = s.wreath();
  std::vector<SparseVec> images;
  for (const auto& w : s.psi) images.push_back(W.to_vector(w));
  return kernel(images, s.L->field());
}

/// Ker(delta_i) for i = 0, 1, ...: Ker(delta_0) = Ker(pi psi) and
/// Ker(delta_i) = {a in Ker(pi psi) : every coefficient a_J lies in Ker(delta_{i-1})}.
/// Ker(delta_i) equals the kernel of the action on level i+1. Stops once the
/// chain stabilizes (at most dim L + 1 steps) or at `max_depth`.
inline std::vector<Subspace> portrait_kernels(const SelfSimilarStructure& s, int max_depth = -1) {
  const LieAlgebra& L = *s.L;
  const FieldSpec& f = L.field();
  std::vector<SparseVec> pi_images;
  for (const auto& w : s.psi) pi_images.push_back(s.X.derivation_vector(w.der));
  std::vector<Subspace> out{kernel(pi_images, f)};
  const Index dd = s.X.derivation_dim();
  const Index stride = L.dim();
  while (max_depth < 0 || static_cast<int>(out.size()) <= max_depth) {
    const Subspace& prev = out.back();
    std::vector<SparseVec> images = pi_images;
    for (std::size_t b = 0; b < L.dim(); ++b)
      for (const auto& [mono, coef] : s.psi[b].tensor)
        for (const auto& [i, c] : prev.reduce(coef)) images[b].add(dd + mono * stride + i, c);
    Subspace next = kernel(images, f);
    const bool stable = next == prev;
    out.push_back(std::move(next));
    if (stable) break;
  }
  return out;
}

/// Kernel of nu_m computed from the explicit level operators.
inline Subspace level_kernel(LevelActionEngine& eng, int m) {
  const SelfSimilarStructure& s = eng.structure();
  std::vector<SparseVec> images;
  for (std::size_t b = 0; b < s.L->dim(); ++b) images.push_back(eng.basis_operator(b, m).flatten());
  return kernel(images, s.L->field());
}

struct FaithfulnessReport {
  Status verdict = Status::undecided;  // pass = faithful, fail = not faithful
  std::string scope;
  Subspace action_kernel;                   // stable Ker(delta_i)
  std::vector<std::size_t> portrait_dims;   // dim Ker(delta_i), i = 0, 1, ...
  std::optional<Subspace> invariant_ideal;  // largest theta-invariant ideal inside H
  std::vector<std::size_t> level_dims;      // dim Ker(nu_m), m = 1..M (char p only)
  bool routes_agree = true;
  std::string details;
};

/// Three routes: the greatest theta-invariant ideal in H (untruncated L only),
/// explicit level kernels for m <= max_level (char p, within the dimension
/// cap), and the portrait recursion. The routes must agree.
inline FaithfulnessReport faithfulness(const std::shared_ptr<const SelfSimilarStructure>& s, int max_level = 3,
                                       std::size_t max_dim = 0) {
  FaithfulnessReport rep;
  const LieAlgebra& L = *s->L;
  const FieldSpec& f = L.field();
  const auto chain = portrait_kernels(*s);
  for (const auto& k : chain) rep.portrait_dims.push_back(k.dim());
  rep.action_kernel = chain.back();
  std::vector<std::string> notes;

  if (!L.is_truncated()) {
    const VirtualEndomorphism ve = associated_endomorphism(*s);
    std::vector<LinearOp> ops;
    for (std::size_t b = 0; b < L.dim(); ++b) ops.push_back(L.ad(L.basis(b)));
    ops.push_back(ve.theta_op());
    rep.invariant_ideal = greatest_invariant_subspace(ve.H(), ops, f);
    if (!(*rep.invariant_ideal == rep.action_kernel)) {
      rep.routes_agree = false;
      notes.push_back("invariant ideal (dim " + std::to_string(rep.invariant_ideal->dim()) +
                      ") differs from the portrait kernel (dim " + std::to_string(rep.action_kernel.dim()) + ")");
    }
  } else {
    notes.push_back("invariant-ideal route skipped: L is truncated");
  }

  if (f.is_prime_field()) {
    LevelActionEngine eng(s, max_dim);
    for (int m = 1; m <= max_level; ++m) {
      try {
        const Subspace k = level_kernel(eng, m);
        rep.level_dims.push_back(k.dim());
        const Subspace& want = chain[std::min<std::size_t>(m - 1, chain.size() - 1)];
        if (!(k == want)) {
          rep.routes_agree = false;
          notes.push_back("level " + std::to_string(m) + " kernel differs from Ker(delta_" + std::to_string(m - 1) +
                          ")");
        }
      } catch (const DimensionExceeded& e) {
        notes.push_back("level route stopped at m = " + std::to_string(m) + ": " + e.what());
        break;
      } catch (const TruncationExceeded& e) {
        notes.push_back("level route stopped at m = " + std::to_string(m) + ": " + e.what());
        break;
      }
    }
  } else {
    notes.push_back("level route not applicable in characteristic 0");
  }

  rep.scope = L.is_truncated() ? "within the truncation at degree " + std::to_string(L.truncation()->bound)
                               : "exact (kernel chain stabilized after " + std::to_string(chain.size()) + " steps)";
  if (!rep.routes_agree)
    rep.verdict = Status::undecided;
  else
    rep.verdict = rep.action_kernel.is_zero() ? Status::pass : Status::fail;
  rep.details = rep.verdict == Status::pass ? "the action on X^{(x)m} has trivial kernel"
                : rep.verdict == Status::fail
                    ? "nonzero kernel of dimension " + std::to_string(rep.action_kernel.dim()) + ", spanned by " +
                          L.format(rep.action_kernel.basis().front()) + (rep.action_kernel.dim() > 1 ? ", ..." : "")
                    : "routes disagree";
  for (const auto& n : notes) rep.details += "; " + n;
  return rep;
}

struct TransitivityReport {
  std::vector<std::size_t> orbit_dims;  // per level 1..m
  std::vector<Index> level_dims;
  bool transitive = true;
  std::optional<bool> theta_surjective;
  std::string details;
};

/// Orbit of top (x) ... (x) top under U(L) on each level up to m.
inline TransitivityReport transitivity(const std::shared_ptr<const SelfSimilarStructure>& s, int m,
                                       std::size_t max_dim = 0) {
  const FieldSpec& f = s->L->field();
  if (!f.is_prime_field()) throw DomainError("transitivity is defined for characteristic p only");
  if (m < 1) throw InvalidParameter("level must be positive");
  TransitivityReport rep;
  LevelActionEngine eng(s, max_dim);
  for (int k = 1; k <= m; ++k) {
    const Index dim = eng.level_dim(k);
    std::vector<LinearOp> ops;
    for (std::size_t b = 0; b < s->L->dim(); ++b) {
      const SparseMatrix* mat = &eng.basis_operator(b, k);
      ops.push_back([mat](const SparseVec& v) { return mat->apply(v); });
    }
    const std::vector<std::size_t> top(k, s->X.top_index());
    Subspace seed(dim);
    seed.add(SparseVec::unit(encode_tuple(top, s->X.dim()), Scalar::one(f)));
    const Subspace orbit = span_closure(seed, ops);
    rep.orbit_dims.push_back(orbit.dim());
    rep.level_dims.push_back(dim);
    if (orbit.dim() != dim) rep.transitive = false;
  }
  if (!s->L->is_truncated()) {
    const VirtualEndomorphism ve = associated_endomorphism(*s);
    rep.theta_surjective = Subspace::span(s->L->dim(), ve.theta_rows()).dim() == s->L->dim();
  }
  rep.details = "orbit dimensions";
  for (std::size_t k = 0; k < rep.orbit_dims.size(); ++k)
    rep.details += " " + std::to_string(rep.orbit_dims[k]) + "/" + std::to_string(rep.level_dims[k]);
  return rep;
}

/// S(Y): span of the coefficients a_J in psi(y) = sum x^J (x) a_J + delta.
inline Subspace states(const SelfSimilarStructure& s, const Subspace& Y) {
  Subspace out(s.L->dim());
  for (const auto& y : Y.basis())
    for (const auto& [mono, a] : s.image(y).tensor) out.add(a);
  return out;
}

inline Subspace iterated_states(const SelfSimilarStructure& s, const Subspace& Y, int times) {
  Subspace cur = Y;
  for (int i = 0; i < times; ++i) cur = states(s, cur);
  return cur;
}

struct FiniteStateReport {
  bool finite = false;
  Subspace closure;
  int steps = 0;
};

/// Smallest state-closed subspace containing a, searched for `bound` steps.
inline FiniteStateReport finite_state(const SelfSimilarStructure& s, const LieElement& a, int bound = 64) {
  FiniteStateReport rep;
  rep.closure = Subspace(s.L->dim());
  rep.closure.add(a);
  for (int step = 1; step <= bound; ++step) {
    const Subspace next = rep.closure.sum(states(s, rep.closure));
    rep.steps = step;
    if (next.dim() == rep.closure.dim()) {
      rep.finite = true;
      return rep;
    }
    rep.closure = next;
  }
  return rep;
}

struct ContractionEntry {
  std::string element;
  std::optional<int> m0;  // least m0 with S^m(a) in N for m0 <= m <= bound
  std::vector<std::size_t> state_dims;
};

/// Contraction toward `nucleus`, checked for every m up to `bound`.
inline std::vector<ContractionEntry> contracting_check(const SelfSimilarStructure& s, const Subspace& nucleus,
                                                       const std::vector<LieElement>& elements, int bound) {
  std::vector<ContractionEntry> out;
  for (const auto& a : elements) {
    ContractionEntry e;
    e.element = s.L->format(a);
    Subspace cur(s.L->dim());
    cur.add(a);
    std::vector<bool> inside;
    for (int m = 1; m <= bound; ++m) {
      cur = states(s, cur);
      e.state_dims.push_back(cur.dim());
      inside.push_back(nucleus.contains(cur));
    }
    for (int m = bound; m >= 1 && inside[m - 1]; --m) e.m0 = m;
    out.push_back(std::move(e));
  }
  return out;
}

struct RecurrenceReport {
  bool recurrent = false;
  std::optional<std::size_t> missing;  // basis vector outside theta(H)
  std::string scope;
};

/// theta(H) = L; for truncated L, every basis vector of degree <= D-1 must be hit.
inline RecurrenceReport is_recurrent(const VirtualEndomorphism& ve) {
  RecurrenceReport rep;
  const LieAlgebra& L = ve.L();
  const Subspace image = Subspace::span(L.dim(), ve.theta_rows());
  const bool truncated = L.is_truncated();
  rep.scope = truncated ? "basis vectors of degree <= " + std::to_string(L.truncation()->bound - 1) : "all of L";
  for (std::size_t b = 0; b < L.dim(); ++b) {
    if (truncated && L.degree(b) > L.truncation()->bound - 1) continue;
    if (!image.contains(L.basis(b))) {
      rep.missing = b;
      return rep;
    }
  }
  rep.recurrent = true;
  return rep;
}

struct WeaklyBranchedReport {
  bool is_ideal = false;
  std::string ideal_witness;
  bool contains_all = false;
  std::optional<std::pair<std::size_t, std::size_t>> missing;  // (monomial, K basis index)
  std::size_t obstruction_dim = 0;  // dim psi(K) ∩ (x_1 (x) L)
  std::string scope;
};

/// Tests x^J (x) k in psi(K) for every monomial and every basis vector k of K,
/// and measures psi(K) ∩ (x_1 (x) L).
inline WeaklyBranchedReport weakly_branched_witness_test(const SelfSimilarStructure& s, const Subspace& K) {
  WeaklyBranchedReport rep;
  const LieAlgebra& L = *s.L;
  const WreathAlgebra W = s.wreath();
  rep.scope = L.is_truncated() ? "within the truncation at degree " + std::to_string(L.truncation()->bound)
                               : "exact";
  const IdealCheck ic = check_ideal(L, K);
  rep.is_ideal = ic.ok;
  if (!ic.ok) {
    rep.ideal_witness = "[" + L.name(ic.witness->first) + ", " + L.format(K.basis()[ic.witness->second]) +
                        "] = " + L.format(ic.witness_value);
    return rep;
  }
  Subspace image(W.vector_dim());
  for (const auto& k : K.basis()) image.add(W.to_vector(s.image(k)));
  rep.contains_all = true;
  for (std::size_t mono = 0; mono < s.X.dim() && rep.contains_all; ++mono)
    for (std::size_t k = 0; k < K.dim(); ++k)
      if (!image.contains(W.to_vector(W.tensor(mono, K.basis()[k])))) {
        rep.contains_all = false;
        rep.missing = {mono, k};
        break;
      }
  Subspace xL(W.vector_dim());
  const std::size_t x1 = s.X.index([&] {
    Exponents e(s.X.n(), 0);
    e[0] = 1;
    return e;
  }());
  for (std::size_t b = 0; b < L.dim(); ++b) xL.add(W.to_vector(W.tensor(x1, L.basis(b))));
  rep.obstruction_dim = intersect(image, xL, L.field()).dim();
  return rep;
}

}  // namespace selfsim
