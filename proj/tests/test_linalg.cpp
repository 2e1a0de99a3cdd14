#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "selfsim/linalg.hpp"
#include "selfsim/trunc_poly.hpp"

using namespace selfsim;

namespace {

SparseVec vec(const FieldSpec& f, std::initializer_list<long long> xs) {
  SparseVec v;
  Index i = 0;
  for (long long x : xs) v.add(i++, Scalar(f, x));
  return v;
}

SparseVec random_vec(std::mt19937& rng, const FieldSpec& f, std::size_t dim, int density = 2) {
  SparseVec v;
  std::uniform_int_distribution<long long> coef(0, f.characteristic() - 1);
  std::uniform_int_distribution<int> keep(0, density);
  for (std::size_t i = 0; i < dim; ++i)
    if (keep(rng) == 0) v.add(i, Scalar(f, coef(rng)));
  return v;
}

// Column j of the dense operator = image of e_j.
oracle::Dense dense_columns(const SparseMatrix& m) {
  oracle::Dense cols;
  for (const auto& c : m.columns) cols.push_back(oracle::to_dense(c, m.dim));
  return cols;
}

SparseMatrix random_matrix(std::mt19937& rng, const FieldSpec& f, std::size_t dim) {
  SparseMatrix m;
  m.dim = dim;
  for (std::size_t c = 0; c < dim; ++c) m.columns.push_back(random_vec(rng, f, dim));
  return m;
}

}  // namespace

TEST(SparseVec, StoresNoZeros) {
  const auto f = FieldSpec::prime(3);
  SparseVec v;
  v.add(2, Scalar(f, 1));
  v.add(2, Scalar(f, 2));
  EXPECT_TRUE(v.is_zero());
  v.set(4, Scalar(f, 0));
  EXPECT_EQ(v.size(), 0u);
  v.axpy(Scalar(f, 2), vec(f, {1, 0, 1}));
  EXPECT_EQ(v.get(0), Scalar(f, 2));
  EXPECT_EQ(v.size(), 2u);
}

TEST(Subspace, CanonicalEchelonIsOrderIndependent) {
  const auto f = FieldSpec::prime(5);
  const auto a = vec(f, {1, 2, 0, 3}), b = vec(f, {0, 1, 4, 0}), c = a + Scalar(f, 3) * b;
  const Subspace s1 = Subspace::span(4, {a, b});
  const Subspace s2 = Subspace::span(4, {c, b, a});
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.dim(), 2u);
  EXPECT_TRUE(s1.contains(c));
  EXPECT_FALSE(s1.contains(vec(f, {0, 0, 0, 1})));
  const auto coords = s1.coordinates(c);
  ASSERT_TRUE(coords.has_value());
  SparseVec back;
  for (std::size_t k = 0; k < coords->size(); ++k) back.axpy((*coords)[k], s1.basis()[k]);
  EXPECT_EQ(back, c);
}

TEST(SpanSolver, ExpressesInGenerators) {
  const auto q = FieldSpec::rational();
  SpanSolver s;
  EXPECT_TRUE(s.add_generator(vec(q, {1, 1, 0})));
  EXPECT_TRUE(s.add_generator(vec(q, {0, 2, 1})));
  EXPECT_FALSE(s.add_generator(vec(q, {2, 4, 1})));
  const auto combo = s.solve(vec(q, {3, 5, 1}));
  ASSERT_TRUE(combo);
  EXPECT_EQ(combo->get(0), Scalar(q, 3));
  EXPECT_EQ(combo->get(1), Scalar(q, 1));
  EXPECT_FALSE(s.solve(vec(q, {0, 0, 1})).has_value());
}

TEST(Kernel, MatchesDenseOracleOnRandomMaps) {
  std::mt19937 rng(7);
  for (std::uint32_t p : {2u, 3u, 5u}) {
    const auto f = FieldSpec::prime(p);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t n = 1 + rng() % 7, len = 1 + rng() % 6;
      std::vector<SparseVec> images;
      oracle::Dense cols;
      for (std::size_t j = 0; j < n; ++j) {
        images.push_back(random_vec(rng, f, len));
        cols.push_back(oracle::to_dense(images.back(), len));
      }
      const Subspace k = kernel(images, f);
      EXPECT_EQ(k.dim(), oracle::nullspace_mod(cols, len, p).size());
      for (const auto& v : k.basis()) {
        SparseVec img;
        for (const auto& [j, c] : v) img.axpy(c, images[j]);
        EXPECT_TRUE(img.is_zero());
      }
    }
  }
}

TEST(Intersect, DimensionFormula) {
  std::mt19937 rng(11);
  const auto f = FieldSpec::prime(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SparseVec> ug, wg;
    for (int i = 0; i < 3; ++i) ug.push_back(random_vec(rng, f, 6, 1));
    for (int i = 0; i < 3; ++i) wg.push_back(random_vec(rng, f, 6, 1));
    const Subspace u = Subspace::span(6, ug), w = Subspace::span(6, wg);
    const Subspace i = intersect(u, w, f);
    EXPECT_EQ(i.dim() + u.sum(w).dim(), u.dim() + w.dim());
    EXPECT_TRUE(u.contains(i));
    EXPECT_TRUE(w.contains(i));
  }
}

TEST(SpanClosure, TruncatedPolynomialExamples) {
  const auto f = FieldSpec::prime(3);
  const TruncPolyAlgebra X(f, 1);
  const Derivation d = X.partial_derivation(0);
  Subspace seed(3);
  seed.add(X.monomial(std::size_t{2}));
  const Subspace c1 = span_closure(seed, {[&](const SparseVec& u) { return X.apply(d, u); }});
  EXPECT_EQ(c1.dim(), 3u);
  Subspace one(3);
  one.add(X.one());
  const Subspace c2 = span_closure(one, {[&](const SparseVec& u) { return X.mul(X.variable(0), u); }});
  EXPECT_EQ(c2.dim(), 3u);
  EXPECT_EQ(span_closure(Subspace::full(3, f), {}), Subspace::full(3, f));
}

TEST(SpanClosure, MatchesBruteForceOrbit) {
  std::mt19937 rng(3);
  for (std::uint32_t p : {2u, 3u}) {
    const auto f = FieldSpec::prime(p);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t dim = 2 + rng() % 8;  // ambient <= 9
      std::vector<SparseMatrix> mats;
      const int nops = 1 + rng() % 2;
      for (int k = 0; k < nops; ++k) mats.push_back(random_matrix(rng, f, dim));
      SparseVec s = random_vec(rng, f, dim);
      if (s.is_zero()) s.add(0, Scalar::one(f));
      std::vector<LinearOp> ops;
      std::vector<oracle::Dense> dense;
      for (const auto& m : mats) {
        ops.push_back([m](const SparseVec& v) { return m.apply(v); });
        dense.push_back(dense_columns(m));
      }
      const Subspace lib = span_closure(Subspace::span(dim, {s}), ops);
      oracle::Dense orbit;
      EXPECT_EQ(lib.dim(), oracle::brute_orbit_rank({oracle::to_dense(s, dim)}, dense, p, &orbit));
      // Same span: the library basis adds nothing to the oracle vectors.
      oracle::Dense both = orbit;
      for (const auto& b : lib.basis()) both.push_back(oracle::to_dense(b, dim));
      EXPECT_EQ(oracle::rank_mod(both, p), lib.dim());
    }
  }
}

TEST(GreatestInvariantSubspace, Examples) {
  const auto f = FieldSpec::prime(3);
  EXPECT_TRUE(greatest_invariant_subspace(Subspace(3), {}, f).is_zero());
  // theta(a_i) = a_{i-1} on H = span{a_2, a_3} (coordinates 0,1,2 for a_1..a_3).
  Subspace H(3);
  H.add(SparseVec::unit(1, Scalar::one(f)));
  H.add(SparseVec::unit(2, Scalar::one(f)));
  LinearOp theta = [&](const SparseVec& v) {
    SparseVec out;
    for (const auto& [i, c] : v) {
      if (i == 0) throw DomainError("theta outside H");
      out.add(i - 1, c);
    }
    return out;
  };
  EXPECT_TRUE(greatest_invariant_subspace(H, {theta}, f).is_zero());
  // The identity keeps everything.
  LinearOp id = [](const SparseVec& v) { return v; };
  EXPECT_EQ(greatest_invariant_subspace(H, {id}, f), H);
}

TEST(GreatestInvariantSubspace, MatchesF2Enumeration) {
  std::mt19937 rng(5);
  const auto f = FieldSpec::prime(2);
  for (unsigned d : {2u, 3u}) {
    const auto subspaces = oracle::all_f2_subspaces(d);
    EXPECT_EQ(subspaces.size(), d == 2 ? 5u : 16u);
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<SparseMatrix> mats;
      for (int k = 0; k < 2; ++k) mats.push_back(random_matrix(rng, f, d));
      const auto& start_set = subspaces[rng() % subspaces.size()];
      std::vector<SparseVec> gens;
      for (unsigned m : start_set) gens.push_back(oracle::f2_vector(m, d));
      const Subspace start = Subspace::span(d, gens);
      std::vector<LinearOp> ops;
      for (const auto& m : mats) ops.push_back([m](const SparseVec& v) { return m.apply(v); });
      const Subspace gfp = greatest_invariant_subspace(start, ops, f);
      // Oracle: union of all invariant subspaces inside start.
      std::set<unsigned> best{0};
      for (const auto& s : subspaces) {
        bool ok = true;
        for (unsigned v : s) {
          ok = ok && start_set.count(v);
          for (const auto& m : mats) ok = ok && s.count(oracle::f2_mask(m.apply(oracle::f2_vector(v, d))));
        }
        if (ok && s.size() > best.size()) best = s;
      }
      EXPECT_EQ(std::size_t{1} << gfp.dim(), best.size());
      for (unsigned v : best) EXPECT_TRUE(gfp.contains(oracle::f2_vector(v, d)));
    }
  }
}

TEST(SparseMatrix, CommutatorAndFlatten) {
  const auto f = FieldSpec::prime(5);
  SparseMatrix a{2, {SparseVec::unit(1, Scalar::one(f)), SparseVec{}}};  // e_0 -> e_1
  SparseMatrix b{2, {SparseVec{}, SparseVec::unit(0, Scalar::one(f))}};  // e_1 -> e_0
  const SparseMatrix c = commutator(a, b);
  EXPECT_EQ(c.columns[0], -SparseVec::unit(0, Scalar::one(f)));
  EXPECT_EQ(c.columns[1], SparseVec::unit(1, Scalar::one(f)));
  EXPECT_EQ(a.flatten(), SparseVec::unit(1, Scalar::one(f)));
}
