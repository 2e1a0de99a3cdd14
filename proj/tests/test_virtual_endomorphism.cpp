#include <gtest/gtest.h>

#include "oracles.hpp"
#include "selfsim/catalog.hpp"
#include "selfsim/virtual_endomorphism.hpp"

using namespace selfsim;

namespace {

bool same(const WreathAlgebra& W, const WreathElement& a, const WreathElement& b) {
  return W.to_vector(a) == W.to_vector(b);
}

LieElement el(const LieAlgebra& L, const std::string& name) { return L.basis(*L.index_of(name)); }

/// Filiform-type algebra: [y, h_i] = h_{i+1}; H = span{h_1..h_4} abelian.
std::shared_ptr<const LieAlgebra> filiform(const FieldSpec& f) {
  return std::make_shared<LieAlgebra>(LieAlgebra::from_rule(
      f, {"y", "h1", "h2", "h3", "h4"}, [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
        if (i == 0 && j >= 1 && j < 4) return SparseVec::unit(j + 1, Scalar::one(f));
        if (j == 0 && i >= 1 && i < 4) return SparseVec::unit(i + 1, -Scalar::one(f));
        return SparseVec{};
      }));
}

const CheckResult* stage(const ConditionReport& r, const std::string& name) {
  for (const auto& s : r.stages)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace

TEST(VirtualEndomorphism, FromPairs) {
  const auto f = FieldSpec::prime(3);
  const auto L = filiform(f);
  const auto ve = VirtualEndomorphism::from_pairs(
      L, {{L->basis(1), L->basis(1)}, {L->basis(2), LieElement{}}, {L->basis(1) + L->basis(2), L->basis(1)}},
      {L->basis(0)}, {"y"}, 1, 3);
  EXPECT_EQ(ve.H().dim(), 2u);
  EXPECT_EQ(ve.theta(L->basis(1)), L->basis(1));
  EXPECT_TRUE(ve.theta(L->basis(2)).is_zero());
  EXPECT_THROW(ve.theta(L->basis(3)), DomainError);
  EXPECT_THROW(VirtualEndomorphism::from_pairs(
                   L, {{L->basis(1), L->basis(1)}, {Scalar(f, 2) * L->basis(1), L->basis(1)}}, {L->basis(0)}, {"y"}, 1, 3),
               DomainError);
  // y^2 o h1 = h3.
  EXPECT_EQ(ve.differential_word({2}, L->basis(1)), L->basis(3));
}

TEST(CheckConditions, LamplighterPasses) {
  const auto obj = construct("lamplighter");
  ASSERT_TRUE(obj.conditions);
  EXPECT_TRUE(obj.conditions->ok);
  const auto* id = stage(*obj.conditions, "identities");
  ASSERT_TRUE(id);
  EXPECT_NE(id->scope.find("degree <= 6"), std::string::npos) << id->scope;
}

TEST(CheckConditions, ZeroThetaPasses) {
  const auto f = FieldSpec::prime(3);
  const auto L = filiform(f);
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (std::size_t i = 1; i < 5; ++i) pairs.emplace_back(L->basis(i), LieElement{});
  const auto ve = VirtualEndomorphism::from_pairs(L, pairs, {L->basis(0)}, {"y"}, 1, 3);
  EXPECT_TRUE(check_conditions(ConditionProfile::abelian(), ve).ok);
}

TEST(CheckConditions, IdentityViolationIsReported) {
  // theta(h_i) = h_i, but y^3 o h_1 = h_4 and theta(h_4) != 0.
  const auto f = FieldSpec::prime(3);
  const auto L = filiform(f);
  std::vector<std::pair<LieElement, LieElement>> pairs;
  for (std::size_t i = 1; i < 5; ++i) pairs.emplace_back(L->basis(i), L->basis(i));
  const auto ve = VirtualEndomorphism::from_pairs(L, pairs, {L->basis(0)}, {"y"}, 1, 3);
  const auto rep = check_conditions(ConditionProfile::abelian(), ve);
  EXPECT_FALSE(rep.ok);
  ASSERT_TRUE(rep.first_failure());
  EXPECT_EQ(rep.first_failure()->name, "identities");
  EXPECT_NE(rep.first_failure()->details.find("h = h1"), std::string::npos) << rep.first_failure()->details;
  EXPECT_THROW(build_psi(ve, ConditionProfile::abelian()), ConditionsFailed);
}

TEST(CheckConditions, DecompositionFailures) {
  const auto f = FieldSpec::prime(3);
  const auto L = filiform(f);
  // m must equal p.
  const auto ve_m = VirtualEndomorphism::from_pairs(L, {{L->basis(1), LieElement{}}}, {L->basis(0)}, {"y"}, 1, 2);
  auto rep = check_conditions(ConditionProfile::abelian(), ve_m);
  ASSERT_TRUE(rep.first_failure());
  EXPECT_EQ(rep.first_failure()->name, "decomposition");
  // span{h_1} is not an ideal.
  const auto ve = VirtualEndomorphism::from_pairs(
      L, {{L->basis(1), LieElement{}}}, {L->basis(0), L->basis(2), L->basis(3), L->basis(4)}, {"y", "a", "b", "c"}, 1, 3);
  rep = check_conditions(ConditionProfile::abelian(), ve);
  ASSERT_TRUE(rep.first_failure());
  EXPECT_NE(rep.first_failure()->details.find("H is not an ideal"), std::string::npos);
}

TEST(CheckConditions, Gl3ReportsIdealWitness) {
  const auto obj = construct("gl3_nilpotent");
  ASSERT_TRUE(obj.conditions);
  EXPECT_FALSE(obj.conditions->ok);
  EXPECT_FALSE(obj.structure);
  const auto* fail = obj.conditions->first_failure();
  ASSERT_TRUE(fail);
  EXPECT_EQ(fail->name, "decomposition");
  EXPECT_NE(fail->details.find("[e12, x*e23] = x*e13"), std::string::npos) << fail->details;
  // Determinism: the same witness on a second construction.
  EXPECT_EQ(construct("gl3_nilpotent").conditions->first_failure()->details, fail->details);
}

TEST(CheckConditions, HypothesisFailure) {
  // abelian_B demands an abelian L_0; here L_0 = span{a, b} with [a, b] = b and H = span{h} central.
  const auto f = FieldSpec::prime(3);
  const auto L = std::make_shared<LieAlgebra>(LieAlgebra::from_rule(
      f, {"a", "b", "h"}, [&](std::size_t i, std::size_t j) -> LieAlgebra::BasisBracket {
        if (i == 0 && j == 1) return SparseVec::unit(1, Scalar::one(f));
        if (i == 1 && j == 0) return SparseVec::unit(1, -Scalar::one(f));
        return SparseVec{};
      }));
  const auto ve = VirtualEndomorphism::from_pairs(L, {{L->basis(2), LieElement{}}}, {L->basis(0), L->basis(1)},
                                                  {"y1", "y2"}, 2, 3);
  const auto rep = check_conditions(ConditionProfile::abelian(), ve);
  ASSERT_TRUE(rep.first_failure());
  EXPECT_EQ(rep.first_failure()->name, "hypotheses");
}

TEST(CheckConditions, EveryProfilePassesOnFunctionModule) {
  struct Case {
    std::string profile;
    int p, n, j0;
  };
  const std::vector<Case> cases = {{"abelian_B", 3, 1, 0}, {"abelian_B", 3, 2, 0}, {"abelian_B", 5, 1, 0},
                                   {"witt_sl2", 5, 1, -1}, {"witt_sl2", 5, 1, 0},  {"witt_sl2", 5, 1, 1},
                                   {"witt_sl2", 5, 1, 3},  {"witt_sl2", 3, 1, 1},  {"frank", 3, 1, 0},
                                   {"frank", 3, 2, 0},     {"sl_np1", 3, 1, 0},   {"sl_np1", 5, 2, 0},
                                   {"heisenberg", 3, 1, 0}, {"heisenberg_central", 3, 1, 0}};
  for (const auto& c : cases) {
    const auto obj = construct("function_module", CatalogParams{c.p, c.n, {}, c.j0, c.profile});
    ASSERT_TRUE(obj.conditions);
    const auto* fail = obj.conditions->first_failure();
    EXPECT_TRUE(obj.conditions->ok) << c.profile << " p=" << c.p << " n=" << c.n << " j0=" << c.j0 << ": "
                                    << (fail ? fail->details : "");
    if (obj.structure) {
      const auto hom = verify_homomorphism(*obj.structure);
      EXPECT_TRUE(hom.ok) << c.profile << ": " << hom.describe(*obj.L);
    }
  }
}

TEST(CheckConditions, SlPrintedCoefficientFails) {
  // On the function module theta(y^J y_{1,2} o x^k) is forced to k(k+1) theta(y^{J-1} o x^k).
  const auto obj = construct("function_module", CatalogParams{3, 1, {}, {}, std::string("sl_np1")});
  EXPECT_TRUE(obj.conditions->ok);
  ConditionProfile printed = *obj.profile;
  printed.sl_printed_coefficient = true;
  const auto rep = check_conditions(printed, *obj.ve);
  EXPECT_FALSE(rep.ok);
  ASSERT_TRUE(rep.first_failure());
  EXPECT_NE(rep.first_failure()->details.find("sum_k i_k i_j"), std::string::npos);
}

TEST(CheckConditions, WittProfileRejectsBadJ0) {
  EXPECT_THROW(construct("function_module", CatalogParams{7, 1, {}, 2, std::string("witt_sl2")}), InvalidParameter);
  const auto obj = construct("function_module", CatalogParams{2, 1, {}, -1, std::string("witt_sl2")});
  EXPECT_FALSE(obj.conditions->notes.empty());
}

TEST(BuildPsi, LamplighterImages) {
  const auto obj = construct("lamplighter");
  const auto& s = *obj.structure;
  const auto& L = *obj.L;
  const WreathAlgebra W = s.wreath();
  const auto& X = s.X;
  const WreathElement q1 = W.sub(W.tensor(X.one_index(), el(L, "q1")), W.tensor(X.variable(0), el(L, "1")));
  EXPECT_TRUE(same(W, s.psi[0], q1));
  EXPECT_TRUE(same(W, s.psi[*L.index_of("x^2")], W.tensor(X.one_index(), el(L, "x"))));
  EXPECT_TRUE(same(W, s.psi[*L.index_of("1")], W.pure(X.partial_derivation(0))));
  EXPECT_TRUE(W.project_der(s.psi[0]).is_zero());
}

TEST(BuildPsi, HeisenbergQ) {
  for (int p : {3, 0}) {
    const auto obj = construct("heisenberg_q", CatalogParams{p, {}, {}, {}, {}});
    ASSERT_TRUE(obj.structure) << p;
    const auto& s = *obj.structure;
    const auto& L = *obj.L;
    const WreathAlgebra W = s.wreath();
    const WreathElement want =
        W.add(W.tensor(s.X.one_index(), el(L, "a")), W.tensor(s.X.variable(0), el(L, "a") + el(L, "c")));
    EXPECT_TRUE(same(W, s.psi[*L.index_of("b")], want)) << W.format(s.psi[1]);
    EXPECT_TRUE(verify_homomorphism(s).ok);
  }
}

TEST(BuildPsi, SlMatrixConstruction) {
  const auto obj = construct("sl_theorem_C");
  const auto& s = *obj.structure;
  const auto& sl = *obj.sl;
  const WreathAlgebra W = s.wreath();
  const auto& X = s.X;
  EXPECT_TRUE(same(W, s.image(sl.unit(1, 2)), W.pure(X.partial_derivation(0))));
  // [psi(E21), psi(E12)] = -1 (x) b_11 + (E22 - E11), and it equals psi(E22 - E11).
  const LieElement b11 = sl.unit(1, 1) - sl.unit(2, 2);
  const LieElement diff = sl.unit(2, 2) - sl.unit(1, 1);
  const WreathElement br = W.bracket(s.image(sl.unit(2, 1)), s.image(sl.unit(1, 2)));
  const WreathElement want =
      W.add(W.scale(-Scalar::one(X.field()), W.tensor(X.one_index(), b11)), W.pure(sl_element_derivation(X, sl, diff)));
  EXPECT_TRUE(same(W, br, want)) << W.format(br);
  EXPECT_TRUE(same(W, br, s.image(diff)));
  const auto hom = verify_homomorphism(s);
  EXPECT_TRUE(hom.ok);
  EXPECT_EQ(hom.pairs_skipped, 0u);
  // n = 2 over F_2 is allowed, n = 1 over F_2 is not.
  EXPECT_NO_THROW(build_psi_theorem_C(2, FieldSpec::prime(2)));
  try {
    build_psi_theorem_C(1, FieldSpec::prime(2));
    FAIL();
  } catch (const InvalidParameter& e) {
    EXPECT_NE(std::string(e.what()).find("char(k) does not divide n+1"), std::string::npos);
  }
  for (int n : {1, 2})
    for (auto f : {FieldSpec::prime(5), FieldSpec::prime(7), FieldSpec::rational()})
      EXPECT_NO_THROW(build_psi_theorem_C(n, f)) << n;
}

TEST(BuildPsi, Diagonal) {
  const auto obj = construct("sl_diagonal");
  const auto& s = *obj.structure;
  const WreathAlgebra W = s.wreath();
  for (std::size_t i = 0; i < obj.L->dim(); ++i) {
    const Derivation d = sl_element_derivation(s.X, *obj.sl, obj.L->basis(i));
    EXPECT_TRUE(same(W, s.psi[i], W.add(W.tensor(s.X.one_index(), obj.L->basis(i)), W.pure(d))));
    // Level-1 operator is the derivation matrix.
    const SparseMatrix op = level_operator_matrix(obj.structure, obj.L->basis(i), 1);
    for (std::size_t u = 0; u < s.X.dim(); ++u) EXPECT_EQ(op.columns[u], s.X.apply(d, s.X.monomial(u)));
  }
}

TEST(AssociatedEndomorphism, Lamplighter) {
  const auto obj = construct("lamplighter");
  const auto ve = associated_endomorphism(*obj.structure);
  const auto& L = *obj.L;
  EXPECT_EQ(ve.H().dim(), L.dim() - 1);
  EXPECT_FALSE(ve.in_H(el(L, "1")));
  EXPECT_EQ(ve.theta(el(L, "q1")), el(L, "q1"));
  for (int k = 1; k <= 6; ++k) {
    const std::string name = k == 1 ? "x" : "x^" + std::to_string(k);
    const std::string prev = k == 1 ? "1" : k == 2 ? "x" : "x^" + std::to_string(k - 1);
    EXPECT_EQ(ve.theta(el(L, name)), el(L, prev)) << name;
  }
}

TEST(AssociatedEndomorphism, InjectiveProjectionGivesZeroH) {
  for (const char* name : {"sl_theorem_C", "sl_diagonal"}) {
    const auto obj = construct(name);
    EXPECT_EQ(associated_endomorphism(*obj.structure).H().dim(), 0u) << name;
  }
}

TEST(AssociatedEndomorphism, RoundTripsThroughBuildPsi) {
  std::vector<std::pair<std::string, CatalogParams>> cases = {
      {"lamplighter", {}}, {"lamplighter", {5, 2, 5, {}, {}}}, {"abelian_shift", {}}, {"abelian_shift_finite", {}},
      {"heisenberg_q", {}}, {"heisenberg_q", {0, {}, {}, {}, {}}}, {"function_module", {}},
      {"function_module", {3, 2, {}, {}, std::string("frank")}}, {"abelian_fixed_point", {}}};
  for (const auto& [name, prm] : cases) {
    const auto obj = construct(name, prm);
    ASSERT_TRUE(obj.structure) << name;
    const auto back = associated_endomorphism(*obj.structure, obj.ve->m());
    EXPECT_EQ(back.H(), obj.ve->H()) << name;
    for (const auto& h : obj.ve->H().basis()) EXPECT_EQ(back.theta(h), obj.ve->theta(h)) << name;
  }
}

TEST(Homomorphism, CorruptedLamplighterWitness) {
  const auto obj = construct("lamplighter_corrupted");
  const auto rep = verify_homomorphism(*obj.structure);
  EXPECT_FALSE(rep.ok);
  ASSERT_TRUE(rep.witness);
  EXPECT_EQ(obj.L->name(rep.witness->first), "q1");
  EXPECT_EQ(obj.L->name(rep.witness->second), "1");
}
