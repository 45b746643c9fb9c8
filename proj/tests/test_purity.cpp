#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"
#include "wd/matrix.hpp"
#include "wd/purity.hpp"
#include "wd/verify.hpp"

using namespace wd;
using namespace wd::purity;
using wd::mat::RatMatrix;

namespace {

ResidueCard q4() { return make_residue_card(4); }

RatMatrix rows(std::vector<std::vector<Rat>> r) {
  return RatMatrix::from_rows(std::move(r));
}

// Sp_2(weight 0) + Sp_1(weight -1): phi = diag(1, 1/4, 1/2), N: e1 -> e2.
mat::MatrixWD three_dim_model() {
  RatMatrix phi = rows({{1, 0, 0}, {0, Rat(1, 4), 0}, {0, 0, Rat(1, 2)}});
  RatMatrix nilp(3, 3);
  nilp.at(1, 0) = 1;
  return mat::make_matrix_wd(q4(), phi, nilp);
}

RatMatrix unit_column(long long n, long long i) {
  RatMatrix col(n, 1);
  col.at(i, 0) = 1;
  return col;
}

}  // namespace

TEST_CASE("classification of the canonical examples") {
  auto st2 = sp(make_atom("a", 1, Rat(0)), 2, q4());
  CHECK(classify(st2) == Verdict{VerdictKind::pure, Rat(-1), false});

  auto mixed = direct_sum(sp(make_atom("a", 1, Rat(0)), 1, q4()),
                          sp(make_atom("a", 1, Rat(-1)), 1, q4()));
  CHECK(classify(mixed).kind == VerdictKind::mixed);

  auto strict = make_symbolic(
      q4(), {{IndecompWD{make_atom("a", 1, Rat(0)), 1}, 2}});
  CHECK(classify(strict) == Verdict{VerdictKind::strictly_pure, Rat(0), false});

  auto vac = classify(make_symbolic(q4(), {}));
  CHECK(vac.vacuous);
  CHECK(is_pure(vac));
  CHECK(verdict_str(vac) == "vacuously-pure");

  auto bad = mat::make_matrix_wd(q4(), rows({{3}}), RatMatrix(1, 1));
  CHECK(classify(bad).kind == VerdictKind::not_mixed);
}

TEST_CASE("matrix and symbolic classification agree") {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<long long> w(-2, 2), len(1, 3);
  for (int k = 0; k < 40; ++k) {
    std::vector<std::pair<IndecompWD, long long>> terms;
    long long budget = 1 + static_cast<long long>(gen() % 6);
    while (budget > 0) {
      long long s = std::min(len(gen), budget);
      long long ww = w(gen);
      Rat ev = 1;
      for (long long i = 0; i < (ww >= 0 ? ww : -ww); ++i) ev *= 2;
      if (ww < 0) ev = 1 / ev;
      terms.emplace_back(
          IndecompWD{make_atom("ev:" + rat_str(ev), 1, Rat(ww)), s}, 1);
      budget -= s;
    }
    auto a = make_symbolic(q4(), std::move(terms));
    auto m = mat::from_symbolic(a, 2);
    CHECK(classify(m) == classify(mat::to_symbolic(m)));
  }
}

TEST_CASE("weight filtration jumps and the N-shift check") {
  auto st = mat::make_matrix_wd(q4(), rows({{1, 0}, {0, Rat(1, 4)}}),
                                [] {
                                  RatMatrix n(2, 2);
                                  n.at(1, 0) = 1;
                                  return n;
                                }());
  auto fil = weight_filtration(st);
  REQUIRE(fil.jumps.size() == 2);
  CHECK(fil.jumps[0].weight == Rat(-2));
  CHECK(fil.jumps[0].dim == 1);
  CHECK(fil.jumps[1].weight == Rat(0));
  CHECK(fil.jumps[1].dim == 2);

  auto diag = mat::make_matrix_wd(q4(), rows({{1, 0}, {0, 2}}), RatMatrix(2, 2));
  auto fil2 = weight_filtration(diag);
  REQUIRE(fil2.jumps.size() == 2);
  CHECK(fil2.jumps[0].weight == Rat(0));
  CHECK(fil2.jumps[1].weight == Rat(1));

  // Weight-raising N only exists on unvalidated input.
  RatMatrix raising(2, 2);
  raising.at(0, 1) = 1;
  auto bad = mat::make_matrix_wd_unchecked(q4(), rows({{1, 0}, {0, Rat(1, 4)}}),
                                           raising);
  CHECK_THROWS_AS(weight_filtration(bad), Error);
}

TEST_CASE("primitive decomposition on both backends") {
  auto both = direct_sum(sp(make_atom("ev:1", 1, Rat(0)), 3, q4()),
                         sp(make_atom("ev:1/4", 1, Rat(-2)), 1, q4()));
  auto prim = primitive_decomposition(both, Rat(-2));
  REQUIRE(prim.layers.size() == 2);
  CHECK(prim.layers[0].i == 0);
  CHECK(prim.layers[0].dim == 1);
  CHECK(prim.layers[1].i == 2);
  CHECK(prim.layers[1].dim == 1);

  auto m = mat::from_symbolic(both, 2);
  auto mprim = primitive_decomposition(m, Rat(-2));
  REQUIRE(mprim.layers.size() == 2);
  CHECK(mprim.layers[0].dim == 1);
  CHECK(mprim.layers[1].dim == 1);
  CHECK(mprim.layers[0].basis.cols() == 1);

  CHECK_THROWS_AS(primitive_decomposition(both, Rat(0)), Error);

  auto empty = primitive_decomposition(make_symbolic(q4(), {}), Rat(0));
  CHECK(empty.layers.empty());
}

TEST_CASE("monodromy reconstruction: forced strings") {
  // weights {0, -2} on one eigenvalue chain: the unique pure N is rank 1.
  auto lines = direct_sum(sp(make_atom("ev:1", 1, Rat(0)), 1, q4()),
                          sp(make_atom("ev:1/4", 1, Rat(-2)), 1, q4()));
  auto m = mat::from_symbolic(lines, 2);
  auto rec = reconstruct_monodromy(m);
  auto* got = std::get_if<mat::MatrixWD>(&rec);
  REQUIRE(got);
  CHECK(mat::nilpotent_partition(got->nilp) == std::vector<long long>{2});
  CHECK(is_pure_of(classify(*got), Rat(-1)));
  // Brute-force orbit enumeration confirms uniqueness.
  auto forms = verify::pure_orbit_forms(lines, 2);
  REQUIRE(forms.size() == 1);
  CHECK(forms[0] == to_json(mat::to_symbolic(*got)).dump());

  // weights {0, 0}: no weight drop, N = 0 forced.
  auto flat = make_symbolic(q4(), {{IndecompWD{make_atom("ev:1", 1, Rat(0)), 1}, 2}});
  auto rec2 = reconstruct_monodromy(mat::from_symbolic(flat, 2));
  auto* got2 = std::get_if<mat::MatrixWD>(&rec2);
  REQUIRE(got2);
  CHECK(got2->nilp.is_zero());
  CHECK(classify(*got2) == Verdict{VerdictKind::strictly_pure, Rat(0), false});

  // weights {0, -2, -2, -4}: unique type {Sp_3, Sp_1(-2)} at center -2.
  auto four = make_symbolic(
      q4(), {{IndecompWD{make_atom("ev:1", 1, Rat(0)), 1}, 1},
             {IndecompWD{make_atom("ev:1/4", 1, Rat(-2)), 1}, 2},
             {IndecompWD{make_atom("ev:1/16", 1, Rat(-4)), 1}, 1}});
  auto rec3 = reconstruct_monodromy(mat::from_symbolic(four, 2));
  auto* got3 = std::get_if<mat::MatrixWD>(&rec3);
  REQUIRE(got3);
  auto sym3 = mat::to_symbolic(*got3);
  REQUIRE(sym3.terms.size() == 2);
  CHECK(sym3.terms[0].first.s == 3);  // ev:1 string
  CHECK(sym3.terms[1].first.s == 1);  // ev:1/4 line
  CHECK(verify::pure_orbit_forms(four, 2).size() == 1);

  // Odd-gap histogram has no pure completion.
  auto gap = direct_sum(sp(make_atom("ev:1", 1, Rat(0)), 1, q4()),
                        sp(make_atom("ev:1/16", 1, Rat(-4)), 1, q4()));
  auto rec4 = reconstruct_monodromy(mat::from_symbolic(gap, 2));
  CHECK(std::holds_alternative<NoPureN>(rec4));
  CHECK(verify::pure_orbit_forms(gap, 2).empty());
}

TEST_CASE("symbolic strip-then-reconstruct returns the original") {
  std::mt19937_64 gen(32);
  std::uniform_int_distribution<long long> c(-3, 3), len(1, 4), pick(0, 2);
  const char* labels[] = {"a", "b", "c"};
  for (int k = 0; k < 120; ++k) {
    Rat center = Rat(c(gen)) / Rat(gen() % 2 ? 1 : 2);
    std::vector<std::pair<IndecompWD, long long>> terms;
    long long budget = 1 + static_cast<long long>(gen() % 12);
    while (budget > 0) {
      long long s = std::min(len(gen), budget);
      terms.emplace_back(
          IndecompWD{make_atom(labels[pick(gen)], 1, center + Rat(s - 1)), s}, 1);
      budget -= s;
    }
    auto a = make_symbolic(q4(), std::move(terms));
    auto rec = reconstruct_monodromy(strip_monodromy(a));
    auto* got = std::get_if<SymbolicWD>(&rec);
    REQUIRE(got);
    CHECK(*got == a);
  }
}

TEST_CASE("reconstruction refuses inputs that still carry N") {
  auto st = sp(make_atom("a", 1, Rat(0)), 2, q4());
  CHECK_THROWS_AS(reconstruct_monodromy(st), Error);
}

TEST_CASE("summand test on the three-dimensional model") {
  auto v = three_dim_model();

  // W = the Sp_1(-1) line: a summand with complement Sp_2.
  auto res = summand_test(v, unit_column(3, 2));
  CHECK(res.route_exterior);
  CHECK(res.route_pure);
  CHECK(res.route_complement);
  CHECK(res.summand);
  REQUIRE(res.complement_basis);
  CHECK(res.complement_basis->cols() == 2);
  auto comp = restrict_to_subspace(v, *res.complement_basis);
  auto comp_sym = mat::to_symbolic(comp);
  REQUIRE(comp_sym.terms.size() == 1);
  CHECK(comp_sym.terms[0].first.s == 2);

  // W = the weight -2 line inside Sp_2: stable but not a summand.
  auto res2 = summand_test(v, unit_column(3, 1));
  CHECK_FALSE(res2.route_exterior);
  CHECK_FALSE(res2.route_pure);
  CHECK_FALSE(res2.route_complement);
  CHECK_FALSE(res2.summand);

  // W = V: trivially a summand with zero complement.
  auto res3 = summand_test(v, RatMatrix::identity(3));
  CHECK(res3.summand);
  REQUIRE(res3.complement_basis);
  CHECK(res3.complement_basis->cols() == 0);

  // e1 is phi-stable but not N-stable.
  CHECK_THROWS_AS(summand_test(v, unit_column(3, 0)), Error);
}

TEST_CASE("symbolic summand test mirrors the matrix example") {
  auto v = direct_sum(sp(make_atom("a", 1, Rat(0)), 2, q4()),
                      sp(make_atom("b", 1, Rat(-1)), 1, q4()));
  // Terms sort as (a, Sp_2), (b, Sp_1).
  SymbolicSub full_b{{{0}, {1}}};
  auto res = summand_test(v, full_b);
  CHECK(res.summand);
  REQUIRE(res.complement_symbolic);
  CHECK(res.complement_symbolic->terms.size() == 1);
  CHECK(res.complement_symbolic->terms[0].first.s == 2);

  SymbolicSub socle{{{1}, {0}}};
  auto res2 = summand_test(v, socle);
  CHECK_FALSE(res2.route_exterior);
  CHECK_FALSE(res2.route_pure);
  CHECK_FALSE(res2.route_complement);

  CHECK_THROWS_AS(summand_test(v, SymbolicSub{{{3}, {0}}}), Error);
}

TEST_CASE("filtration splitting on the three-dimensional model") {
  auto v = three_dim_model();

  // Trivial filtration: the identity splitting.
  auto triv = filtration_split(v, {});
  auto* split0 = std::get_if<MatrixSplitting>(&triv);
  REQUIRE(split0);
  CHECK(split0->pieces.size() == 1);

  // Fil^1 = the Sp_1 line: splits into the two indecomposables.
  auto good = filtration_split(v, {unit_column(3, 2)});
  auto* split = std::get_if<MatrixSplitting>(&good);
  REQUIRE(split);
  REQUIRE(split->pieces.size() == 2);
  for (const auto& piece : split->pieces)
    CHECK(is_pure_of(classify(piece), Rat(-1)));

  // Fil^1 = the weight -2 line: the exterior criterion fails at j = 1.
  auto bad = filtration_split(v, {unit_column(3, 1)});
  auto* fails = std::get_if<CriterionFails>(&bad);
  REQUIRE(fails);
  CHECK(fails->j == 1);
}

TEST_CASE("symbolic filtration splitting") {
  auto v = direct_sum(sp(make_atom("a", 1, Rat(0)), 2, q4()),
                      sp(make_atom("b", 1, Rat(-1)), 1, q4()));
  auto good = filtration_split(v, {SymbolicSub{{{0}, {1}}}});
  auto* split = std::get_if<SymbolicSplitting>(&good);
  REQUIRE(split);
  REQUIRE(split->pieces.size() == 2);
  CHECK(dimension(split->pieces[0]) == 1);
  CHECK(dimension(split->pieces[1]) == 2);

  auto bad = filtration_split(v, {SymbolicSub{{{1}, {0}}}});
  auto* fails = std::get_if<CriterionFails>(&bad);
  REQUIRE(fails);
  CHECK(fails->j == 1);

  CHECK_THROWS_AS(
      filtration_split(v, {SymbolicSub{{{0}, {1}}}, SymbolicSub{{{1}, {1}}}}),
      Error);  // not decreasing
}

namespace {

// Definition-direct purity oracle: mixed with all weights in k + Z and
// N^i inducing isomorphisms gr_{k+i} -> gr_{k-i} for every i > 0.
// Independent of classify, which reasons on string centers instead.
bool definition_pure_at(const mat::MatrixWD& m, const Rat& k) {
  auto fil = weight_filtration(m);
  long long n = m.phi.rows();
  auto fil_below = [&](const Rat& w) {  // basis of Fil_{w'} for largest w' < w
    RatMatrix best(n, 0);
    for (const auto& jump : fil.jumps)
      if (jump.weight < w) best = jump.basis;
    return best;
  };
  auto fil_at = [&](const Rat& w) {  // basis of Fil_w
    RatMatrix best(n, 0);
    for (const auto& jump : fil.jumps)
      if (jump.weight <= w) best = jump.basis;
    return best;
  };
  auto gr_dim = [&](const Rat& w) {
    return rank(fil_at(w)) - rank(fil_below(w));
  };
  for (const auto& jump : fil.jumps) {
    Rat offset = jump.weight - k;
    if (!is_integer(offset)) return false;
  }
  Rat max_off = 0;
  for (const auto& jump : fil.jumps) {
    Rat off = jump.weight - k;
    if (off > max_off) max_off = off;
    if (-off > max_off) max_off = -off;
  }
  for (Rat i = 1; i <= max_off; i += 1) {
    long long hi = gr_dim(k + i), lo = gr_dim(k - i);
    if (hi != lo) return false;
    if (hi == 0) continue;
    // rank of the induced map on graded pieces.
    RatMatrix ni = power(m.nilp, static_cast<long long>(numerator(i)));
    RatMatrix image = ni * fil_at(k + i);
    RatMatrix mod_out = fil_below(k - i);
    long long induced_rank = rank(hcat(image, mod_out)) - rank(mod_out);
    if (induced_rank != hi) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("classify agrees with the definition-direct purity oracle") {
  std::mt19937_64 gen(37);
  std::uniform_int_distribution<long long> len(1, 3), cw(-2, 2);
  int pure_seen = 0, impure_seen = 0;
  for (int k = 0; k < 120; ++k) {
    // Standard models, sometimes centered (pure), sometimes scattered.
    bool want_pure = gen() % 2 == 0;
    long long center = cw(gen);
    std::vector<std::pair<IndecompWD, long long>> terms;
    long long budget = 1 + static_cast<long long>(gen() % 5);
    while (budget > 0) {
      long long s = std::min(len(gen), budget);
      long long top = want_pure ? center + s - 1 : cw(gen);
      Rat ev = 1;
      for (long long i = 0; i < (top >= 0 ? top : -top); ++i) ev *= 2;
      if (top < 0) ev = 1 / ev;
      terms.emplace_back(
          IndecompWD{make_atom("ev:" + rat_str(ev), 1, Rat(top)), s}, 1);
      budget -= s;
    }
    auto m = mat::from_symbolic(make_symbolic(q4(), std::move(terms)), 2);
    auto verdict = classify(m);
    // Probe every candidate center on a half-integer grid around the
    // weights; purity must hold exactly at the classified center.
    bool any_direct = false;
    for (Rat cand = Rat(-8); cand <= Rat(8); cand += Rat(1, 2)) {
      bool direct = definition_pure_at(m, cand);
      if (direct) any_direct = true;
      CHECK(direct == is_pure_of(verdict, cand));
    }
    CHECK(any_direct == is_pure(verdict));
    (is_pure(verdict) ? pure_seen : impure_seen) += 1;
  }
  CHECK(pure_seen > 20);
  CHECK(impure_seen > 20);
}

TEST_CASE("weight filtration uses generalized eigenspaces") {
  // Non-semisimple phi with a single weight: one jump of full dimension.
  auto m = mat::make_matrix_wd(q4(), RatMatrix::from_rows({{2, 1}, {0, 2}}),
                               RatMatrix(2, 2));
  auto fil = weight_filtration(m);
  REQUIRE(fil.jumps.size() == 1);
  CHECK(fil.jumps[0].weight == Rat(1));
  CHECK(fil.jumps[0].dim == 2);
}

TEST_CASE("purity certificates carry verdict, filtration and primitives") {
  auto v = three_dim_model();
  auto cert = purity_certificate(v);
  CHECK(cert["verdict"] == "pure");
  CHECK(cert["center"] == "-1");
  CHECK(cert["filtration"].size() == 3);
  CHECK(cert["primitive"].size() == 2);

  auto sym_cert = purity_certificate(sp(make_atom("a", 1, Rat(0)), 3, q4()));
  CHECK(sym_cert["verdict"] == "pure");
  CHECK(sym_cert["center"] == "-2");
}
