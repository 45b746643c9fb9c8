#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"
#include "wd/matrix.hpp"

using namespace wd;
using namespace wd::mat;

namespace {

ResidueCard q4() { return make_residue_card(4); }

RatMatrix rows(std::vector<std::vector<Rat>> r) {
  return RatMatrix::from_rows(std::move(r));
}

RatMatrix steinberg_phi() { return rows({{1, 0}, {0, Rat(1, 4)}}); }
RatMatrix e21(long long n) {
  RatMatrix m(n, n);
  m.at(1, 0) = 1;
  return m;
}

// Independent determinant: Laplace expansion along the first row.
Rat laplace_det(const RatMatrix& a) {
  long long n = a.rows();
  if (n == 0) return 1;
  if (n == 1) return a.at(0, 0);
  Rat det = 0;
  for (long long j = 0; j < n; ++j) {
    if (a.at(0, j) == 0) continue;
    RatMatrix minor(n - 1, n - 1);
    for (long long r = 1; r < n; ++r) {
      long long cc = 0;
      for (long long c = 0; c < n; ++c) {
        if (c == j) continue;
        minor.at(r - 1, cc++) = a.at(r, c);
      }
    }
    Rat term = a.at(0, j) * laplace_det(minor);
    det += (j % 2 == 0) ? term : -term;
  }
  return det;
}

std::string err_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("constructor validates the Steinberg shape and rejects bad pairs") {
  auto ok = make_matrix_wd(q4(), steinberg_phi(), e21(2));
  CHECK(ok.phi.at(1, 1) == Rat(1, 4));

  CHECK(err_code([] {
          make_matrix_wd(q4(), rows({{1, 0}, {0, 1}}), e21(2));
        }) == "CompatibilityViolated");

  // Rational eigenvalues 1 and 2 via a non-diagonal matrix.
  auto m = make_matrix_wd(q4(), rows({{0, 1}, {-2, 3}}), RatMatrix(2, 2));
  CHECK(m.phi.rows() == 2);

  CHECK(err_code([] {
          make_matrix_wd(q4(), rows({{0, 0}, {0, 1}}), RatMatrix(2, 2));
        }) == "NotInvertible");
  CHECK(err_code([] {
          make_matrix_wd(q4(), rows({{1, 0}, {0, 1}}), rows({{1, 0}, {0, 0}}));
        }) == "NotNilpotent");
  CHECK(err_code([] {
          make_matrix_wd(q4(), rows({{0, 1}, {2, 0}}), RatMatrix(2, 2));
        }) == "IrrationalEigenvalue");
  CHECK(err_code([] {
          make_matrix_wd(make_residue_card(5), rows({{1}}), RatMatrix(1, 1));
        }) == "BadResidueCard");
}

TEST_CASE("multiplicative Jordan decomposition") {
  auto diag = make_matrix_wd(q4(), steinberg_phi(), RatMatrix(2, 2));
  auto [s1, u1] = mult_jordan(diag);
  CHECK(s1 == diag.phi);
  CHECK(u1 == RatMatrix::identity(2));

  auto m = make_matrix_wd(q4(), rows({{2, 1}, {0, 2}}), RatMatrix(2, 2));
  auto [s, u] = mult_jordan(m);
  CHECK(s == rows({{2, 0}, {0, 2}}));
  CHECK(u == rows({{1, Rat(1, 2)}, {0, 1}}));
  CHECK(s * u == m.phi);
  CHECK(u * s == m.phi);

  // Idempotence: the decomposition of the semisimple part is trivial.
  auto ss = make_matrix_wd(q4(), s, RatMatrix(2, 2));
  auto [s2, u2] = mult_jordan(ss);
  CHECK(s2 == s);
  CHECK(u2 == RatMatrix::identity(2));
}

TEST_CASE("Frobenius semisimplification is idempotent and keeps N") {
  auto m = make_matrix_wd(q4(), rows({{2, 1}, {0, 2}}), RatMatrix(2, 2));
  auto ss = frobenius_semisimplify(m);
  CHECK(ss.phi == rows({{2, 0}, {0, 2}}));
  CHECK(ss.nilp == m.nilp);
  CHECK(is_frobenius_semisimple(ss));
  CHECK_FALSE(is_frobenius_semisimple(m));
  auto ss2 = frobenius_semisimplify(ss);
  CHECK(ss2.phi == ss.phi);

  auto already = make_matrix_wd(q4(), steinberg_phi(), e21(2));
  CHECK(frobenius_semisimplify(already).phi == already.phi);
}

TEST_CASE("nilpotent partition from rank sequences") {
  CHECK(nilpotent_partition(RatMatrix(3, 3)) == std::vector<long long>{1, 1, 1});

  RatMatrix block3(3, 3);
  block3.at(1, 0) = 1;
  block3.at(2, 1) = 1;
  CHECK(nilpotent_partition(block3) == std::vector<long long>{3});

  CHECK(nilpotent_partition(e21(3)) == std::vector<long long>{2, 1});

  CHECK(err_code([] { nilpotent_partition(RatMatrix::identity(2)); }) ==
        "NotNilpotent");
}

TEST_CASE("eigen weights read off powers of p0") {
  auto m = make_matrix_wd(q4(), steinberg_phi(), RatMatrix(2, 2));
  CHECK(eigen_weights(m) == std::map<Rat, long long>{{Rat(0), 1}, {Rat(-2), 1}});

  auto w1 = make_matrix_wd(q4(), rows({{2}}), RatMatrix(1, 1));
  CHECK(eigen_weights(w1) == std::map<Rat, long long>{{Rat(1), 1}});

  auto bad = make_matrix_wd(q4(), rows({{3}}), RatMatrix(1, 1));
  CHECK(err_code([&] { eigen_weights(bad); }) == "NotWeilLike");
}

TEST_CASE("to_symbolic reads the Sp-string structure") {
  auto st = make_matrix_wd(q4(), steinberg_phi(), e21(2));
  auto sym = to_symbolic(st);
  REQUIRE(sym.terms.size() == 1);
  CHECK(sym.terms[0].first.s == 2);
  CHECK(sym.terms[0].first.atom.label == "ev:1");
  CHECK(sym.terms[0].first.atom.weight == Rat(0));

  auto split = make_matrix_wd(q4(), steinberg_phi(), RatMatrix(2, 2));
  auto sym2 = to_symbolic(split);
  CHECK(sym2.terms.size() == 2);
  for (const auto& [t, mm] : sym2.terms) CHECK(t.s == 1);

  auto triv = make_matrix_wd(q4(), rows({{1}}), RatMatrix(1, 1));
  auto sym3 = to_symbolic(triv);
  REQUIRE(sym3.terms.size() == 1);
  CHECK(sym3.terms[0].first.atom.weight == Rat(0));
  CHECK(sym3.terms[0].first.s == 1);

  auto nonss = make_matrix_wd(q4(), rows({{2, 1}, {0, 2}}), RatMatrix(2, 2));
  CHECK(err_code([&] { to_symbolic(nonss, true); }) == "NotFrobeniusSemisimple");
  CHECK(to_symbolic(nonss).terms.size() == 1);  // auto-semisimplified
}

TEST_CASE("from_symbolic builds the standard model") {
  auto one = sp(make_atom("ev:1", 1, Rat(0)), 1, q4());
  auto m1 = from_symbolic(one, 2);
  CHECK(m1.phi == rows({{1}}));
  CHECK(m1.nilp.is_zero());

  auto st = sp(make_atom("ev:1", 1, Rat(0)), 2, q4());
  auto m2 = from_symbolic(st, 2);
  CHECK(m2.phi == steinberg_phi());
  CHECK(m2.nilp == e21(2));

  auto half = sp(make_atom("x", 1, Rat(1, 2)), 1, q4());
  CHECK(err_code([&] { from_symbolic(half, 2); }) == "NonIntegerWeight");
  CHECK(err_code([&] { from_symbolic(one, 3); }) == "ResidueMismatch");
}

TEST_CASE("negative eigenvalues survive the round trip") {
  auto neg = sp(make_atom("ev:-2", 1, Rat(1)), 2, q4());
  auto m = from_symbolic(neg, 2);
  CHECK(m.phi.at(0, 0) == Rat(-2));
  auto back = to_symbolic(m);
  CHECK(to_json(back).dump() == to_json(neg).dump());
}

TEST_CASE("round trip on random canonical forms") {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<long long> w(-3, 3), len(1, 3);
  for (int k = 0; k < 60; ++k) {
    std::vector<std::pair<IndecompWD, long long>> terms;
    std::set<std::pair<long long, int>> used;
    long long budget = 1 + static_cast<long long>(gen() % 10);
    while (budget > 0) {
      long long ww = w(gen);
      int sign = gen() % 3 == 0 ? -1 : 1;
      if (!used.insert({ww, sign}).second) {
        --budget;
        continue;
      }
      long long s = std::min(len(gen), budget);
      Rat ev = 1;
      for (long long i = 0; i < (ww >= 0 ? ww : -ww); ++i) ev *= 2;
      if (ww < 0) ev = 1 / ev;
      if (sign < 0) ev = -ev;
      terms.emplace_back(IndecompWD{make_atom("ev:" + rat_str(ev), 1, Rat(ww)), s},
                         1);
      budget -= s;
    }
    if (terms.empty()) continue;
    auto a = make_symbolic(q4(), std::move(terms));
    auto m = from_symbolic(a, 2);
    CHECK(to_json(to_symbolic(m)).dump() == to_json(a).dump());
    // The monodromy partition matches the string lengths.
    std::vector<long long> expect;
    for (const auto& [t, mm] : a.terms)
      for (long long c = 0; c < mm * t.atom.dim; ++c) expect.push_back(t.s);
    std::sort(expect.rbegin(), expect.rend());
    CHECK(nilpotent_partition(m.nilp) == expect);
  }
}

TEST_CASE("characteristic polynomial agrees with a Laplace determinant") {
  std::mt19937_64 gen(22);
  std::uniform_int_distribution<long long> entry(-3, 3), dim(1, 4);
  for (int k = 0; k < 40; ++k) {
    long long n = dim(gen);
    RatMatrix a(n, n);
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j) a.at(i, j) = Rat(entry(gen));
    auto cp = charpoly(a);
    for (Rat x : {Rat(0), Rat(1), Rat(-2), Rat(1, 3)}) {
      RatMatrix xi = RatMatrix::identity(n);
      for (long long i = 0; i < n; ++i) xi.at(i, i) = x;
      Rat direct = laplace_det(xi - a);
      Rat horner = 0;
      for (auto it = cp.rbegin(); it != cp.rend(); ++it) horner = horner * x + *it;
      CHECK(horner == direct);
    }
  }
}

TEST_CASE("matrix JSON round trip") {
  auto m = make_matrix_wd(q4(), steinberg_phi(), e21(2));
  auto j = to_json(m);
  auto back = matrix_wd_from_json(j);
  CHECK(back.phi == m.phi);
  CHECK(back.nilp == m.nilp);
  CHECK(to_json(back).dump() == j.dump());
  CHECK_THROWS_AS(matrix_wd_from_json(json::parse(R"({"q": 4, "phi": [["x"]]})")),
                  Error);
}
