#include <doctest.h>

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"
#include "wd/purity.hpp"
#include "wd/segments.hpp"

using namespace wd;
using namespace wd::seg;

namespace {

ResidueCard q4() { return make_residue_card(4); }

SegmentRep rep(long long n, std::vector<std::pair<Rat, long long>> data,
               const Rat& w0 = Rat(0)) {
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < data.size(); ++i)
    segs.push_back(Segment{data[i].first, data[i].second,
                           "seg" + std::to_string(i + 1)});
  return make_segment_rep(n, std::move(segs), w0, q4());
}

// Literal double-coset enumeration over F_2: partitions GL_n(F_2) into
// P g B orbits by full (p, b) products. Completely independent of the
// flag-variety route inside bruhat_oracle.
long long literal_double_cosets_f2(long long n, const std::vector<long long>& s) {
  const int p = 2;
  long long cells = n * n;
  auto decode = [&](long long code, std::vector<int>& m) {
    for (long long i = 0; i < cells; ++i) m[i] = (code >> i) & 1;
  };
  auto invertible = [&](const std::vector<int>& m) {
    std::vector<int> a = m;
    long long r = 0;
    for (long long c = 0; c < n && r < n; ++c) {
      long long piv = -1;
      for (long long i = r; i < n; ++i)
        if (a[i * n + c]) {
          piv = i;
          break;
        }
      if (piv < 0) continue;
      for (long long j = 0; j < n; ++j) std::swap(a[piv * n + j], a[r * n + j]);
      for (long long i = 0; i < n; ++i)
        if (i != r && a[i * n + c])
          for (long long j = 0; j < n; ++j) a[i * n + j] ^= a[r * n + j];
      ++r;
    }
    return r == n;
  };
  std::vector<long long> group;
  std::vector<int> buf(cells);
  for (long long code = 0; code < (1LL << cells); ++code) {
    decode(code, buf);
    if (invertible(buf)) group.push_back(code);
  }
  std::vector<long long> block_of(n);
  long long pos = 0, b = 0;
  for (long long part : s) {
    for (long long i = 0; i < part; ++i) block_of[pos++] = b;
    ++b;
  }
  auto in_p = [&](const std::vector<int>& m) {
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j)
        if (m[i * n + j] && block_of[i] > block_of[j]) return false;
    return true;
  };
  auto in_b = [&](const std::vector<int>& m) {
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j)
        if (m[i * n + j] && i > j) return false;
    return true;
  };
  std::vector<std::vector<int>> ps, bs;
  for (long long code : group) {
    decode(code, buf);
    if (in_p(buf)) ps.push_back(buf);
    if (in_b(buf)) bs.push_back(buf);
  }
  auto mul = [&](const std::vector<int>& x, const std::vector<int>& y) {
    std::vector<int> z(cells, 0);
    for (long long i = 0; i < n; ++i)
      for (long long k = 0; k < n; ++k) {
        if (!x[i * n + k]) continue;
        for (long long j = 0; j < n; ++j) z[i * n + j] ^= x[i * n + k] & y[k * n + j];
      }
    return z;
  };
  auto encode = [&](const std::vector<int>& m) {
    long long code = 0;
    for (long long i = 0; i < cells; ++i) code |= static_cast<long long>(m[i]) << i;
    return code;
  };
  std::set<long long> remaining(group.begin(), group.end());
  long long cosets = 0;
  (void)p;
  while (!remaining.empty()) {
    ++cosets;
    long long seed = *remaining.begin();
    decode(seed, buf);
    for (const auto& pm : ps) {
      auto pg = mul(pm, buf);
      for (const auto& bm : bs) remaining.erase(encode(mul(pg, bm)));
    }
  }
  return cosets;
}

}  // namespace

TEST_CASE("segment validation") {
  CHECK_THROWS_AS(rep(3, {{Rat(0), 2}, {Rat(0), 2}}), Error);  // sums to 4
  CHECK_THROWS_AS(make_segment_rep(2,
                                   {Segment{Rat(0), 1, "x"},
                                    Segment{Rat(0), 1, "x"}},
                                   Rat(0), q4()),
                  Error);  // duplicate labels
}

TEST_CASE("rec_segments lands every tempered input at center w0 + n - 1") {
  auto triv = rec_segments(rep(1, {{Rat(0), 1}}));
  REQUIRE(triv.terms.size() == 1);
  CHECK(triv.terms[0].first.atom.weight == Rat(0));
  CHECK(triv.terms[0].first.s == 1);

  auto steinberg3 = rec_segments(rep(3, {{Rat(0), 3}}));
  REQUIRE(steinberg3.terms.size() == 1);
  CHECK(steinberg3.terms[0].first.s == 3);
  CHECK(steinberg3.terms[0].first.atom.weight == Rat(4));
  CHECK(purity::is_pure_of(purity::classify(steinberg3), Rat(2)));

  auto two_one = rec_segments(rep(3, {{Rat(0), 2}, {Rat(0), 1}}));
  REQUIRE(two_one.terms.size() == 2);
  CHECK(purity::is_pure_of(purity::classify(two_one), Rat(2)));

  // The same input with a base weight shift.
  auto shifted = rec_segments(rep(3, {{Rat(0), 2}, {Rat(0), 1}}, Rat(5)));
  CHECK(purity::is_pure_of(purity::classify(shifted), Rat(7)));
}

TEST_CASE("temperedness is the equal-character-weight condition") {
  CHECK(is_tempered(rep(2, {{Rat(3), 2}})));
  CHECK(is_tempered(rep(2, {{Rat(0), 1}, {Rat(0), 1}})));
  CHECK_FALSE(is_tempered(rep(2, {{Rat(0), 1}, {Rat(1), 1}})));
  // ... and matches purity of rec.
  CHECK(purity::is_pure(
      purity::classify(rec_segments(rep(2, {{Rat(0), 1}, {Rat(0), 1}})))));
  CHECK_FALSE(purity::is_pure(
      purity::classify(rec_segments(rep(2, {{Rat(0), 1}, {Rat(1), 1}})))));
}

TEST_CASE("iwahori dimension formula") {
  CHECK(iwahori_dim(4, {1, 1, 1, 1}) == 24);
  CHECK(iwahori_dim(4, {4}) == 1);
  CHECK(iwahori_dim(3, {2, 1}) == 3);
  CHECK(iwahori_dim(8, {3, 3, 2}) == Int(8 * 7 * 6 * 5 * 4 * 3 * 2) / (6 * 6 * 2));
}

TEST_CASE("double-coset oracle matches the formula and a literal count") {
  CHECK(bruhat_oracle(2, {1, 1}, 2) == 2);
  CHECK(bruhat_oracle(3, {2, 1}, 2) == 3);
  CHECK(bruhat_oracle(3, {3}, 2) == 1);
  CHECK(bruhat_oracle(4, {2, 1, 1}, 3) == 12);
  CHECK_THROWS_AS(bruhat_oracle(5, {5}, 2), Error);
  CHECK_THROWS_AS(bruhat_oracle(3, {3}, 5), Error);

  // Literal P g B partition of GL_n(F_2) for n <= 3.
  for (auto parts : std::vector<std::vector<long long>>{
           {1}, {2}, {1, 1}, {3}, {2, 1}, {1, 2}, {1, 1, 1}}) {
    long long n = 0;
    for (long long part : parts) n += part;
    CHECK(bruhat_oracle(n, parts, 2) == literal_double_cosets_f2(n, parts));
  }
}

TEST_CASE("red_h coefficients") {
  auto one = red_h(rep(2, {{Rat(0), 2}}), 1);
  REQUIRE(one.terms.size() == 1);
  CHECK(one.terms[0].second == 1);

  CHECK(red_h(rep(3, {{Rat(0), 2}, {Rat(0), 1}}), 0).terms.empty());

  auto two = red_h(rep(3, {{Rat(0), 2}, {Rat(0), 1}}), 2);
  REQUIRE(two.terms.size() == 2);
  CHECK(two.terms[0].first.label == "seg1");
  CHECK(two.terms[0].second == 2);
  CHECK(two.terms[1].first.label == "seg2");
  CHECK(two.terms[1].second == 1);

  CHECK_THROWS_AS(red_h(rep(3, {{Rat(0), 3}}), 5), Error);
}

TEST_CASE("red_h coefficients are the GL_h iwahori dimensions") {
  auto r = rep(6, {{Rat(0), 3}, {Rat(0), 2}, {Rat(0), 1}});
  for (long long h = 0; h <= 6; ++h) {
    for (const auto& [atom, coef] : red_h(r, h).terms) {
      // Rebuild the multinomial from the reduced parts.
      long long si = 0;
      std::vector<long long> parts;
      for (std::size_t i = 0; i < r.segments.size(); ++i) {
        if (r.segments[i].label == atom.label)
          si = r.segments[i].s;
        else
          parts.push_back(r.segments[i].s);
      }
      parts.push_back(si + h - r.n);
      std::erase(parts, 0);
      CHECK(coef == iwahori_dim(h, parts));
      CHECK(coef > 0);
    }
  }
}

TEST_CASE("strata classes keep exactly the matching segments") {
  auto c1 = strata_class(rep(2, {{Rat(0), 2}}), 2);
  REQUIRE(c1.normalized.terms.size() == 1);
  CHECK(c1.normalized.terms[0].first.label == "seg1");

  auto c2 = strata_class(rep(2, {{Rat(0), 1}, {Rat(0), 1}}), 1);
  CHECK(c2.normalized.terms.size() == 2);

  auto c3 = strata_class(rep(3, {{Rat(0), 2}, {Rat(0), 1}}), 2);
  REQUIRE(c3.normalized.terms.size() == 1);
  CHECK(c3.normalized.terms[0].first.label == "seg1");
  // Strata atom weight: w0 + n - #S.
  CHECK(c3.normalized.terms[0].first.weight == Rat(1));

  // No segment of the requested size: empty class.
  CHECK(strata_class(rep(3, {{Rat(0), 3}}), 2).normalized.terms.empty());

  // Never raises InternalMismatch on a modest sweep.
  for (long long n = 1; n <= 6; ++n) {
    std::vector<std::vector<long long>> parts;
    std::function<void(long long, long long, std::vector<long long>&)> gen =
        [&](long long rest, long long maxp, std::vector<long long>& cur) {
          if (rest == 0) {
            parts.push_back(cur);
            return;
          }
          for (long long p = std::min(rest, maxp); p >= 1; --p) {
            cur.push_back(p);
            gen(rest - p, p, cur);
            cur.pop_back();
          }
        };
    std::vector<long long> cur;
    gen(n, n, cur);
    for (const auto& pt : parts) {
      std::vector<std::pair<Rat, long long>> data;
      for (long long part : pt) data.emplace_back(Rat(0), part);
      auto rr = rep(n, data);
      for (long long size = 1; size <= n; ++size)
        CHECK_NOTHROW(strata_class(rr, size));
    }
  }
}

TEST_CASE("telescoping identity evaluates to the indicator") {
  CHECK(telescope_check(1, 1) == 1);
  CHECK(telescope_check(3, 3) == 1);
  CHECK(telescope_check(3, 1) == 0);
  for (long long s = 1; s <= 8; ++s)
    for (long long size = 1; size <= s; ++size)
      CHECK(telescope_check(s, size) == (s == size ? 1 : 0));
}

TEST_CASE("segment JSON parsing") {
  auto r = segment_rep_from_json(
      json::parse(R"({"n": 3, "q": 4, "w0": "0",
                      "segments": [{"c": "0", "s": 2, "label": "a"},
                                   {"c": "1/2", "s": 1, "label": "b"}]})"),
      4, Rat(0));
  CHECK(r.n == 3);
  CHECK(r.segments[1].c == Rat(1, 2));
  CHECK(to_json(r)["segments"][0]["label"] == "a");

  // Labels are optional and autofilled; q and w0 fall back to defaults.
  auto d = segment_rep_from_json(
      json::parse(R"({"n": 2, "segments": [{"c": 0, "s": 2}]})"), 4, Rat(0));
  CHECK(d.segments[0].label == "seg1");
  CHECK(d.q.q == 4);

  CHECK_THROWS_AS(segment_rep_from_json(
                      json::parse(R"({"n": 1, "segments": [{"c": 0.5, "s": 1}]})"),
                      4, Rat(0)),
                  Error);
}
