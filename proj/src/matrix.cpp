#include "wd/matrix.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/multiprecision/miller_rabin.hpp>
#include <nlohmann/json.hpp>

#include "wd/error.hpp"

namespace wd::mat {

RatMatrix RatMatrix::identity(long long n) {
  RatMatrix m(n, n);
  for (long long i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

RatMatrix RatMatrix::from_rows(std::vector<std::vector<Rat>> rows) {
  long long r = static_cast<long long>(rows.size());
  long long c = r == 0 ? 0 : static_cast<long long>(rows[0].size());
  RatMatrix m(r, c);
  for (long long i = 0; i < r; ++i) {
    if (static_cast<long long>(rows[i].size()) != c)
      throw domain_error("RaggedMatrix", "rows have unequal lengths");
    for (long long j = 0; j < c; ++j) m.at(i, j) = std::move(rows[i][j]);
  }
  return m;
}

bool RatMatrix::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

RatMatrix operator*(const RatMatrix& a, const RatMatrix& b) {
  if (a.cols() != b.rows())
    throw domain_error("ShapeMismatch", "matrix product shape mismatch");
  RatMatrix c(a.rows(), b.cols());
  for (long long i = 0; i < a.rows(); ++i)
    for (long long k = 0; k < a.cols(); ++k) {
      if (a.at(i, k) == 0) continue;
      for (long long j = 0; j < b.cols(); ++j)
        c.at(i, j) += a.at(i, k) * b.at(k, j);
    }
  return c;
}

RatMatrix operator+(const RatMatrix& a, const RatMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw domain_error("ShapeMismatch", "matrix sum shape mismatch");
  RatMatrix c(a.rows(), a.cols());
  for (long long i = 0; i < a.rows(); ++i)
    for (long long j = 0; j < a.cols(); ++j)
      c.at(i, j) = a.at(i, j) + b.at(i, j);
  return c;
}

RatMatrix operator-(const RatMatrix& a, const RatMatrix& b) {
  return a + Rat(-1) * b;
}

RatMatrix operator*(const Rat& c, const RatMatrix& a) {
  RatMatrix b(a.rows(), a.cols());
  for (long long i = 0; i < a.rows(); ++i)
    for (long long j = 0; j < a.cols(); ++j) b.at(i, j) = c * a.at(i, j);
  return b;
}

namespace {

// In-place reduced row echelon form; returns pivot columns.
std::vector<long long> rref(RatMatrix& m) {
  std::vector<long long> pivots;
  long long row = 0;
  for (long long col = 0; col < m.cols() && row < m.rows(); ++col) {
    long long piv = -1;
    for (long long i = row; i < m.rows(); ++i)
      if (m.at(i, col) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != row)
      for (long long j = 0; j < m.cols(); ++j)
        std::swap(m.at(piv, j), m.at(row, j));
    Rat inv = Rat(1) / m.at(row, col);
    for (long long j = col; j < m.cols(); ++j) m.at(row, j) *= inv;
    for (long long i = 0; i < m.rows(); ++i) {
      if (i == row || m.at(i, col) == 0) continue;
      Rat f = m.at(i, col);
      for (long long j = col; j < m.cols(); ++j)
        m.at(i, j) -= f * m.at(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

long long rank(RatMatrix a) { return static_cast<long long>(rref(a).size()); }

std::optional<RatMatrix> inverse(const RatMatrix& a) {
  if (!a.is_square()) return std::nullopt;
  long long n = a.rows();
  RatMatrix aug = hcat(a, RatMatrix::identity(n));
  auto piv = rref(aug);
  if (static_cast<long long>(piv.size()) != n) return std::nullopt;
  for (long long p : piv)
    if (p >= n) return std::nullopt;  // rank deficiency spilled into the block
  RatMatrix inv(n, n);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) inv.at(i, j) = aug.at(i, n + j);
  return inv;
}

RatMatrix power(const RatMatrix& a, long long e) {
  RatMatrix r = RatMatrix::identity(a.rows());
  for (long long i = 0; i < e; ++i) r = r * a;
  return r;
}

RatMatrix kernel_basis(const RatMatrix& a) {
  RatMatrix m = a;
  auto pivots = rref(m);
  std::vector<long long> free_cols;
  for (long long j = 0; j < a.cols(); ++j)
    if (std::find(pivots.begin(), pivots.end(), j) == pivots.end())
      free_cols.push_back(j);
  RatMatrix basis(a.cols(), static_cast<long long>(free_cols.size()));
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    basis.at(free_cols[k], static_cast<long long>(k)) = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r)
      basis.at(pivots[r], static_cast<long long>(k)) =
          -m.at(static_cast<long long>(r), free_cols[k]);
  }
  return basis;
}

std::optional<RatMatrix> solve(const RatMatrix& a, const RatMatrix& b) {
  if (a.rows() != b.rows())
    throw domain_error("ShapeMismatch", "solve shape mismatch");
  RatMatrix aug = hcat(a, b);
  auto pivots = rref(aug);
  // Inconsistent if some pivot lands in the augmented block.
  for (long long p : pivots)
    if (p >= a.cols()) return std::nullopt;
  RatMatrix x(a.cols(), b.cols());
  for (std::size_t r = 0; r < pivots.size(); ++r)
    for (long long j = 0; j < b.cols(); ++j)
      x.at(pivots[r], j) = aug.at(static_cast<long long>(r), a.cols() + j);
  return x;
}

RatMatrix hcat(const RatMatrix& a, const RatMatrix& b) {
  if (a.rows() != b.rows())
    throw domain_error("ShapeMismatch", "hcat shape mismatch");
  RatMatrix c(a.rows(), a.cols() + b.cols());
  for (long long i = 0; i < a.rows(); ++i) {
    for (long long j = 0; j < a.cols(); ++j) c.at(i, j) = a.at(i, j);
    for (long long j = 0; j < b.cols(); ++j) c.at(i, a.cols() + j) = b.at(i, j);
  }
  return c;
}

std::vector<Rat> charpoly(const RatMatrix& a) {
  if (!a.is_square())
    throw domain_error("ShapeMismatch", "characteristic polynomial of a non-square matrix");
  long long n = a.rows();
  std::vector<Rat> c(static_cast<std::size_t>(n) + 1);
  c[static_cast<std::size_t>(n)] = 1;
  auto trace = [](const RatMatrix& m) {
    Rat t = 0;
    for (long long i = 0; i < m.rows(); ++i) t += m.at(i, i);
    return t;
  };
  RatMatrix m = a;
  for (long long k = 1; k <= n; ++k) {
    if (k > 1) {
      RatMatrix shifted = m;
      for (long long i = 0; i < n; ++i)
        shifted.at(i, i) += c[static_cast<std::size_t>(n - k + 1)];
      m = a * shifted;
    }
    c[static_cast<std::size_t>(n - k)] = -trace(m) / Rat(k);
  }
  return c;
}

namespace {

// ---- polynomial helpers (ascending coefficients over Q) ----

using Poly = std::vector<Rat>;

long long degree(const Poly& p) {
  for (long long i = static_cast<long long>(p.size()) - 1; i >= 0; --i)
    if (p[static_cast<std::size_t>(i)] != 0) return i;
  return -1;
}

Poly trim(Poly p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
  return p;
}

Rat poly_eval(const Poly& p, const Rat& x) {
  Rat v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return trim(std::move(c));
}

// Division with remainder; divisor must be nonzero.
std::pair<Poly, Poly> poly_divmod(Poly a, const Poly& b) {
  a = trim(std::move(a));
  long long db = degree(b);
  if (db < 0) throw internal_error("PolyDivZero", "division by zero polynomial");
  Poly q;
  long long da = degree(a);
  if (da >= db) q.assign(static_cast<std::size_t>(da - db) + 1, Rat(0));
  while ((da = degree(a)) >= db) {
    Rat f = a[static_cast<std::size_t>(da)] / b[static_cast<std::size_t>(db)];
    q[static_cast<std::size_t>(da - db)] = f;
    for (long long i = 0; i <= db; ++i)
      a[static_cast<std::size_t>(da - db + i)] -= f * b[static_cast<std::size_t>(i)];
  }
  return {trim(std::move(q)), trim(std::move(a))};
}

// Deflation by (x - root); assumes the root is exact.
Poly poly_deflate(const Poly& p, const Rat& root) {
  auto [q, r] = poly_divmod(p, Poly{-root, Rat(1)});
  if (!r.empty())
    throw internal_error("DeflateNonRoot", "deflation at a non-root");
  return q;
}

// a with a * g == 1 (mod h); requires gcd(g, h) = 1.
Poly poly_inverse_mod(const Poly& g, const Poly& h) {
  Poly r0 = trim(h), r1 = poly_divmod(g, h).second;
  Poly t0{}, t1{Rat(1)};
  while (degree(r1) >= 0) {
    auto [q, r2] = poly_divmod(r0, r1);
    Poly t2 = t0;
    Poly qt1 = poly_mul(q, t1);
    t2.resize(std::max(t2.size(), qt1.size()));
    for (std::size_t i = 0; i < qt1.size(); ++i) t2[i] -= qt1[i];
    r0 = r1;
    r1 = r2;
    t0 = t1;
    t1 = trim(std::move(t2));
  }
  if (degree(r0) != 0)
    throw internal_error("PolyNotCoprime", "modular inverse of non-coprime polynomials");
  Rat inv = Rat(1) / r0[0];
  for (auto& c : t0) c *= inv;
  return poly_divmod(t0, h).second;
}

RatMatrix poly_at_matrix(const Poly& p, const RatMatrix& a) {
  long long n = a.rows();
  RatMatrix v(n, n);
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    v = v * a;
    for (long long i = 0; i < n; ++i) v.at(i, i) += *it;
  }
  return v;
}

// ---- integer factorization for rational root search ----

Int mulmod(const Int& a, const Int& b, const Int& m) { return a * b % m; }

Int pollard_brent(const Int& n, std::mt19937_64& rng) {
  if (n % 2 == 0) return 2;
  std::uniform_int_distribution<unsigned long long> dist(1, 1ull << 62);
  while (true) {
    Int y = Int(dist(rng)) % n, c = Int(dist(rng)) % n, m = 128;
    if (c == 0) c = 1;
    Int g = 1, r = 1, q = 1, x = 0, ys = 0;
    while (g == 1) {
      x = y;
      for (Int i = 0; i < r; ++i) y = (mulmod(y, y, n) + c) % n;
      Int k = 0;
      while (k < r && g == 1) {
        ys = y;
        Int lim = r - k;
        if (m < lim) lim = m;
        for (Int i = 0; i < lim; ++i) {
          y = (mulmod(y, y, n) + c) % n;
          q = mulmod(q, abs(x - y), n);
        }
        g = gcd(q, n);
        k += m;
      }
      r *= 2;
    }
    if (g == n) {
      g = 1;
      while (g == 1) {
        ys = (mulmod(ys, ys, n) + c) % n;
        g = gcd(abs(x - ys), n);
      }
    }
    if (g != n) return g;
  }
}

void factor_into(Int v, std::map<Int, unsigned>& out, std::mt19937_64& rng) {
  if (v <= 1) return;
  for (Int p : {Int(2), Int(3), Int(5)}) {
    while (v % p == 0) {
      ++out[p];
      v /= p;
    }
  }
  Int d = 7;
  while (d * d <= v && d < (1 << 20)) {
    while (v % d == 0) {
      ++out[d];
      v /= d;
    }
    d += 2;
  }
  if (v == 1) return;
  if (d * d > v || boost::multiprecision::miller_rabin_test(v, 25)) {
    ++out[v];
    return;
  }
  Int f = pollard_brent(v, rng);
  factor_into(f, out, rng);
  factor_into(v / f, out, rng);
}

std::vector<Int> divisors_of(const Int& v) {
  std::map<Int, unsigned> factors;
  std::mt19937_64 rng(0x5eedf00dULL);
  factor_into(abs(v), factors, rng);
  std::vector<Int> divs{1};
  for (const auto& [p, e] : factors) {
    std::vector<Int> next;
    next.reserve(divs.size() * (e + 1));
    Int pe = 1;
    for (unsigned k = 0; k <= e; ++k) {
      for (const auto& d : divs) next.push_back(d * pe);
      pe *= p;
    }
    divs = std::move(next);
    if (divs.size() > 200000)
      throw domain_error("DivisorExplosion",
                         "too many candidate divisors in rational root search");
  }
  return divs;
}

struct RootSplit {
  std::vector<EigenFactor> roots;
  Poly residual;  // empty when the polynomial splits
};

RootSplit rational_roots(const Poly& monic) {
  Poly f = trim(monic);
  RootSplit out;
  if (degree(f) <= 0) return out;
  // Clear denominators to a primitive integer polynomial.
  Int lcm = 1;
  for (const auto& c : f) lcm = lcm / gcd(lcm, denominator(c)) * denominator(c);
  std::vector<Int> fi;
  fi.reserve(f.size());
  for (const auto& c : f)
    fi.push_back(numerator(c) * (lcm / denominator(c)));
  while (!fi.empty() && fi.front() == 0) {
    // x | f: root 0 (cannot occur for an invertible matrix, kept for safety).
    bool seen = false;
    for (auto& r : out.roots)
      if (r.value == 0) {
        ++r.mult;
        seen = true;
      }
    if (!seen) out.roots.push_back({Rat(0), 1});
    fi.erase(fi.begin());
  }
  if (fi.size() <= 1) return out;
  std::set<Rat> candidates;
  for (const auto& p : divisors_of(fi.front()))
    for (const auto& q : divisors_of(fi.back())) {
      candidates.insert(Rat(p, q));
      candidates.insert(Rat(-p, q));
    }
  Poly g(fi.size());
  for (std::size_t i = 0; i < fi.size(); ++i) g[i] = Rat(fi[i]);
  for (const auto& c : candidates) {
    while (degree(g) >= 1 && poly_eval(g, c) == 0) {
      bool seen = false;
      for (auto& r : out.roots)
        if (r.value == c) {
          ++r.mult;
          seen = true;
        }
      if (!seen) out.roots.push_back({c, 1});
      g = poly_deflate(g, c);
    }
  }
  if (degree(g) >= 1) out.residual = g;
  return out;
}

std::string poly_str(const Poly& p) {
  std::ostringstream os;
  bool first = true;
  for (long long i = degree(p); i >= 0; --i) {
    const Rat& c = p[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    if (!first) os << " + ";
    os << rat_str(c);
    if (i > 0) os << "*x^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

}  // namespace

std::vector<EigenFactor> rational_eigenvalues(const RatMatrix& a) {
  auto split = rational_roots(charpoly(a));
  // TODO: factor the residual so the error names an irreducible factor even
  // when the rootless part has degree > 2.
  if (!split.residual.empty())
    throw domain_error("IrrationalEigenvalue",
                       "characteristic polynomial has a factor with no rational root: " +
                           poly_str(split.residual));
  std::sort(split.roots.begin(), split.roots.end(),
            [](const EigenFactor& x, const EigenFactor& y) {
              return x.value < y.value;
            });
  return split.roots;
}

std::string matrix_str(const RatMatrix& a) {
  std::ostringstream os;
  os << "[";
  for (long long i = 0; i < a.rows(); ++i) {
    if (i) os << "; ";
    for (long long j = 0; j < a.cols(); ++j) {
      if (j) os << ", ";
      os << rat_str(a.at(i, j));
    }
  }
  os << "]";
  return os.str();
}

MatrixWD make_matrix_wd(ResidueCard q, RatMatrix phi, RatMatrix nilp) {
  if (!phi.is_square() || !nilp.is_square() || phi.rows() != nilp.rows())
    throw domain_error("ShapeMismatch", "phi and N must be square of equal size");
  if (!perfect_square_root(Int(q.q)))
    throw domain_error("BadResidueCard",
                       "matrix backend requires q to be a perfect square >= 4");
  auto phi_inv = inverse(phi);
  if (!phi_inv) throw domain_error("NotInvertible", "phi is not invertible");
  if (!power(nilp, nilp.rows()).is_zero())
    throw domain_error("NotNilpotent", "N is not nilpotent");
  RatMatrix residual = phi * nilp * *phi_inv - Rat(1, q.q) * nilp;
  if (!residual.is_zero())
    throw domain_error("CompatibilityViolated",
                       "phi N phi^-1 - q^-1 N = " + matrix_str(residual));
  rational_eigenvalues(phi);  // throws IrrationalEigenvalue on failure
  return MatrixWD{q, std::move(phi), std::move(nilp)};
}

MatrixWD make_matrix_wd_unchecked(ResidueCard q, RatMatrix phi, RatMatrix nilp) {
  return MatrixWD{q, std::move(phi), std::move(nilp)};
}

Int p0_of(const MatrixWD& m) {
  auto p0 = perfect_square_root(Int(m.q.q));
  if (!p0)
    throw domain_error("BadResidueCard", "q is not a perfect square");
  return *p0;
}

std::pair<RatMatrix, RatMatrix> mult_jordan(const MatrixWD& m) {
  long long n = m.phi.rows();
  if (n == 0) return {m.phi, m.phi};
  auto evs = rational_eigenvalues(m.phi);
  Poly cp = charpoly(m.phi);
  RatMatrix s(n, n);
  RatMatrix proj_sum(n, n);
  for (const auto& ev : evs) {
    // (x - lambda)^mult
    Poly h{Rat(1)};
    for (long long i = 0; i < ev.mult; ++i) h = poly_mul(h, Poly{-ev.value, Rat(1)});
    Poly g = poly_divmod(cp, h).first;
    Poly e = poly_divmod(poly_mul(poly_inverse_mod(g, h), g), cp).second;
    RatMatrix p = poly_at_matrix(e, m.phi);
    proj_sum = proj_sum + p;
    s = s + ev.value * p;
  }
  if (!(proj_sum == RatMatrix::identity(n)))
    throw internal_error("ProjectorSum", "generalized-eigenspace projectors do not sum to identity");
  auto s_inv = inverse(s);
  if (!s_inv)
    throw internal_error("SingularSemisimplePart", "semisimple factor is singular");
  RatMatrix u = *s_inv * m.phi;
  if (!(s * u == m.phi) || !(u * s == m.phi))
    throw internal_error("JordanFactorization", "s u != phi or u s != phi");
  RatMatrix un = u - RatMatrix::identity(n);
  if (!power(un, n).is_zero())
    throw internal_error("NotUnipotent", "unipotent factor check failed");
  return {std::move(s), std::move(u)};
}

MatrixWD frobenius_semisimplify(const MatrixWD& m) {
  auto [s, u] = mult_jordan(m);
  // s N s^-1 = q^-1 N must survive: N shifts generalized eigenspaces by q.
  auto s_inv = inverse(s);
  RatMatrix residual = s * m.nilp * *s_inv - Rat(1, m.q.q) * m.nilp;
  if (!residual.is_zero())
    throw internal_error("CompatibilityViolated",
                         "semisimple part violates the twisted commutation: " +
                             matrix_str(residual));
  return MatrixWD{m.q, std::move(s), m.nilp};
}

bool is_frobenius_semisimple(const MatrixWD& m) {
  long long n = m.phi.rows();
  for (const auto& ev : rational_eigenvalues(m.phi)) {
    RatMatrix shifted = m.phi;
    for (long long i = 0; i < n; ++i) shifted.at(i, i) -= ev.value;
    if (rank(shifted) != n - ev.mult) return false;
  }
  return true;
}

std::vector<long long> nilpotent_partition(const RatMatrix& nilp) {
  if (!nilp.is_square())
    throw domain_error("ShapeMismatch", "nilpotent partition of a non-square matrix");
  long long n = nilp.rows();
  if (!power(nilp, n).is_zero())
    throw domain_error("NotNilpotent", "matrix is not nilpotent");
  std::vector<long long> ranks{n};  // rank(N^0)
  RatMatrix p = RatMatrix::identity(n);
  for (long long j = 1; j <= n; ++j) {
    p = p * nilp;
    ranks.push_back(rank(p));
    if (ranks.back() == 0) break;
  }
  while (ranks.size() < 2 || ranks.back() != 0) ranks.push_back(0);
  std::vector<long long> partition;
  for (std::size_t j = 1; j + 1 <= ranks.size(); ++j) {
    long long ge_j = ranks[j - 1] - ranks[j];
    long long ge_j1 = j < ranks.size() - 1 ? ranks[j] - ranks[j + 1] : 0;
    for (long long k = 0; k < ge_j - ge_j1; ++k)
      partition.push_back(static_cast<long long>(j));
  }
  std::sort(partition.rbegin(), partition.rend());
  return partition;
}

std::map<Rat, long long> eigen_weights(const MatrixWD& m) {
  Int p0 = p0_of(m);
  std::map<Rat, long long> weights;
  for (const auto& ev : rational_eigenvalues(m.phi)) {
    auto w = log_base(abs(ev.value), p0);
    if (!w)
      throw domain_error("NotWeilLike", "eigenvalue " + rat_str(ev.value) +
                                            " not a power of " + p0.str());
    weights[Rat(*w)] += ev.mult;
  }
  return weights;
}

namespace {

struct Chain {
  std::vector<Rat> values;        // top/q^t for t = 0..T (gaps keep a slot)
  std::vector<RatMatrix> bases;   // eigenvector basis per level (may be 0-dim)
};

std::vector<Chain> eigen_chains(const MatrixWD& m) {
  long long n = m.phi.rows();
  auto evs = rational_eigenvalues(m.phi);
  std::map<Rat, long long> remaining;
  for (const auto& ev : evs) remaining[ev.value] = ev.mult;
  Rat q(m.q.q);
  std::vector<Chain> chains;
  // Walk eigenvalues from largest absolute value; each unvisited one seeds
  // the chain of its q-power class.
  std::vector<Rat> order;
  for (const auto& [v, mult] : remaining) order.push_back(v);
  std::sort(order.begin(), order.end(), [](const Rat& a, const Rat& b) {
    if (abs(a) != abs(b)) return abs(a) > abs(b);
    return a > b;
  });
  std::set<Rat> used;
  for (const auto& seed : order) {
    if (used.count(seed)) continue;
    Rat top = seed;
    while (remaining.count(top * q)) top *= q;
    Rat bottom = seed;
    while (remaining.count(bottom / q)) bottom /= q;
    Chain chain;
    for (Rat v = top;; v /= q) {
      chain.values.push_back(v);
      if (remaining.count(v)) {
        used.insert(v);
        RatMatrix shifted = m.phi;
        for (long long i = 0; i < n; ++i) shifted.at(i, i) -= v;
        chain.bases.push_back(kernel_basis(shifted));
      } else {
        chain.bases.emplace_back(n, 0);
      }
      if (v == bottom) break;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace

std::vector<EigenChain> eigenvalue_chains(const MatrixWD& m) {
  std::vector<EigenChain> out;
  for (const auto& chain : eigen_chains(m)) {
    EigenChain c;
    c.values = chain.values;
    for (const auto& b : chain.bases) c.dims.push_back(b.cols());
    out.push_back(std::move(c));
  }
  return out;
}

SymbolicWD to_symbolic(const MatrixWD& m, bool strict) {
  if (!is_frobenius_semisimple(m)) {
    if (strict)
      throw domain_error("NotFrobeniusSemisimple",
                         "phi is not semisimple; semisimplify first");
    return to_symbolic(frobenius_semisimplify(m), true);
  }
  eigen_weights(m);  // propagate NotWeilLike before any decomposition work
  Int p0 = p0_of(m);
  std::vector<std::pair<IndecompWD, long long>> terms;
  long long total = 0;
  for (const auto& chain : eigen_chains(m)) {
    long long levels = static_cast<long long>(chain.values.size());
    // Maps between consecutive eigenspace levels induced by N.
    std::vector<RatMatrix> step;
    for (long long t = 0; t + 1 < levels; ++t) {
      RatMatrix img = m.nilp * chain.bases[static_cast<std::size_t>(t)];
      auto x = solve(chain.bases[static_cast<std::size_t>(t + 1)], img);
      if (!x)
        throw internal_error("ChainLeak", "N leaves the eigenvalue chain");
      step.push_back(std::move(*x));
    }
    if (levels > 0) {
      RatMatrix img = m.nilp * chain.bases[static_cast<std::size_t>(levels - 1)];
      if (!img.is_zero())
        throw internal_error("ChainLeak", "N leaves the bottom of a chain");
    }
    // rank of the composite level i -> level j
    auto comp_rank = [&](long long i, long long j) -> long long {
      if (i < 0 || j >= levels || i > j) return 0;
      RatMatrix c = RatMatrix::identity(
          chain.bases[static_cast<std::size_t>(i)].cols());
      for (long long t = i; t < j; ++t) c = step[static_cast<std::size_t>(t)] * c;
      return rank(c);
    };
    for (long long i = 0; i < levels; ++i) {
      for (long long j = i; j < levels; ++j) {
        long long mult = comp_rank(i, j) - comp_rank(i - 1, j) -
                         comp_rank(i, j + 1) + comp_rank(i - 1, j + 1);
        if (mult < 0)
          throw internal_error("IntervalCount", "negative string multiplicity");
        if (mult == 0) continue;
        const Rat& top = chain.values[static_cast<std::size_t>(i)];
        auto w = log_base(abs(top), p0);
        if (!w) throw internal_error("WeilRecheck", "weight lookup failed");
        AtomRep atom = make_atom("ev:" + rat_str(top), 1, Rat(*w));
        terms.emplace_back(IndecompWD{std::move(atom), j - i + 1}, mult);
        total += (j - i + 1) * mult;
      }
    }
  }
  if (total != m.phi.rows())
    throw internal_error("DecompositionDim", "string lengths do not add up");
  return make_symbolic(m.q, std::move(terms));
}

MatrixWD from_symbolic(const SymbolicWD& a, const Int& p0) {
  if (p0 < 2) throw domain_error("BadResidueCard", "p0 must be >= 2");
  if (Int(a.q.q) != p0 * p0)
    throw domain_error("ResidueMismatch",
                       "symbolic q does not equal p0^2");
  long long n = dimension(a);
  RatMatrix phi(n, n), nilp(n, n);
  long long pos = 0;
  for (const auto& [t, mult] : a.terms) {
    if (!is_integer(t.atom.weight))
      throw domain_error("NonIntegerWeight",
                         "atom weight " + rat_str(t.atom.weight) +
                             " is not an integer");
    long long w = static_cast<long long>(numerator(t.atom.weight));
    Rat top = w >= 0 ? Rat(boost::multiprecision::pow(p0, static_cast<unsigned>(w)))
                     : Rat(1, boost::multiprecision::pow(p0, static_cast<unsigned>(-w)));
    // Labels of the form "ev:<rational>" carry an explicit eigenvalue; this
    // keeps from_symbolic a section of to_symbolic on negative eigenvalues.
    if (t.atom.label.rfind("ev:", 0) == 0) {
      auto v = rat_parse(t.atom.label.substr(3));
      if (v && abs(*v) == top) top = *v;
    }
    for (long long copy = 0; copy < t.atom.dim * mult; ++copy) {
      Rat v = top;
      for (long long i = 0; i < t.s; ++i) {
        phi.at(pos + i, pos + i) = v;
        v /= a.q.q;
        if (i + 1 < t.s) nilp.at(pos + i + 1, pos + i) = 1;
      }
      pos += t.s;
    }
  }
  return make_matrix_wd(a.q, std::move(phi), std::move(nilp));
}

json to_json(const MatrixWD& m) {
  auto dump = [](const RatMatrix& a) {
    json rows = json::array();
    for (long long i = 0; i < a.rows(); ++i) {
      json row = json::array();
      for (long long j = 0; j < a.cols(); ++j) row.push_back(rat_str(a.at(i, j)));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json j;
  j["q"] = m.q.q;
  j["phi"] = dump(m.phi);
  j["nilp"] = dump(m.nilp);
  return j;
}

MatrixWD matrix_wd_from_json(const json& j) {
  if (!j.is_object()) throw parse_error("expected a JSON object");
  for (const char* field : {"q", "phi", "nilp"})
    if (!j.contains(field))
      throw parse_error(std::string("missing field '") + field + "'");
  if (!j["q"].is_number_integer()) throw parse_error("field 'q' must be an integer");
  auto load = [](const json& rows, const std::string& field) {
    if (!rows.is_array()) throw parse_error("field '" + field + "' must be an array");
    std::vector<std::vector<Rat>> out;
    for (const auto& row : rows) {
      if (!row.is_array()) throw parse_error("field '" + field + "' must be an array of arrays");
      std::vector<Rat> r;
      for (const auto& cell : row) {
        if (cell.is_number_integer())
          r.emplace_back(cell.get<long long>());
        else if (cell.is_string()) {
          auto v = rat_parse(cell.get<std::string>());
          if (!v) throw parse_error("field '" + field + "': bad fraction string");
          r.push_back(*v);
        } else {
          throw parse_error("field '" + field +
                            "': entries must be integers or exact fraction strings");
        }
      }
      out.push_back(std::move(r));
    }
    return RatMatrix::from_rows(std::move(out));
  };
  return make_matrix_wd(make_residue_card(j["q"].get<long long>()),
                        load(j["phi"], "phi"), load(j["nilp"], "nilp"));
}

}  // namespace wd::mat
