#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wd/rational.hpp"
#include "wd/symbolic.hpp"

namespace wd::mat {

// Dense matrix of exact rationals, row-major. No floating point anywhere
// in this module.
class RatMatrix {
 public:
  RatMatrix() = default;
  RatMatrix(long long rows, long long cols)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols)) {}

  static RatMatrix identity(long long n);
  static RatMatrix from_rows(std::vector<std::vector<Rat>> rows);

  long long rows() const { return rows_; }
  long long cols() const { return cols_; }

  Rat& at(long long i, long long j) { return a_[idx(i, j)]; }
  const Rat& at(long long i, long long j) const { return a_[idx(i, j)]; }

  bool is_zero() const;
  bool is_square() const { return rows_ == cols_; }

  friend bool operator==(const RatMatrix&, const RatMatrix&) = default;

 private:
  std::size_t idx(long long i, long long j) const {
    return static_cast<std::size_t>(i * cols_ + j);
  }
  long long rows_ = 0;
  long long cols_ = 0;
  std::vector<Rat> a_;
};

RatMatrix operator*(const RatMatrix& a, const RatMatrix& b);
RatMatrix operator+(const RatMatrix& a, const RatMatrix& b);
RatMatrix operator-(const RatMatrix& a, const RatMatrix& b);
RatMatrix operator*(const Rat& c, const RatMatrix& a);

long long rank(RatMatrix a);
std::optional<RatMatrix> inverse(const RatMatrix& a);
RatMatrix power(const RatMatrix& a, long long e);

// Basis of the right kernel, as matrix columns (cols() == nullity).
RatMatrix kernel_basis(const RatMatrix& a);

// Columns x with a*x = b, one column per column of b; nullopt if any
// system is inconsistent.
std::optional<RatMatrix> solve(const RatMatrix& a, const RatMatrix& b);

// Horizontal concatenation.
RatMatrix hcat(const RatMatrix& a, const RatMatrix& b);

// Monic characteristic polynomial, ascending coefficients
// (c[0] + c[1] x + ... + x^n). Faddeev-LeVerrier, exact.
std::vector<Rat> charpoly(const RatMatrix& a);

struct EigenFactor {
  Rat value;
  long long mult;
};

// Roots of the characteristic polynomial over Q, with multiplicity.
// Throws IrrationalEigenvalue (carrying the offending factor) if the
// polynomial does not split into rational linear factors.
std::vector<EigenFactor> rational_eigenvalues(const RatMatrix& a);

std::string matrix_str(const RatMatrix& a);

// Exact pair (phi, N) over a residue cardinality q = p0^2 satisfying
// phi N phi^-1 = q^-1 N, with phi invertible, N nilpotent, and all
// eigenvalues of phi rational.
struct MatrixWD {
  ResidueCard q;
  RatMatrix phi;
  RatMatrix nilp;
};

// Validating constructor. Errors: NotInvertible, NotNilpotent,
// CompatibilityViolated (reports the residual matrix), IrrationalEigenvalue.
MatrixWD make_matrix_wd(ResidueCard q, RatMatrix phi, RatMatrix nilp);

// Skips all validation; for diagnostics and negative tests only.
MatrixWD make_matrix_wd_unchecked(ResidueCard q, RatMatrix phi, RatMatrix nilp);

Int p0_of(const MatrixWD& m);

// Multiplicative Jordan decomposition phi = s u = u s with s semisimple
// over Q and u unipotent, via generalized-eigenspace projectors.
std::pair<RatMatrix, RatMatrix> mult_jordan(const MatrixWD& m);

// Replaces phi by its semisimple factor; idempotent, preserves everything
// else. The twisted commutation of s with N is asserted, not assumed.
MatrixWD frobenius_semisimplify(const MatrixWD& m);

bool is_frobenius_semisimple(const MatrixWD& m);

// Jordan block sizes of a nilpotent matrix, descending.
std::vector<long long> nilpotent_partition(const RatMatrix& nilp);

// Weight multiset of phi: weight(alpha) = log_{p0} |alpha|.
// Throws NotWeilLike if some |alpha| is not an exact power of p0.
std::map<Rat, long long> eigen_weights(const MatrixWD& m);

// One q-power class of eigenvalues, top down; dims are geometric
// multiplicities (0 marks a gap in the chain).
struct EigenChain {
  std::vector<Rat> values;
  std::vector<long long> dims;
};

std::vector<EigenChain> eigenvalue_chains(const MatrixWD& m);

// Decomposition into Sp-strings along eigenvalue chains alpha, alpha/q, ...
// Atom labels are generated from top eigenvalues ("ev:2", "ev:1/4", ...).
SymbolicWD to_symbolic(const MatrixWD& m, bool strict = false);

// Block-diagonal standard model of a symbolic representation with integer
// weights: each string is diag(a, a/q, ...) with N the down-shift.
MatrixWD from_symbolic(const SymbolicWD& a, const Int& p0);

json to_json(const MatrixWD& m);
MatrixWD matrix_wd_from_json(const json& j);

}  // namespace wd::mat
