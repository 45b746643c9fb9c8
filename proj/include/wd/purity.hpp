#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wd/matrix.hpp"
#include "wd/symbolic.hpp"

namespace wd::purity {

enum class VerdictKind { strictly_pure, pure, mixed, not_mixed };

// Purity classification. An empty representation is vacuously pure:
// strictly_pure with no specific center.
struct Verdict {
  VerdictKind kind = VerdictKind::mixed;
  std::optional<Rat> center;
  bool vacuous = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

bool is_pure(const Verdict& v);
bool is_pure_of(const Verdict& v, const Rat& k);
std::string verdict_str(const Verdict& v);

Verdict classify(const SymbolicWD& a);
Verdict classify(const mat::MatrixWD& m);

struct FiltrationJump {
  Rat weight;
  long long dim;  // cumulative: dim Fil_w
  mat::RatMatrix basis;
};

// Increasing, exhaustive weight filtration with N(Fil_i) in Fil_{i-2},
// checked. The choice is structural: Fil_i is spanned by the generalized
// eigenspaces of weight <= i.
struct WeightFiltration {
  std::vector<FiltrationJump> jumps;
};

WeightFiltration weight_filtration(const mat::MatrixWD& m);

struct PrimitiveLayer {
  long long i;  // relative index; V(i) = ker(N^{i+1}: V_i -> V_{-i-2})
  long long dim;
  mat::RatMatrix basis;  // empty on the symbolic backend
};

struct PrimitiveDecomposition {
  Rat center;
  std::vector<PrimitiveLayer> layers;
};

PrimitiveDecomposition primitive_decomposition(const SymbolicWD& a, const Rat& center);
PrimitiveDecomposition primitive_decomposition(const mat::MatrixWD& m, const Rat& center);

struct NoPureN {
  std::string reason;
};

// Forgets N: Sp_s(atom) becomes its s twist lines.
SymbolicWD strip_monodromy(const SymbolicWD& a);

// Unique pure completion of a semisimple representation with N = 0, when
// one exists. The string lengths are forced by the weight histogram, so a
// greedy regrouping from the top weight either succeeds uniquely or proves
// no N works.
std::variant<SymbolicWD, NoPureN> reconstruct_monodromy(const SymbolicWD& stripped);
std::variant<mat::MatrixWD, NoPureN> reconstruct_monodromy(const mat::MatrixWD& stripped);

// Symbolic sub-object: one truncation level per copy of each canonical
// term, 0..s, meaning the bottom slice of that string that is kept.
struct SymbolicSub {
  std::vector<std::vector<long long>> truncations;
};

struct SummandResult {
  bool summand = false;  // the constructive verdict (route c)
  bool route_exterior = false;    // top exterior power has weight k dim W
  bool route_pure = false;        // W itself is pure of weight k
  bool route_complement = false;  // an equivariant projector onto W exists
  // Complement U with V = W + U, built layerwise from the primitive
  // decomposition; basis columns on the matrix backend.
  std::optional<mat::RatMatrix> complement_basis;
  std::optional<SymbolicWD> complement_symbolic;
};

SummandResult summand_test(const mat::MatrixWD& v, const mat::RatMatrix& w_basis);
SummandResult summand_test(const SymbolicWD& v, const SymbolicSub& w);

struct CriterionFails {
  long long j;
};

struct MatrixSplitting {
  std::vector<mat::RatMatrix> piece_bases;   // one per graded piece, deepest first
  std::vector<mat::MatrixWD> pieces;         // the pieces as representations
};

struct SymbolicSplitting {
  std::vector<SymbolicWD> pieces;  // deepest first
};

// Steps are the proper filtration steps F^1 (largest) down to F^m; F^0 = V
// and F^{m+1} = 0 are implicit. Reports the first failing index scanning
// from the deepest step.
std::variant<MatrixSplitting, CriterionFails> filtration_split(
    const mat::MatrixWD& v, const std::vector<mat::RatMatrix>& steps);
std::variant<SymbolicSplitting, CriterionFails> filtration_split(
    const SymbolicWD& v, const std::vector<SymbolicSub>& steps);

// Representation induced on a phi- and N-stable subspace, in the basis
// coordinates. Throws NotSubrepresentation when the subspace is not stable.
mat::MatrixWD restrict_to_subspace(const mat::MatrixWD& v, const mat::RatMatrix& basis);

json purity_certificate(const mat::MatrixWD& m, bool include_bases = true);
json purity_certificate(const SymbolicWD& a);
json to_json(const Verdict& v);

}  // namespace wd::purity
