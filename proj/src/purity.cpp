#include "wd/purity.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"

namespace wd::purity {

using mat::MatrixWD;
using mat::RatMatrix;

bool is_pure(const Verdict& v) {
  return v.kind == VerdictKind::strictly_pure || v.kind == VerdictKind::pure;
}

bool is_pure_of(const Verdict& v, const Rat& k) {
  if (!is_pure(v)) return false;
  if (v.vacuous) return true;
  return v.center && *v.center == k;
}

std::string verdict_str(const Verdict& v) {
  if (v.vacuous) return "vacuously-pure";
  switch (v.kind) {
    case VerdictKind::strictly_pure:
      return "strictly-pure";
    case VerdictKind::pure:
      return "pure";
    case VerdictKind::mixed:
      return "mixed";
    case VerdictKind::not_mixed:
      return "not-mixed";
  }
  return "?";
}

Verdict classify(const SymbolicWD& a) {
  if (a.terms.empty()) return Verdict{VerdictKind::strictly_pure, std::nullopt, true};
  bool single_line = true;
  const Rat& w0 = a.terms.front().first.atom.weight;
  for (const auto& [t, m] : a.terms)
    if (t.s != 1 || t.atom.weight != w0) single_line = false;
  if (single_line) return Verdict{VerdictKind::strictly_pure, w0, false};
  // The center of any pure grouping is forced to w - (s-1) on every term.
  Rat center = a.terms.front().first.atom.weight - Rat(a.terms.front().first.s - 1);
  for (const auto& [t, m] : a.terms)
    if (t.atom.weight - Rat(t.s - 1) != center)
      return Verdict{VerdictKind::mixed, std::nullopt, false};
  return Verdict{VerdictKind::pure, center, false};
}

Verdict classify(const MatrixWD& m) {
  try {
    mat::eigen_weights(m);
  } catch (const Error& e) {
    if (e.code() == "NotWeilLike")
      return Verdict{VerdictKind::not_mixed, std::nullopt, false};
    throw;
  }
  return classify(mat::to_symbolic(m));
}

namespace {

// Basis of the column-space intersection of two subspaces.
RatMatrix intersect_columns(const RatMatrix& a, const RatMatrix& b) {
  if (a.cols() == 0 || b.cols() == 0) return RatMatrix(a.rows(), 0);
  RatMatrix k = kernel_basis(hcat(a, b));
  RatMatrix xa(a.cols(), k.cols());
  for (long long i = 0; i < a.cols(); ++i)
    for (long long j = 0; j < k.cols(); ++j) xa.at(i, j) = k.at(i, j);
  RatMatrix raw = a * xa;
  // Columns may be dependent; keep an independent subset.
  RatMatrix out(a.rows(), 0);
  for (long long j = 0; j < raw.cols(); ++j) {
    RatMatrix col(a.rows(), 1);
    for (long long i = 0; i < a.rows(); ++i) col.at(i, 0) = raw.at(i, j);
    RatMatrix cand = hcat(out, col);
    if (rank(cand) > out.cols()) out = std::move(cand);
  }
  return out;
}

// Extends `base` to a basis of span(whole) by columns of `whole`.
RatMatrix complement_within(const RatMatrix& base, const RatMatrix& whole) {
  RatMatrix picked(base.rows(), 0);
  RatMatrix acc = base;
  long long target = rank(whole);
  for (long long j = 0; j < whole.cols() && acc.cols() - base.cols() < target; ++j) {
    RatMatrix col(whole.rows(), 1);
    for (long long i = 0; i < whole.rows(); ++i) col.at(i, 0) = whole.at(i, j);
    RatMatrix cand = hcat(acc, col);
    if (rank(cand) > rank(acc)) {
      acc = std::move(cand);
      picked = hcat(picked, col);
    }
  }
  return picked;
}

Rat det_of(const RatMatrix& a) {
  auto cp = mat::charpoly(a);
  Rat d = cp.front();
  if (a.rows() % 2 != 0) d = -d;
  return d;
}

struct WeightSpaces {
  // weight -> basis of the sum of eigenspaces of that weight
  std::map<Rat, RatMatrix> spaces;
};

WeightSpaces weight_spaces(const MatrixWD& m) {
  Int p0 = mat::p0_of(m);
  long long n = m.phi.rows();
  WeightSpaces out;
  for (const auto& ev : mat::rational_eigenvalues(m.phi)) {
    auto w = log_base(abs(ev.value), p0);
    if (!w)
      throw domain_error("NotWeilLike", "eigenvalue " + rat_str(ev.value) +
                                            " not a power of " + p0.str());
    RatMatrix shifted = m.phi;
    for (long long i = 0; i < n; ++i) shifted.at(i, i) -= ev.value;
    RatMatrix basis = kernel_basis(shifted);
    auto it = out.spaces.find(Rat(*w));
    if (it == out.spaces.end())
      out.spaces.emplace(Rat(*w), std::move(basis));
    else
      it->second = hcat(it->second, basis);
  }
  return out;
}

void require_semisimple(const MatrixWD& m) {
  if (!mat::is_frobenius_semisimple(m))
    throw domain_error("NotFrobeniusSemisimple",
                       "operation requires a Frobenius-semisimple input");
}

}  // namespace

WeightFiltration weight_filtration(const MatrixWD& m) {
  Int p0 = mat::p0_of(m);
  long long n = m.phi.rows();
  // Generalized eigenspaces grouped by weight.
  std::map<Rat, RatMatrix> gen;
  for (const auto& ev : mat::rational_eigenvalues(m.phi)) {
    auto w = log_base(abs(ev.value), p0);
    if (!w)
      throw domain_error("NotWeilLike", "eigenvalue " + rat_str(ev.value) +
                                            " not a power of " + p0.str());
    RatMatrix shifted = m.phi;
    for (long long i = 0; i < n; ++i) shifted.at(i, i) -= ev.value;
    RatMatrix basis = kernel_basis(power(shifted, ev.mult));
    auto it = gen.find(Rat(*w));
    if (it == gen.end())
      gen.emplace(Rat(*w), std::move(basis));
    else
      it->second = hcat(it->second, basis);
  }
  WeightFiltration fil;
  RatMatrix acc(n, 0);
  for (const auto& [w, basis] : gen) {
    acc = hcat(acc, basis);
    fil.jumps.push_back(FiltrationJump{w, rank(acc), acc});
  }
  // N must lower the filtration by two steps of weight.
  for (const auto& jump : fil.jumps) {
    RatMatrix target(n, 0);
    for (const auto& lower : fil.jumps)
      if (lower.weight <= jump.weight - 2) target = lower.basis;
    RatMatrix image = m.nilp * jump.basis;
    if (image.is_zero()) continue;
    if (target.cols() == 0 || !solve(target, image))
      throw domain_error("MonodromyViolation",
                         "N does not map Fil_" + rat_str(jump.weight) +
                             " into Fil_" + rat_str(jump.weight - 2));
  }
  return fil;
}

PrimitiveDecomposition primitive_decomposition(const SymbolicWD& a, const Rat& center) {
  auto verdict = classify(a);
  if (!is_pure_of(verdict, center))
    throw domain_error("NotPure", "input is not pure of weight " + rat_str(center));
  std::map<long long, long long> dims;
  for (const auto& [t, m] : a.terms) dims[t.s - 1] += m * t.atom.dim;
  // Dimension form of [V(i)] = [V_i] - [V_{i+2} (x) |Art^-1|].
  auto prof = weight_profile(a);
  auto rel = [&](long long i) {
    auto it = prof.find(center + Rat(i));
    return it == prof.end() ? 0 : it->second;
  };
  PrimitiveDecomposition out{center, {}};
  for (const auto& [i, d] : dims) {
    if (rel(i) - rel(i + 2) != d)
      throw internal_error("PrimitiveIdentity",
                           "dim V(i) != dim V_i - dim V_{i+2} at i=" + std::to_string(i));
    out.layers.push_back(PrimitiveLayer{i, d, RatMatrix()});
  }
  return out;
}

PrimitiveDecomposition primitive_decomposition(const MatrixWD& m, const Rat& center) {
  require_semisimple(m);
  auto verdict = classify(m);
  if (!is_pure_of(verdict, center))
    throw domain_error("NotPure", "input is not pure of weight " + rat_str(center));
  auto ws = weight_spaces(m);
  long long n = m.phi.rows();
  auto space_of = [&](const Rat& w) -> RatMatrix {
    auto it = ws.spaces.find(w);
    return it == ws.spaces.end() ? RatMatrix(n, 0) : it->second;
  };
  PrimitiveDecomposition out{center, {}};
  for (const auto& [w, basis] : ws.spaces) {
    Rat rel = w - center;
    if (rel < 0 || !is_integer(rel)) continue;
    long long i = static_cast<long long>(numerator(rel));
    RatMatrix ker = kernel_basis(power(m.nilp, i + 1));
    RatMatrix vi = intersect_columns(basis, ker);
    long long expect = basis.cols() - space_of(w + 2).cols();
    if (vi.cols() != expect)
      throw internal_error("PrimitiveIdentity",
                           "dim V(i) != dim V_i - dim V_{i+2} at i=" + std::to_string(i));
    if (vi.cols() > 0)
      out.layers.push_back(PrimitiveLayer{i, vi.cols(), vi});
  }
  return out;
}

SymbolicWD strip_monodromy(const SymbolicWD& a) {
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (const auto& [t, m] : a.terms)
    for (long long i = 0; i < t.s; ++i)
      terms.emplace_back(
          IndecompWD{make_atom(t.atom.label, t.atom.dim, t.atom.weight - 2 * Rat(i)), 1},
          m);
  return make_symbolic(a.q, std::move(terms));
}

namespace {

struct StringGroup {
  Rat top_weight;
  long long length;
  long long count;
};

// Regroups a weight histogram (descending counts per weight) into strings
// centered at k. The top weight forces the length of every string it
// heads, so the decomposition is unique when it exists.
std::optional<std::vector<StringGroup>> regroup_at(
    std::map<Rat, long long> hist, const Rat& k) {
  std::vector<StringGroup> out;
  while (!hist.empty()) {
    auto top = std::prev(hist.end());
    Rat w = top->first;
    long long c = top->second;
    Rat span = w - k;
    if (span < 0 || !is_integer(span)) return std::nullopt;
    long long len = static_cast<long long>(numerator(span)) + 1;
    for (long long t = 0; t < len; ++t) {
      auto it = hist.find(w - 2 * Rat(t));
      if (it == hist.end() || it->second < c) return std::nullopt;
      it->second -= c;
      if (it->second == 0) hist.erase(it);
    }
    out.push_back(StringGroup{w, len, c});
  }
  return out;
}

std::optional<Rat> histogram_center(const std::map<Rat, long long>& hist) {
  if (hist.empty()) return std::nullopt;
  return (hist.begin()->first + std::prev(hist.end())->first) / 2;
}

}  // namespace

std::variant<SymbolicWD, NoPureN> reconstruct_monodromy(const SymbolicWD& stripped) {
  for (const auto& [t, m] : stripped.terms)
    if (t.s != 1)
      throw domain_error("MonodromyNotStripped",
                         "reconstruction expects an N = 0 input (all strings of length 1)");
  if (stripped.terms.empty()) return stripped;
  // Strings can only join twists of one atom line: group by (label, dim).
  std::map<std::pair<std::string, long long>, std::map<Rat, long long>> groups;
  for (const auto& [t, m] : stripped.terms)
    groups[{t.atom.label, t.atom.dim}][t.atom.weight] += m;
  std::optional<Rat> k;
  for (const auto& [key, hist] : groups) {
    auto c = histogram_center(hist);
    if (!c) continue;
    if (k && *k != *c)
      return NoPureN{"weight histograms center at " + rat_str(*k) + " and " +
                     rat_str(*c)};
    k = c;
  }
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (const auto& [key, hist] : groups) {
    auto strings = regroup_at(hist, *k);
    if (!strings)
      return NoPureN{"weight histogram of '" + key.first +
                     "' is not a union of strings centered at " + rat_str(*k)};
    for (const auto& s : *strings)
      terms.emplace_back(
          IndecompWD{make_atom(key.first, key.second, s.top_weight), s.length},
          s.count);
  }
  return make_symbolic(stripped.q, std::move(terms));
}

std::variant<MatrixWD, NoPureN> reconstruct_monodromy(const MatrixWD& stripped) {
  if (!stripped.nilp.is_zero())
    throw domain_error("MonodromyNotStripped", "reconstruction expects N = 0");
  require_semisimple(stripped);
  Int p0 = mat::p0_of(stripped);
  auto chains = mat::eigenvalue_chains(stripped);
  std::optional<Rat> k;
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (const auto& chain : chains) {
    std::map<Rat, long long> hist;
    std::map<Rat, Rat> value_of_weight;
    for (std::size_t t = 0; t < chain.values.size(); ++t) {
      if (chain.dims[t] == 0) continue;
      auto w = log_base(abs(chain.values[t]), p0);
      if (!w)
        throw domain_error("NotWeilLike",
                           "eigenvalue " + rat_str(chain.values[t]) +
                               " not a power of " + p0.str());
      hist[Rat(*w)] += chain.dims[t];
      value_of_weight[Rat(*w)] = chain.values[t];
    }
    auto c = histogram_center(hist);
    if (!c) continue;
    if (k && *k != *c)
      return NoPureN{"eigenvalue chains center at different weights"};
    k = c;
    auto strings = regroup_at(hist, *c);
    if (!strings)
      return NoPureN{"chain weight histogram is not a union of centered strings"};
    for (const auto& s : *strings)
      terms.emplace_back(
          IndecompWD{make_atom("ev:" + rat_str(value_of_weight[s.top_weight]), 1,
                               s.top_weight),
                     s.length},
          s.count);
  }
  auto sym = make_symbolic(stripped.q, std::move(terms));
  return mat::from_symbolic(sym, p0);
}

mat::MatrixWD restrict_to_subspace(const MatrixWD& v, const RatMatrix& basis) {
  if (basis.rows() != v.phi.rows())
    throw domain_error("NotSubrepresentation", "basis has wrong ambient dimension");
  if (rank(basis) != basis.cols())
    throw domain_error("NotSubrepresentation", "basis columns are dependent");
  auto p = solve(basis, v.phi * basis);
  if (!p) throw domain_error("NotSubrepresentation", "subspace is not phi-stable");
  auto q = solve(basis, v.nilp * basis);
  if (!q) throw domain_error("NotSubrepresentation", "subspace is not N-stable");
  return mat::make_matrix_wd(v.q, std::move(*p), std::move(*q));
}

namespace {

// Existence of a phi- and N-equivariant projector onto W, as a linear
// system in the d x n coefficient matrix X of pi = B X.
bool equivariant_projector_exists(const MatrixWD& v, const RatMatrix& b) {
  long long n = v.phi.rows();
  long long d = b.cols();
  if (d == 0) return true;
  long long unknowns = d * n;
  std::vector<std::vector<Rat>> rows;
  std::vector<Rat> rhs;
  auto xidx = [&](long long i, long long j) { return i * n + j; };
  // X B = I_d
  for (long long i = 0; i < d; ++i)
    for (long long kk = 0; kk < d; ++kk) {
      std::vector<Rat> row(static_cast<std::size_t>(unknowns), Rat(0));
      for (long long j = 0; j < n; ++j)
        row[static_cast<std::size_t>(xidx(i, j))] = b.at(j, kk);
      rows.push_back(std::move(row));
      rhs.push_back(i == kk ? Rat(1) : Rat(0));
    }
  // B X A = A B X for A in {phi, N}
  for (const RatMatrix* a : {&v.phi, &v.nilp}) {
    RatMatrix ab = *a * b;
    for (long long r = 0; r < n; ++r)
      for (long long c = 0; c < n; ++c) {
        std::vector<Rat> row(static_cast<std::size_t>(unknowns), Rat(0));
        for (long long i = 0; i < d; ++i) {
          for (long long j = 0; j < n; ++j)
            row[static_cast<std::size_t>(xidx(i, j))] += b.at(r, i) * a->at(j, c);
          row[static_cast<std::size_t>(xidx(i, c))] -= ab.at(r, i);
        }
        rows.push_back(std::move(row));
        rhs.push_back(0);
      }
  }
  RatMatrix sys = RatMatrix::from_rows(std::move(rows));
  RatMatrix target(sys.rows(), 1);
  for (long long i = 0; i < sys.rows(); ++i) target.at(i, 0) = rhs[static_cast<std::size_t>(i)];
  return solve(sys, target).has_value();
}

// Complement construction following the primitive decomposition: pick a
// weight-eigenspace complement U(i) of W(i) in V(i) and spread it with N.
RatMatrix build_complement(const MatrixWD& v, const RatMatrix& w_basis, const Rat& k) {
  long long n = v.phi.rows();
  auto prim = primitive_decomposition(v, k);
  auto ws = weight_spaces(v);
  RatMatrix u(n, 0);
  for (const auto& layer : prim.layers) {
    // Split V(i) by weight-eigenspace pieces so any linear complement of
    // W(i) inside a piece is automatically phi-stable.
    for (const auto& ev : mat::rational_eigenvalues(v.phi)) {
      RatMatrix shifted = v.phi;
      for (long long i = 0; i < n; ++i) shifted.at(i, i) -= ev.value;
      RatMatrix epiece = kernel_basis(shifted);
      RatMatrix vi_piece = intersect_columns(layer.basis, epiece);
      if (vi_piece.cols() == 0) continue;
      RatMatrix wi_piece = intersect_columns(w_basis, vi_piece);
      RatMatrix ui_piece = complement_within(wi_piece, vi_piece);
      RatMatrix spread = ui_piece;
      for (long long j = 0; j <= layer.i; ++j) {
        u = hcat(u, spread);
        if (j < layer.i) spread = v.nilp * spread;
      }
    }
  }
  if (rank(u) != u.cols() || u.cols() + w_basis.cols() != n ||
      rank(hcat(w_basis, u)) != n)
    throw internal_error("ComplementConstruction",
                         "primitive complement does not complete a direct sum");
  return u;
}

}  // namespace

SummandResult summand_test(const MatrixWD& v, const RatMatrix& w_basis) {
  require_semisimple(v);
  auto verdict = classify(v);
  if (!is_pure(verdict))
    throw domain_error("NotPure", "ambient representation is not pure");
  if (verdict.vacuous) {
    if (w_basis.cols() != 0)
      throw domain_error("NotSubrepresentation", "sub of the zero representation");
    return SummandResult{true, true, true, true, RatMatrix(0, 0), std::nullopt};
  }
  Rat k = *verdict.center;
  MatrixWD w_rep = restrict_to_subspace(v, w_basis);  // validates stability
  long long d = w_basis.cols();
  Int p0 = mat::p0_of(v);

  SummandResult res;
  // (a) top exterior power: N acts by the trace (zero), so purity of the
  // line is exactly |det phi|_W| = p0^(k dim W).
  if (d == 0) {
    res.route_exterior = true;
  } else {
    auto logdet = log_base(abs(det_of(w_rep.phi)), p0);
    res.route_exterior = logdet && Rat(*logdet) == k * Rat(d);
  }
  // (b) W pure of weight k
  res.route_pure = is_pure_of(classify(w_rep), k);
  // (c) W admits an equivariant projector
  res.route_complement = equivariant_projector_exists(v, w_basis);
  res.summand = res.route_complement;
  if (res.route_pure && res.summand)
    res.complement_basis = build_complement(v, w_basis, k);
  return res;
}

namespace {

void validate_sub_shape(const SymbolicWD& v, const SymbolicSub& w) {
  if (w.truncations.size() != v.terms.size())
    throw domain_error("NotSubrepresentation",
                       "truncation list does not match the term list");
  for (std::size_t i = 0; i < v.terms.size(); ++i) {
    const auto& [t, m] = v.terms[i];
    if (static_cast<long long>(w.truncations[i].size()) != m)
      throw domain_error("NotSubrepresentation",
                         "need one truncation per copy of each term");
    for (long long j : w.truncations[i])
      if (j < 0 || j > t.s)
        throw domain_error("NotSubrepresentation",
                           "truncation out of range 0..s");
  }
}

// Bottom slice of length j of Sp_s(atom w): Sp_j anchored at w - 2(s-j).
IndecompWD bottom_slice(const IndecompWD& t, long long j) {
  return IndecompWD{
      make_atom(t.atom.label, t.atom.dim, t.atom.weight - 2 * Rat(t.s - j)), j};
}

SymbolicWD sub_as_symbolic(const SymbolicWD& v, const SymbolicSub& w) {
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (std::size_t i = 0; i < v.terms.size(); ++i)
    for (long long j : w.truncations[i])
      if (j > 0) terms.emplace_back(bottom_slice(v.terms[i].first, j), 1);
  return make_symbolic(v.q, std::move(terms));
}

Rat profile_weight_sum(const SymbolicWD& a) {
  Rat sum = 0;
  for (const auto& [w, m] : weight_profile(a)) sum += w * Rat(m);
  return sum;
}

}  // namespace

SummandResult summand_test(const SymbolicWD& v, const SymbolicSub& w) {
  auto verdict = classify(v);
  if (!is_pure(verdict))
    throw domain_error("NotPure", "ambient representation is not pure");
  validate_sub_shape(v, w);
  if (verdict.vacuous)
    return SummandResult{true, true, true, true, std::nullopt, v};
  Rat k = *verdict.center;
  SymbolicWD w_rep = sub_as_symbolic(v, w);
  SummandResult res;
  res.route_exterior =
      profile_weight_sum(w_rep) == k * Rat(dimension(w_rep));
  res.route_pure = w_rep.terms.empty() || is_pure_of(classify(w_rep), k);
  res.route_complement = true;
  for (std::size_t i = 0; i < v.terms.size(); ++i)
    for (long long j : w.truncations[i])
      if (j != 0 && j != v.terms[i].first.s) res.route_complement = false;
  res.summand = res.route_complement;
  if (res.summand) {
    std::vector<std::pair<IndecompWD, long long>> rest;
    for (std::size_t i = 0; i < v.terms.size(); ++i) {
      long long keep = 0;
      for (long long j : w.truncations[i])
        if (j == 0) ++keep;
      if (keep > 0) rest.emplace_back(v.terms[i].first, keep);
    }
    res.complement_symbolic = make_symbolic(v.q, std::move(rest));
  }
  return res;
}

std::variant<MatrixSplitting, CriterionFails> filtration_split(
    const MatrixWD& v, const std::vector<RatMatrix>& steps) {
  require_semisimple(v);
  auto verdict = classify(v);
  if (!is_pure(verdict))
    throw domain_error("NotPure", "ambient representation is not pure");
  long long n = v.phi.rows();
  Rat k = verdict.vacuous ? Rat(0) : *verdict.center;
  Int p0 = mat::p0_of(v);
  for (const auto& b : steps) restrict_to_subspace(v, b);  // stability
  for (std::size_t j = 0; j + 1 < steps.size(); ++j) {
    if (steps[j + 1].cols() > steps[j].cols() ||
        rank(hcat(steps[j], steps[j + 1])) != rank(steps[j]))
      throw domain_error("NotDecreasing",
                         "filtration steps must be nested decreasingly");
  }
  long long m = static_cast<long long>(steps.size());
  auto det_weight = [&](const RatMatrix& basis) -> std::optional<Rat> {
    if (basis.cols() == 0) return Rat(0);
    auto rep = restrict_to_subspace(v, basis);
    auto w = log_base(abs(det_of(rep.phi)), p0);
    if (!w) return std::nullopt;
    return Rat(*w);
  };
  auto step_basis = [&](long long j) -> RatMatrix {
    if (j <= 0) return RatMatrix::identity(n);
    if (j > m) return RatMatrix(n, 0);
    return steps[static_cast<std::size_t>(j - 1)];
  };
  // Exterior criterion on each graded piece, deepest step first.
  for (long long j = m; j >= 0; --j) {
    RatMatrix outer = step_basis(j);
    RatMatrix inner = step_basis(j + 1);
    long long dim_gr = rank(outer) - rank(inner);
    auto wo = det_weight(outer), wi = det_weight(inner);
    if (!wo || !wi || *wo - *wi != k * Rat(dim_gr)) return CriterionFails{j};
  }
  // Peel summands from the deepest step outwards.
  MatrixSplitting split;
  RatMatrix cur = RatMatrix::identity(n);
  for (long long j = m; j >= 1; --j) {
    RatMatrix piece = intersect_columns(step_basis(j), cur);
    MatrixWD cur_rep = restrict_to_subspace(v, cur);
    auto piece_in_cur = solve(cur, piece);
    if (!piece_in_cur)
      throw internal_error("FiltrationCoords", "piece escapes the running complement");
    auto res = summand_test(cur_rep, *piece_in_cur);
    if (!res.summand || !res.complement_basis)
      throw internal_error("SplitFailure",
                           "graded piece passed the criterion but is not a summand");
    split.piece_bases.push_back(piece);
    split.pieces.push_back(restrict_to_subspace(v, piece));
    cur = cur * *res.complement_basis;
  }
  split.piece_bases.push_back(cur);
  split.pieces.push_back(restrict_to_subspace(v, cur));
  for (const auto& piece : split.pieces) {
    auto pv = classify(piece);
    if (!(pv.vacuous || is_pure_of(pv, k)))
      throw internal_error("SplitCertification", "graded piece is not pure of weight k");
  }
  return split;
}

std::variant<SymbolicSplitting, CriterionFails> filtration_split(
    const SymbolicWD& v, const std::vector<SymbolicSub>& steps) {
  auto verdict = classify(v);
  if (!is_pure(verdict))
    throw domain_error("NotPure", "ambient representation is not pure");
  Rat k = verdict.vacuous ? Rat(0) : *verdict.center;
  for (const auto& s : steps) validate_sub_shape(v, s);
  for (std::size_t j = 0; j + 1 < steps.size(); ++j)
    for (std::size_t i = 0; i < v.terms.size(); ++i)
      for (std::size_t c = 0; c < steps[j].truncations[i].size(); ++c)
        if (steps[j + 1].truncations[i][c] > steps[j].truncations[i][c])
          throw domain_error("NotDecreasing",
                             "filtration steps must be nested decreasingly");
  long long m = static_cast<long long>(steps.size());
  auto trunc_at = [&](long long j, std::size_t term, std::size_t copy) -> long long {
    if (j <= 0) return v.terms[term].first.s;
    if (j > m) return 0;
    return steps[static_cast<std::size_t>(j - 1)].truncations[term][copy];
  };
  auto graded_piece = [&](long long j) {
    std::vector<std::pair<IndecompWD, long long>> terms;
    for (std::size_t term = 0; term < v.terms.size(); ++term) {
      long long mult = v.terms[term].second;
      for (long long copy = 0; copy < mult; ++copy) {
        long long a = trunc_at(j, term, static_cast<std::size_t>(copy));
        long long b = trunc_at(j + 1, term, static_cast<std::size_t>(copy));
        if (a > b) {
          const auto& t = v.terms[term].first;
          // Quotient of the bottom-a slice by the bottom-b slice: the
          // middle run of length a-b topped at w - 2(s-a).
          terms.emplace_back(
              IndecompWD{make_atom(t.atom.label, t.atom.dim,
                                   t.atom.weight - 2 * Rat(t.s - a)),
                         a - b},
              1);
        }
      }
    }
    return make_symbolic(v.q, std::move(terms));
  };
  for (long long j = m; j >= 0; --j) {
    SymbolicWD gr = graded_piece(j);
    if (profile_weight_sum(gr) != k * Rat(dimension(gr))) return CriterionFails{j};
  }
  SymbolicSplitting split;
  for (long long j = m; j >= 0; --j) {
    SymbolicWD gr = graded_piece(j);
    auto pv = classify(gr);
    if (!(pv.vacuous || is_pure_of(pv, k)))
      throw internal_error("SplitCertification", "graded piece is not pure of weight k");
    split.pieces.push_back(std::move(gr));
  }
  return split;
}

namespace {

json jump_json(const FiltrationJump& j, bool include_bases) {
  json out;
  out["weight"] = rat_str(j.weight);
  out["dim"] = j.dim;
  if (include_bases) {
    json basis = json::array();
    for (long long c = 0; c < j.basis.cols(); ++c) {
      json col = json::array();
      for (long long r = 0; r < j.basis.rows(); ++r)
        col.push_back(rat_str(j.basis.at(r, c)));
      basis.push_back(std::move(col));
    }
    out["basis"] = std::move(basis);
  }
  return out;
}

}  // namespace

json to_json(const Verdict& v) {
  json j;
  j["verdict"] = verdict_str(v);
  j["center"] = v.center ? json(rat_str(*v.center)) : json(nullptr);
  return j;
}

json purity_certificate(const MatrixWD& m, bool include_bases) {
  json j;
  auto weights = mat::eigen_weights(m);  // NotWeilLike propagates
  MatrixWD ss = frobenius_semisimplify(m);
  auto verdict = classify(ss);
  j["verdict"] = verdict_str(verdict);
  j["center"] = verdict.center ? json(rat_str(*verdict.center)) : json(nullptr);
  json wj = json::array();
  for (const auto& [w, mult] : weights) {
    json e;
    e["weight"] = rat_str(w);
    e["mult"] = mult;
    wj.push_back(std::move(e));
  }
  j["weights"] = std::move(wj);
  auto fil = weight_filtration(ss);
  json fj = json::array();
  for (const auto& jump : fil.jumps) fj.push_back(jump_json(jump, include_bases));
  j["filtration"] = std::move(fj);
  if (is_pure(verdict) && !verdict.vacuous) {
    auto prim = primitive_decomposition(ss, *verdict.center);
    json pj = json::array();
    for (const auto& layer : prim.layers) {
      json e;
      e["i"] = layer.i;
      e["dim"] = layer.dim;
      if (include_bases) {
        json basis = json::array();
        for (long long c = 0; c < layer.basis.cols(); ++c) {
          json col = json::array();
          for (long long r = 0; r < layer.basis.rows(); ++r)
            col.push_back(rat_str(layer.basis.at(r, c)));
          basis.push_back(std::move(col));
        }
        e["basis"] = std::move(basis);
      }
      pj.push_back(std::move(e));
    }
    j["primitive"] = std::move(pj);
  }
  j["symbolic"] = wd::to_json(mat::to_symbolic(ss));
  return j;
}

json purity_certificate(const SymbolicWD& a) {
  json j;
  auto verdict = classify(a);
  j["verdict"] = verdict_str(verdict);
  j["center"] = verdict.center ? json(rat_str(*verdict.center)) : json(nullptr);
  json prof = json::array();
  for (const auto& [w, m] : weight_profile(a)) {
    json e;
    e["weight"] = rat_str(w);
    e["mult"] = m;
    prof.push_back(std::move(e));
  }
  j["weights"] = std::move(prof);
  if (is_pure(verdict) && !verdict.vacuous) {
    auto prim = primitive_decomposition(a, *verdict.center);
    json pj = json::array();
    for (const auto& layer : prim.layers) {
      json e;
      e["i"] = layer.i;
      e["dim"] = layer.dim;
      pj.push_back(std::move(e));
    }
    j["primitive"] = std::move(pj);
  }
  return j;
}

}  // namespace wd::purity
