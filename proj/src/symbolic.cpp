#include "wd/symbolic.hpp"

#include <algorithm>
#include <limits>

#include <boost/multiprecision/miller_rabin.hpp>
#include <nlohmann/json.hpp>

#include "wd/error.hpp"

namespace wd {

namespace {

long long checked_add(long long a, long long b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r))
    throw domain_error("Overflow", "multiplicity overflow");
  return r;
}

template <typename Terms>
Terms canonicalize(Terms terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
    return term_key_less(x.first, y.first);
  });
  Terms merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().first == t.first)
      merged.back().second = checked_add(merged.back().second, t.second);
    else
      merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const auto& t) { return t.second == 0; });
  return merged;
}

void require_same_q(const ResidueCard& a, const ResidueCard& b) {
  if (a.q != b.q)
    throw domain_error("ResidueMismatch",
                       "residue cardinalities differ: " + std::to_string(a.q) +
                           " vs " + std::to_string(b.q));
}

}  // namespace

ResidueCard make_residue_card(long long q) {
  if (q < 2) throw domain_error("BadResidueCard", "q must be >= 2");
  return ResidueCard{q};
}

AtomRep make_atom(std::string label, long long dim, Rat weight) {
  if (dim < 1) throw domain_error("BadAtom", "atom dimension must be >= 1");
  return AtomRep{std::move(label), dim, std::move(weight)};
}

bool term_key_less(const IndecompWD& a, const IndecompWD& b) {
  if (a.atom.label != b.atom.label) return a.atom.label < b.atom.label;
  if (a.atom.weight != b.atom.weight) return a.atom.weight < b.atom.weight;
  if (a.atom.dim != b.atom.dim) return a.atom.dim < b.atom.dim;
  return a.s < b.s;
}

SymbolicWD make_symbolic(ResidueCard q,
                         std::vector<std::pair<IndecompWD, long long>> terms) {
  for (const auto& [t, m] : terms) {
    if (t.s < 1) throw domain_error("BadSegmentLength", "Sp length must be >= 1");
    if (t.atom.dim < 1) throw domain_error("BadAtom", "atom dimension must be >= 1");
    if (m < 0) throw domain_error("BadMultiplicity", "multiplicity must be >= 0");
  }
  return SymbolicWD{q, canonicalize(std::move(terms))};
}

VirtualWD make_virtual(ResidueCard q,
                       std::vector<std::pair<IndecompWD, long long>> terms) {
  for (const auto& [t, m] : terms) {
    if (t.s < 1) throw domain_error("BadSegmentLength", "Sp length must be >= 1");
    if (t.atom.dim < 1) throw domain_error("BadAtom", "atom dimension must be >= 1");
  }
  return VirtualWD{q, canonicalize(std::move(terms))};
}

long long dimension(const SymbolicWD& a) {
  long long d = 0;
  for (const auto& [t, m] : a.terms) {
    long long piece;
    if (__builtin_mul_overflow(t.s, t.atom.dim, &piece) ||
        __builtin_mul_overflow(piece, m, &piece))
      throw domain_error("Overflow", "dimension overflow");
    d = checked_add(d, piece);
  }
  return d;
}

SymbolicWD sp(const AtomRep& atom, long long s, ResidueCard q) {
  if (s < 1) throw domain_error("BadSegmentLength", "Sp length must be >= 1");
  return make_symbolic(q, {{IndecompWD{atom, s}, 1}});
}

SymbolicWD direct_sum(const SymbolicWD& a, const SymbolicWD& b) {
  require_same_q(a.q, b.q);
  auto terms = a.terms;
  terms.insert(terms.end(), b.terms.begin(), b.terms.end());
  return make_symbolic(a.q, std::move(terms));
}

SymbolicWD unramified_twist(const SymbolicWD& a, const Rat& delta_weight,
                            const std::string& label_suffix) {
  auto terms = a.terms;
  for (auto& [t, m] : terms) {
    t.atom.weight += delta_weight;
    t.atom.label += label_suffix;
  }
  return make_symbolic(a.q, std::move(terms));
}

SymbolicWD restrict_unramified(const SymbolicWD& a, long long f_prime) {
  if (f_prime < 1)
    throw domain_error("BadResidueDegree", "residue degree must be >= 1");
  long long qf = 1;
  for (long long i = 0; i < f_prime; ++i) {
    if (__builtin_mul_overflow(qf, a.q.q, &qf))
      throw domain_error("Overflow", "q^f' overflows");
  }
  return SymbolicWD{ResidueCard{qf}, a.terms};
}

SymbolicWD dual(const SymbolicWD& a) {
  // Sp_s has constituent weights w-2i; the dual's profile is the negation,
  // so the dual term is Sp_s anchored at top weight -w + 2(s-1).
  auto terms = a.terms;
  for (auto& [t, m] : terms) {
    t.atom.weight = -t.atom.weight + 2 * Rat(t.s - 1);
    t.atom.label += "∨";
  }
  return make_symbolic(a.q, std::move(terms));
}

std::map<Rat, long long> weight_profile(const SymbolicWD& a) {
  std::map<Rat, long long> prof;
  for (const auto& [t, m] : a.terms)
    for (long long i = 0; i < t.s; ++i)
      prof[t.atom.weight - 2 * Rat(i)] += m * t.atom.dim;
  return prof;
}

bool is_bounded(const SymbolicWD& a,
                const std::map<std::string, Rat>& eigenvalue_assignment,
                const Int& ell) {
  if (ell < 2 || !boost::multiprecision::miller_rabin_test(ell, 25))
    throw domain_error("BadPrime", "ell must be prime");
  if (Int(a.q.q) % ell == 0)
    throw domain_error("EllDividesQ", "ell divides the residue cardinality");
  for (const auto& [t, m] : a.terms) {
    auto it = eigenvalue_assignment.find(t.atom.label);
    if (it == eigenvalue_assignment.end())
      throw domain_error("MissingAssignment",
                         "no eigenvalue assigned to atom '" + t.atom.label + "'");
    if (it->second == 0)
      throw domain_error("ZeroEigenvalue", "eigenvalue must be nonzero");
    if (l_adic_valuation(it->second, ell) != 0) return false;
  }
  return true;
}

VirtualWD virtual_difference(const SymbolicWD& a, const SymbolicWD& b) {
  require_same_q(a.q, b.q);
  auto terms = a.terms;
  for (auto [t, m] : b.terms) terms.emplace_back(t, -m);
  return make_virtual(a.q, std::move(terms));
}

VirtualWD virtual_add(const VirtualWD& a, const VirtualWD& b) {
  require_same_q(a.q, b.q);
  auto terms = a.terms;
  terms.insert(terms.end(), b.terms.begin(), b.terms.end());
  return make_virtual(a.q, std::move(terms));
}

VirtualWD virtual_scale(const VirtualWD& a, long long c) {
  auto terms = a.terms;
  for (auto& [t, m] : terms) {
    if (__builtin_mul_overflow(m, c, &m))
      throw domain_error("Overflow", "coefficient overflow");
  }
  return make_virtual(a.q, std::move(terms));
}

VirtualWD as_virtual(const SymbolicWD& a) { return VirtualWD{a.q, a.terms}; }

namespace {

json terms_to_json(const std::vector<std::pair<IndecompWD, long long>>& terms) {
  json arr = json::array();
  for (const auto& [t, m] : terms) {
    json jt;
    jt["label"] = t.atom.label;
    jt["dim"] = t.atom.dim;
    jt["weight"] = rat_str(t.atom.weight);
    jt["s"] = t.s;
    jt["mult"] = m;
    arr.push_back(std::move(jt));
  }
  return arr;
}

Rat json_rat(const json& j, const std::string& field) {
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_string()) {
    auto r = rat_parse(j.get<std::string>());
    if (r) return *r;
    throw parse_error("field '" + field + "': bad fraction string");
  }
  throw parse_error("field '" + field +
                    "' must be an integer or an exact fraction string");
}

long long json_i64(const json& j, const std::string& field) {
  if (!j.is_number_integer())
    throw parse_error("field '" + field + "' must be an integer");
  return j.get<long long>();
}

std::vector<std::pair<IndecompWD, long long>> terms_from_json(const json& j,
                                                              bool allow_neg) {
  if (!j.is_array()) throw parse_error("'terms' must be an array");
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (const auto& jt : j) {
    if (!jt.is_object()) throw parse_error("term must be an object");
    if (!jt.contains("label") || !jt["label"].is_string())
      throw parse_error("term field 'label' must be a string");
    IndecompWD t;
    t.atom.label = jt["label"].get<std::string>();
    t.atom.dim = jt.contains("dim") ? json_i64(jt["dim"], "dim") : 1;
    if (!jt.contains("weight")) throw parse_error("term is missing 'weight'");
    t.atom.weight = json_rat(jt["weight"], "weight");
    t.s = jt.contains("s") ? json_i64(jt["s"], "s") : 1;
    long long m = jt.contains("mult") ? json_i64(jt["mult"], "mult") : 1;
    if (!allow_neg && m < 0)
      throw parse_error("term field 'mult' must be non-negative");
    terms.emplace_back(std::move(t), m);
  }
  return terms;
}

long long json_q(const json& j) {
  if (!j.is_object()) throw parse_error("expected a JSON object");
  if (!j.contains("q")) throw parse_error("missing field 'q'");
  return json_i64(j["q"], "q");
}

}  // namespace

json to_json(const SymbolicWD& a) {
  json j;
  j["q"] = a.q.q;
  j["terms"] = terms_to_json(a.terms);
  return j;
}

json to_json(const VirtualWD& a) {
  json j;
  j["q"] = a.q.q;
  j["terms"] = terms_to_json(a.terms);
  return j;
}

SymbolicWD symbolic_from_json(const json& j) {
  auto q = make_residue_card(json_q(j));
  if (!j.contains("terms")) throw parse_error("missing field 'terms'");
  return make_symbolic(q, terms_from_json(j["terms"], false));
}

VirtualWD virtual_from_json(const json& j) {
  auto q = make_residue_card(json_q(j));
  if (!j.contains("terms")) throw parse_error("missing field 'terms'");
  return make_virtual(q, terms_from_json(j["terms"], true));
}

}  // namespace wd
