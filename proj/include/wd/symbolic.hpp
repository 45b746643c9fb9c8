#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wd/rational.hpp"

namespace wd {

using json = nlohmann::ordered_json;

// Cardinality of the residue field.
struct ResidueCard {
  long long q = 4;

  friend bool operator==(const ResidueCard&, const ResidueCard&) = default;
};

ResidueCard make_residue_card(long long q);

// An irreducible Frobenius-semisimple building block: a W_K-line (or
// d-dimensional irreducible) that is strictly pure of the given weight.
// Atoms are opaque: only (label, dim, weight) matter.
struct AtomRep {
  std::string label;
  long long dim = 1;
  Rat weight;

  friend bool operator==(const AtomRep&, const AtomRep&) = default;
};

AtomRep make_atom(std::string label, long long dim, Rat weight);

// Sp_s(atom): the standard indecomposable. The stored weight is the top
// constituent; the underlying constituents have weights atom.weight - 2i
// for i = 0..s-1, and the whole is pure of weight atom.weight - (s-1).
struct IndecompWD {
  AtomRep atom;
  long long s = 1;

  friend bool operator==(const IndecompWD&, const IndecompWD&) = default;
};

// Canonical term order: (label, weight, dim, s).
bool term_key_less(const IndecompWD& a, const IndecompWD& b);

// Canonical form of a Frobenius-semisimple Weil-Deligne representation:
// a multiset of indecomposables Sp_s(atom) with positive multiplicities,
// sorted, merged, zero-free.
struct SymbolicWD {
  ResidueCard q;
  std::vector<std::pair<IndecompWD, long long>> terms;

  friend bool operator==(const SymbolicWD&, const SymbolicWD&) = default;
};

// Same shape with integer (possibly negative) coefficients: the
// Grothendieck-group companion of SymbolicWD.
struct VirtualWD {
  ResidueCard q;
  std::vector<std::pair<IndecompWD, long long>> terms;

  friend bool operator==(const VirtualWD&, const VirtualWD&) = default;
};

// Canonicalizing constructors; both accept terms in any order.
SymbolicWD make_symbolic(ResidueCard q,
                         std::vector<std::pair<IndecompWD, long long>> terms);
VirtualWD make_virtual(ResidueCard q,
                       std::vector<std::pair<IndecompWD, long long>> terms);

long long dimension(const SymbolicWD& a);

SymbolicWD sp(const AtomRep& atom, long long s, ResidueCard q);

SymbolicWD direct_sum(const SymbolicWD& a, const SymbolicWD& b);

// Shifts every atom weight by delta_weight and tags labels with the suffix.
// Twisting by |Art^-1|^m is delta_weight = -2m; a Tate twist (-m) is +2m.
SymbolicWD unramified_twist(const SymbolicWD& a, const Rat& delta_weight,
                            const std::string& label_suffix);

// Restriction along the unramified subextension of residue degree f'.
SymbolicWD restrict_unramified(const SymbolicWD& a, long long f_prime);

SymbolicWD dual(const SymbolicWD& a);

// Weights of the underlying W_K-semisimplification, with multiplicity.
std::map<Rat, long long> weight_profile(const SymbolicWD& a);

// True iff every assigned Frobenius eigenvalue is an ell-adic unit.
bool is_bounded(const SymbolicWD& a,
                const std::map<std::string, Rat>& eigenvalue_assignment,
                const Int& ell);

VirtualWD virtual_difference(const SymbolicWD& a, const SymbolicWD& b);

VirtualWD virtual_add(const VirtualWD& a, const VirtualWD& b);
VirtualWD virtual_scale(const VirtualWD& a, long long c);
VirtualWD as_virtual(const SymbolicWD& a);

json to_json(const SymbolicWD& a);
json to_json(const VirtualWD& a);
SymbolicWD symbolic_from_json(const json& j);
VirtualWD virtual_from_json(const json& j);

}  // namespace wd
