#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wd/segments.hpp"
#include "wd/symbolic.hpp"

namespace wd::e1 {

// One stratum size: its normalized class and where each contribution
// lives cohomologically. The degree of an atom is weight - w0, so the
// tempered normalized case concentrates in degree n - sigma.
struct StratumClasses {
  long long sigma = 1;
  Int stratum_count;  // C(n, sigma) subsets of that size
  Rat scalar;         // from strata_class, times the untracked constant
  std::vector<std::pair<AtomRep, Rat>> classes;  // (atom, degree)
};

struct StrataInput {
  long long n = 1;
  ResidueCard q;
  Rat w0;
  std::vector<StratumClasses> strata;
};

StrataInput build_strata_input(const seg::SegmentRep& r);

struct CellEntry {
  long long sigma;
  long long twist;  // Tate twist index s
  AtomRep atom;     // untwisted strata atom
  Rat weight;       // atom.weight + 2 twist
  Int stratum_count;
};

// Column index i is integral; the row j keeps the exact (possibly
// fractional) cohomological degree so off-line cells stay visible.
struct E1Page {
  long long n = 1;
  ResidueCard q;
  Rat w0;
  std::map<std::pair<long long, Rat>, std::vector<CellEntry>> cells;
};

// Places every class at the cells sigma = i + 2s + 1, s = 0..sigma-1,
// asserting the index law.
E1Page assemble_e1(const StrataInput& input);
E1Page assemble_e1(const seg::SegmentRep& r);

// True iff every nonzero cell lies on i + j = n - 1, so every differential
// has zero source or target.
bool check_degeneration(const E1Page& page);

// Strings the sigma cells of each atom into Sp_sigma blocks via the
// identity monodromy maps. Requires a degenerate page.
SymbolicWD abutment(const E1Page& page);

// Type sets (label, length, pure center) agree, multiplicities ignored.
bool compare_with_rec(const SymbolicWD& ab, const seg::SegmentRep& r);

json to_json(const E1Page& page);
std::string page_text(const E1Page& page);

}  // namespace wd::e1
