#pragma once

#include <string>
#include <vector>

#include "wd/rational.hpp"
#include "wd/symbolic.hpp"

namespace wd::seg {

// One segment (chi, s): an unramified character with |chi(pi)| = q^(-c/2)
// and a string length.
struct Segment {
  Rat c;
  long long s = 1;
  std::string label;
};

// An Iwahori-spherical representation of GL_n as the full normalized
// induction of Sp_{s_1}(chi_1) x ... x Sp_{s_t}(chi_t).
struct SegmentRep {
  long long n = 1;
  std::vector<Segment> segments;
  Rat base_weight;  // w0
  ResidueCard q;
};

// Validates sum s_i = n, s_i >= 1, distinct nonempty labels.
SegmentRep make_segment_rep(long long n, std::vector<Segment> segments,
                            Rat base_weight, ResidueCard q);

// The class of segment i in the stratum computation: a line strictly pure
// of weight w0 + (n - s_i) + c_i.
AtomRep strata_atom(const SegmentRep& r, std::size_t i);

// Formal integer combination of strata atoms, keyed by segment label.
struct VirtualAtomSum {
  std::vector<std::pair<AtomRep, Int>> terms;

  friend bool operator==(const VirtualAtomSum&, const VirtualAtomSum&) = default;
};

VirtualAtomSum atom_sum(std::vector<std::pair<AtomRep, Int>> terms);
VirtualAtomSum atom_sum_add(const VirtualAtomSum& a, const VirtualAtomSum& b);
VirtualAtomSum atom_sum_scale(const VirtualAtomSum& a, const Int& c);

// The Weil-Deligne representation attached to the segments: segment i
// contributes Sp_{s_i} on a line of weight w0 + (n - s_i) + 2(s_i - 1) + c_i
// (the strata atom twisted to the top of its string), so a tempered input
// is pure of weight w0 + n - 1 + c.
SymbolicWD rec_segments(const SegmentRep& r);

// All character weights equal; equivalently rec_segments is pure.
bool is_tempered(const SegmentRep& r);

// dim of the Iwahori invariants: n! / prod_j s_j!.
Int iwahori_dim(const SegmentRep& r);
Int iwahori_dim(long long n, const std::vector<long long>& s);

// Independent oracle: counts P(k)\GL_n(k)/B(k) by orbit enumeration on the
// flag variety over F_p. Desk scale only (n <= 4, p in {2,3}).
long long bruhat_oracle(long long n, const std::vector<long long>& s,
                        long long p_field);

// Jacquet reduction to GL_h read off on segment data:
// sum over i with s_i >= n-h of h!/((s_i+h-n)! prod_{j!=i} s_j!) [V_i].
VirtualAtomSum red_h(const SegmentRep& r, long long h);

struct StrataClass {
  // Normalized class: coefficient 1 on each segment with s_i = S_size.
  VirtualAtomSum normalized;
  // Cleared common factor (n-S)! S! / prod_j s_j!; multiplies the
  // untracked positive constant carried by every display.
  Rat scalar;
};

// Alternating sum over h of binomial-weighted red_h, checked against its
// closed form; only segments with s_i = S_size survive.
StrataClass strata_class(const SegmentRep& r, long long S_size);

// sum_{m=0}^{s_i - S} (-1)^(s_i - S - m) C(s_i - S, m): the indicator of
// s_i = S_size.
Int telescope_check(long long s_i, long long S_size);

json to_json(const SegmentRep& r);
SegmentRep segment_rep_from_json(const json& j, long long default_q,
                                 const Rat& default_w0);
json to_json(const VirtualAtomSum& v);

json red_table_json(const SegmentRep& r);
std::string red_table_text(const SegmentRep& r);
json strata_table_json(const SegmentRep& r);
std::string strata_table_text(const SegmentRep& r);

}  // namespace wd::seg
