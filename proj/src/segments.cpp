#include "wd/segments.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"

namespace wd::seg {

namespace {

Int exact_div(const Int& a, const Int& b) {
  if (b == 0 || a % b != 0)
    throw internal_error("InexactDivision", "expected exact integer division");
  return a / b;
}

}  // namespace

SegmentRep make_segment_rep(long long n, std::vector<Segment> segments,
                            Rat base_weight, ResidueCard q) {
  if (n < 1) throw domain_error("BadRank", "n must be >= 1");
  make_residue_card(q.q);
  long long total = 0;
  std::set<std::string> labels;
  for (auto& s : segments) {
    if (s.s < 1)
      throw domain_error("BadSegmentLength", "segment length must be >= 1");
    if (s.label.empty())
      throw domain_error("BadLabel", "segment labels must be nonempty");
    if (!labels.insert(s.label).second)
      throw domain_error("DuplicateLabel", "segment label '" + s.label +
                                               "' appears twice");
    total += s.s;
  }
  if (total != n)
    throw domain_error("RankMismatch",
                       "segment lengths sum to " + std::to_string(total) +
                           ", expected n = " + std::to_string(n));
  return SegmentRep{n, std::move(segments), std::move(base_weight), q};
}

AtomRep strata_atom(const SegmentRep& r, std::size_t i) {
  const Segment& s = r.segments.at(i);
  return make_atom(s.label, 1, r.base_weight + Rat(r.n - s.s) + s.c);
}

VirtualAtomSum atom_sum(std::vector<std::pair<AtomRep, Int>> terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    return a.first.label < b.first.label;
  });
  std::vector<std::pair<AtomRep, Int>> merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().first.label == t.first.label) {
      if (!(merged.back().first == t.first))
        throw internal_error("AtomClash", "one label bound to two atoms");
      merged.back().second += t.second;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const auto& t) { return t.second == 0; });
  return VirtualAtomSum{std::move(merged)};
}

VirtualAtomSum atom_sum_add(const VirtualAtomSum& a, const VirtualAtomSum& b) {
  auto terms = a.terms;
  terms.insert(terms.end(), b.terms.begin(), b.terms.end());
  return atom_sum(std::move(terms));
}

VirtualAtomSum atom_sum_scale(const VirtualAtomSum& a, const Int& c) {
  auto terms = a.terms;
  for (auto& t : terms) t.second *= c;
  return atom_sum(std::move(terms));
}

SymbolicWD rec_segments(const SegmentRep& r) {
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const Segment& s = r.segments[i];
    AtomRep top = strata_atom(r, i);
    top.weight += 2 * Rat(s.s - 1);
    terms.emplace_back(IndecompWD{std::move(top), s.s}, 1);
  }
  return make_symbolic(r.q, std::move(terms));
}

bool is_tempered(const SegmentRep& r) {
  for (const auto& s : r.segments)
    if (s.c != r.segments.front().c) return false;
  return true;
}

Int iwahori_dim(long long n, const std::vector<long long>& s) {
  Int d = factorial(static_cast<unsigned>(n));
  for (long long part : s)
    d = exact_div(d, factorial(static_cast<unsigned>(part)));
  return d;
}

Int iwahori_dim(const SegmentRep& r) {
  std::vector<long long> s;
  for (const auto& seg : r.segments) s.push_back(seg.s);
  return iwahori_dim(r.n, s);
}

namespace {

// ---- flag-variety machinery for the double-coset oracle ----

struct FlagMat {
  int n = 0;
  int p = 2;
  std::array<int, 16> a{};  // row-major

  int& at(int i, int j) { return a[static_cast<std::size_t>(i * n + j)]; }
  int at(int i, int j) const { return a[static_cast<std::size_t>(i * n + j)]; }

  std::uint64_t key() const {
    std::uint64_t k = 0;
    for (int idx = 0; idx < n * n; ++idx)
      k |= static_cast<std::uint64_t>(a[static_cast<std::size_t>(idx)])
           << (2 * idx);
    return k;
  }
};

int inv_mod(int x, int p) {
  for (int y = 1; y < p; ++y)
    if (x * y % p == 1) return y;
  throw internal_error("ModInverse", "non-unit in F_p");
}

// Unique representative of the coset M B: column operations from the right
// by upper-triangular matrices. Pivot of a column is its bottom-most
// nonzero row; earlier pivot rows are cleared.
void canonicalize_flag(FlagMat& m) {
  int n = m.n, p = m.p;
  std::array<int, 4> col_of_pivot_row;
  col_of_pivot_row.fill(-1);
  auto clear_with = [&](int j, int r, int i0) {
    int f = m.at(r, j);
    for (int i = 0; i <= r; ++i)
      m.at(i, j) = ((m.at(i, j) - f * m.at(i, i0)) % p + p) % p;
  };
  for (int j = 0; j < n; ++j) {
    int pivot = -1;
    while (true) {
      int r = -1;
      for (int i = n - 1; i >= 0; --i)
        if (m.at(i, j) != 0) {
          r = i;
          break;
        }
      if (r < 0) throw internal_error("SingularFlag", "flag matrix is singular");
      int i0 = col_of_pivot_row[static_cast<std::size_t>(r)];
      if (i0 < 0) {
        pivot = r;
        break;
      }
      clear_with(j, r, i0);
    }
    int inv = inv_mod(m.at(pivot, j), p);
    for (int i = 0; i <= pivot; ++i) m.at(i, j) = m.at(i, j) * inv % p;
    col_of_pivot_row[static_cast<std::size_t>(pivot)] = j;
    for (int r = pivot - 1; r >= 0; --r) {
      int i0 = col_of_pivot_row[static_cast<std::size_t>(r)];
      if (i0 >= 0 && i0 != j && m.at(r, j) != 0) clear_with(j, r, i0);
    }
  }
}

FlagMat left_mul(const FlagMat& g, const FlagMat& m) {
  FlagMat out;
  out.n = m.n;
  out.p = m.p;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      int v = 0;
      for (int k = 0; k < m.n; ++k) v += g.at(i, k) * m.at(k, j);
      out.at(i, j) = v % m.p;
    }
  return out;
}

// Generators: transvections I + c e_{ab} on the allowed positions plus all
// diagonal unit scalings.
std::vector<FlagMat> group_generators(int n, int p,
                                      const std::vector<long long>& blocks) {
  std::vector<long long> block_of(static_cast<std::size_t>(n));
  long long pos = 0, b = 0;
  for (long long size : blocks) {
    for (long long i = 0; i < size; ++i)
      block_of[static_cast<std::size_t>(pos++)] = b;
    ++b;
  }
  std::vector<FlagMat> gens;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (block_of[static_cast<std::size_t>(i)] >
          block_of[static_cast<std::size_t>(j)])
        continue;  // below the block diagonal
      for (int c = 1; c < p; ++c) {
        FlagMat g;
        g.n = n;
        g.p = p;
        for (int d = 0; d < n; ++d) g.at(d, d) = 1;
        g.at(i, j) = c;
        gens.push_back(g);
      }
    }
  for (int i = 0; i < n; ++i)
    for (int c = 2; c < p; ++c) {
      FlagMat g;
      g.n = n;
      g.p = p;
      for (int d = 0; d < n; ++d) g.at(d, d) = 1;
      g.at(i, i) = c;
      gens.push_back(g);
    }
  return gens;
}

}  // namespace

long long bruhat_oracle(long long n, const std::vector<long long>& s,
                        long long p_field) {
  if (n < 1 || n > 4 || p_field < 2 || p_field > 3)
    throw domain_error("InstanceTooLarge",
                       "oracle enumerates only n <= 4 over F_2 and F_3");
  long long total = 0;
  for (long long part : s) {
    if (part < 1) throw domain_error("BadSegmentLength", "parts must be >= 1");
    total += part;
  }
  if (total != n)
    throw domain_error("RankMismatch", "partition does not sum to n");
  int ni = static_cast<int>(n), p = static_cast<int>(p_field);

  // All flags: orbit of the standard flag under GL_n(F_p).
  auto gl_gens = group_generators(ni, p, {n});
  std::map<std::uint64_t, FlagMat> flags;
  FlagMat start;
  start.n = ni;
  start.p = p;
  for (int i = 0; i < ni; ++i) start.at(i, i) = 1;
  canonicalize_flag(start);
  std::vector<FlagMat> queue{start};
  flags[start.key()] = start;
  while (!queue.empty()) {
    FlagMat cur = queue.back();
    queue.pop_back();
    for (const auto& g : gl_gens) {
      FlagMat next = left_mul(g, cur);
      canonicalize_flag(next);
      if (flags.emplace(next.key(), next).second) queue.push_back(next);
    }
  }
  // Sanity: the flag count is the q-factorial [n]_p!.
  long long expected = 1;
  for (int k = 1; k <= ni; ++k) {
    long long sum = 0, pw = 1;
    for (int t = 0; t < k; ++t) {
      sum += pw;
      pw *= p;
    }
    expected *= sum;
  }
  if (static_cast<long long>(flags.size()) != expected)
    throw internal_error("FlagEnumeration", "flag count mismatch");

  // Count P-orbits on the flag set.
  auto p_gens = group_generators(ni, p, s);
  std::set<std::uint64_t> seen;
  long long orbits = 0;
  for (const auto& [key, flag] : flags) {
    if (seen.count(key)) continue;
    ++orbits;
    std::vector<FlagMat> orbit_queue{flag};
    seen.insert(key);
    while (!orbit_queue.empty()) {
      FlagMat cur = orbit_queue.back();
      orbit_queue.pop_back();
      for (const auto& g : p_gens) {
        FlagMat next = left_mul(g, cur);
        canonicalize_flag(next);
        if (seen.insert(next.key()).second) orbit_queue.push_back(next);
      }
    }
  }
  return orbits;
}

VirtualAtomSum red_h(const SegmentRep& r, long long h) {
  if (h < 0 || h > r.n)
    throw domain_error("BadReduction",
                       "h must lie in 0..n, got " + std::to_string(h));
  std::vector<std::pair<AtomRep, Int>> terms;
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    long long si = r.segments[i].s;
    if (si < r.n - h) continue;
    // Iwahori dimension in GL_h of the reduced induction with parts
    // (s_i + h - n, s_j for j != i).
    Int coef = factorial(static_cast<unsigned>(h));
    coef = exact_div(coef, factorial(static_cast<unsigned>(si + h - r.n)));
    for (std::size_t j = 0; j < r.segments.size(); ++j)
      if (j != i)
        coef = exact_div(coef,
                         factorial(static_cast<unsigned>(r.segments[j].s)));
    if (coef <= 0)
      throw internal_error("RedCoefficient", "reduction coefficient not positive");
    terms.emplace_back(strata_atom(r, i), coef);
  }
  return atom_sum(std::move(terms));
}

StrataClass strata_class(const SegmentRep& r, long long S_size) {
  if (S_size < 1 || S_size > r.n)
    throw domain_error("BadStratumSize", "S_size must lie in 1..n");
  VirtualAtomSum alternating;
  for (long long h = 0; h <= r.n - S_size; ++h) {
    Int coef = binomial(static_cast<unsigned>(r.n - S_size),
                        static_cast<unsigned>(h));
    if ((r.n - S_size - h) % 2 != 0) coef = -coef;
    alternating = atom_sum_add(alternating, atom_sum_scale(red_h(r, h), coef));
  }
  // Closed form: (n-S)!/prod_{j != i} s_j! on each segment with s_i = S.
  std::vector<std::pair<AtomRep, Int>> closed_terms;
  std::vector<std::pair<AtomRep, Int>> normalized_terms;
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    if (r.segments[i].s != S_size) continue;
    Int coef = factorial(static_cast<unsigned>(r.n - S_size));
    for (std::size_t j = 0; j < r.segments.size(); ++j)
      if (j != i)
        coef = exact_div(coef,
                         factorial(static_cast<unsigned>(r.segments[j].s)));
    closed_terms.emplace_back(strata_atom(r, i), coef);
    normalized_terms.emplace_back(strata_atom(r, i), 1);
  }
  auto closed = atom_sum(std::move(closed_terms));
  if (!(alternating == closed))
    throw internal_error("InternalMismatch",
                         "alternating strata sum disagrees with its closed form");
  // Common factor (equal on all survivors): (n-S)! S! / prod_j s_j!.
  Int num = factorial(static_cast<unsigned>(r.n - S_size)) *
            factorial(static_cast<unsigned>(S_size));
  Int den = 1;
  for (const auto& sgm : r.segments)
    den *= factorial(static_cast<unsigned>(sgm.s));
  return StrataClass{atom_sum(std::move(normalized_terms)), Rat(num, den)};
}

Int telescope_check(long long s_i, long long S_size) {
  if (s_i < 1 || S_size < 1 || S_size > s_i)
    throw domain_error("BadTelescopeInput", "need 1 <= S_size <= s_i");
  long long k = s_i - S_size;
  Int sum = 0;
  for (long long m = 0; m <= k; ++m) {
    Int term = binomial(static_cast<unsigned>(k), static_cast<unsigned>(m));
    if ((k - m) % 2 != 0) term = -term;
    sum += term;
  }
  return sum;
}

json to_json(const SegmentRep& r) {
  json j;
  j["n"] = r.n;
  j["q"] = r.q.q;
  j["w0"] = rat_str(r.base_weight);
  json segs = json::array();
  for (const auto& s : r.segments) {
    json e;
    e["c"] = rat_str(s.c);
    e["s"] = s.s;
    e["label"] = s.label;
    segs.push_back(std::move(e));
  }
  j["segments"] = std::move(segs);
  return j;
}

namespace {

Rat parse_rat_field(const json& j, const std::string& field) {
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_string()) {
    auto r = rat_parse(j.get<std::string>());
    if (r) return *r;
  }
  throw parse_error("field '" + field +
                    "' must be an integer or an exact fraction string");
}

}  // namespace

SegmentRep segment_rep_from_json(const json& j, long long default_q,
                                 const Rat& default_w0) {
  if (!j.is_object()) throw parse_error("expected a JSON object");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw parse_error("field 'n' must be an integer");
  long long n = j["n"].get<long long>();
  long long q = default_q;
  if (j.contains("q")) {
    if (!j["q"].is_number_integer())
      throw parse_error("field 'q' must be an integer");
    q = j["q"].get<long long>();
  }
  Rat w0 = j.contains("w0") ? parse_rat_field(j["w0"], "w0") : default_w0;
  if (!j.contains("segments") || !j["segments"].is_array())
    throw parse_error("field 'segments' must be an array");
  std::vector<Segment> segments;
  std::size_t idx = 0;
  for (const auto& e : j["segments"]) {
    ++idx;
    if (!e.is_object()) throw parse_error("segments must be objects");
    Segment s;
    s.c = e.contains("c") ? parse_rat_field(e["c"], "c") : Rat(0);
    if (!e.contains("s") || !e["s"].is_number_integer())
      throw parse_error("segment field 's' must be an integer");
    s.s = e["s"].get<long long>();
    if (e.contains("label")) {
      if (!e["label"].is_string())
        throw parse_error("segment field 'label' must be a string");
      s.label = e["label"].get<std::string>();
    } else {
      s.label = "seg" + std::to_string(idx);
    }
    segments.push_back(std::move(s));
  }
  return make_segment_rep(n, std::move(segments), w0, make_residue_card(q));
}

json to_json(const VirtualAtomSum& v) {
  json arr = json::array();
  for (const auto& [atom, coef] : v.terms) {
    json e;
    e["label"] = atom.label;
    e["weight"] = rat_str(atom.weight);
    e["coef"] = coef.str();
    arr.push_back(std::move(e));
  }
  return arr;
}

namespace {

std::string atom_sum_text(const VirtualAtomSum& v) {
  if (v.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [atom, coef] : v.terms) {
    if (!first) os << " + ";
    os << coef.str() << "*[" << atom.label << "]";
    first = false;
  }
  return os.str();
}

}  // namespace

json red_table_json(const SegmentRep& r) {
  json j;
  j["n"] = r.n;
  j["iwahori_dim"] = iwahori_dim(r).str();
  json rows = json::array();
  for (long long h = 0; h <= r.n; ++h) {
    json row;
    row["h"] = h;
    row["class"] = to_json(red_h(r, h));
    rows.push_back(std::move(row));
  }
  j["red"] = std::move(rows);
  return j;
}

std::string red_table_text(const SegmentRep& r) {
  std::ostringstream os;
  os << "Red^(h) table  n=" << r.n << "  iwahori_dim=" << iwahori_dim(r).str()
     << "\n";
  os << "  h | class\n";
  for (long long h = 0; h <= r.n; ++h)
    os << "  " << h << " | " << atom_sum_text(red_h(r, h)) << "\n";
  return os.str();
}

json strata_table_json(const SegmentRep& r) {
  json j;
  j["n"] = r.n;
  json rows = json::array();
  for (long long size = 1; size <= r.n; ++size) {
    auto cls = strata_class(r, size);
    json row;
    row["S_size"] = size;
    row["scalar"] = rat_str(cls.scalar);
    row["class"] = to_json(cls.normalized);
    rows.push_back(std::move(row));
  }
  j["strata"] = std::move(rows);
  return j;
}

std::string strata_table_text(const SegmentRep& r) {
  std::ostringstream os;
  os << "Strata classes  n=" << r.n
     << "  (scalar times the untracked positive constant)\n";
  os << "  #S | scalar | class\n";
  for (long long size = 1; size <= r.n; ++size) {
    auto cls = strata_class(r, size);
    os << "  " << size << " | " << rat_str(cls.scalar) << " | "
       << atom_sum_text(cls.normalized) << "\n";
  }
  return os.str();
}

}  // namespace wd::seg
