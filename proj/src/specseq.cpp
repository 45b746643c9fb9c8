#include "wd/specseq.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wd/error.hpp"
#include "wd/purity.hpp"

namespace wd::e1 {

StrataInput build_strata_input(const seg::SegmentRep& r) {
  StrataInput in;
  in.n = r.n;
  in.q = r.q;
  in.w0 = r.base_weight;
  for (long long sigma = 1; sigma <= r.n; ++sigma) {
    auto cls = seg::strata_class(r, sigma);
    StratumClasses sc;
    sc.sigma = sigma;
    sc.stratum_count = binomial(static_cast<unsigned>(r.n),
                                static_cast<unsigned>(sigma));
    sc.scalar = cls.scalar;
    for (const auto& [atom, coef] : cls.normalized.terms) {
      if (coef != 1)
        throw internal_error("StrataNormalization",
                             "normalized class with coefficient != 1");
      sc.classes.emplace_back(atom, atom.weight - r.base_weight);
    }
    in.strata.push_back(std::move(sc));
  }
  return in;
}

E1Page assemble_e1(const StrataInput& input) {
  E1Page page;
  page.n = input.n;
  page.q = input.q;
  page.w0 = input.w0;
  for (const auto& stratum : input.strata) {
    for (const auto& [atom, degree] : stratum.classes) {
      for (long long s = 0; s < stratum.sigma; ++s) {
        long long i = stratum.sigma - 1 - 2 * s;
        Rat j = degree + 2 * Rat(s);
        if (stratum.sigma != i + 2 * s + 1 || s < std::max<long long>(0, -i))
          throw internal_error("IndexLaw", "cell violates sigma = i + 2s + 1");
        page.cells[{i, j}].push_back(
            CellEntry{stratum.sigma, s, atom, atom.weight + 2 * Rat(s),
                      stratum.stratum_count});
      }
    }
  }
  return page;
}

E1Page assemble_e1(const seg::SegmentRep& r) {
  return assemble_e1(build_strata_input(r));
}

bool check_degeneration(const E1Page& page) {
  for (const auto& [pos, entries] : page.cells) {
    if (entries.empty()) continue;
    if (Rat(pos.first) + pos.second != Rat(page.n - 1)) return false;
  }
  return true;
}

SymbolicWD abutment(const E1Page& page) {
  if (!check_degeneration(page))
    throw domain_error("NotDegenerate",
                       "page has cells off i + j = n - 1; no E_1 abutment");
  // Collect each atom's cells; the identity maps string them into one
  // Sp_sigma block per stratum copy.
  struct StringData {
    AtomRep atom;
    long long sigma = 0;
    Int count;
    std::set<long long> twists;
  };
  std::map<std::string, StringData> strings;
  for (const auto& [pos, entries] : page.cells) {
    for (const auto& e : entries) {
      auto [it, fresh] = strings.try_emplace(e.atom.label);
      StringData& sd = it->second;
      if (fresh) {
        sd.atom = e.atom;
        sd.sigma = e.sigma;
        sd.count = e.stratum_count;
      } else if (!(sd.atom == e.atom) || sd.sigma != e.sigma ||
                 sd.count != e.stratum_count) {
        throw internal_error("StringConsistency",
                             "one atom spread over inconsistent strata");
      }
      if (!sd.twists.insert(e.twist).second)
        throw internal_error("StringConsistency", "duplicate twist cell");
    }
  }
  std::vector<std::pair<IndecompWD, long long>> terms;
  for (auto& [label, sd] : strings) {
    for (long long s = 0; s < sd.sigma; ++s)
      if (!sd.twists.count(s))
        throw internal_error("StringConsistency",
                             "missing twist cell in an N-string");
    AtomRep top = sd.atom;
    top.weight += 2 * Rat(sd.sigma - 1);
    long long mult = sd.count.convert_to<long long>();
    terms.emplace_back(IndecompWD{std::move(top), sd.sigma}, mult);
  }
  return make_symbolic(page.q, std::move(terms));
}

namespace {

struct TypeKey {
  std::string label;
  long long s;
  Rat center;

  bool operator<(const TypeKey& o) const {
    if (label != o.label) return label < o.label;
    if (s != o.s) return s < o.s;
    return center < o.center;
  }
  bool operator==(const TypeKey& o) const {
    return label == o.label && s == o.s && center == o.center;
  }
};

std::set<TypeKey> type_set(const SymbolicWD& a) {
  std::set<TypeKey> types;
  for (const auto& [t, m] : a.terms)
    types.insert(TypeKey{t.atom.label, t.s, t.atom.weight - Rat(t.s - 1)});
  return types;
}

}  // namespace

bool compare_with_rec(const SymbolicWD& ab, const seg::SegmentRep& r) {
  return type_set(ab) == type_set(seg::rec_segments(r));
}

json to_json(const E1Page& page) {
  json j;
  j["n"] = page.n;
  j["q"] = page.q.q;
  j["w0"] = rat_str(page.w0);
  j["degenerate"] = check_degeneration(page);
  json cells = json::array();
  for (const auto& [pos, entries] : page.cells) {
    if (entries.empty()) continue;
    json cell;
    cell["i"] = pos.first;
    cell["j"] = rat_str(pos.second);
    json es = json::array();
    for (const auto& e : entries) {
      json ej;
      ej["sigma"] = e.sigma;
      ej["s"] = e.twist;
      ej["label"] = e.atom.label;
      ej["weight"] = rat_str(e.weight);
      ej["strata"] = e.stratum_count.str();
      es.push_back(std::move(ej));
    }
    cell["entries"] = std::move(es);
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  return j;
}

std::string page_text(const E1Page& page) {
  if (page.cells.empty()) return "(empty page)\n";
  std::set<Rat> rows;
  long long imin = 0, imax = 0;
  for (const auto& [pos, entries] : page.cells) {
    if (entries.empty()) continue;
    rows.insert(pos.second);
    imin = std::min(imin, pos.first);
    imax = std::max(imax, pos.first);
  }
  std::vector<Rat> row_list(rows.begin(), rows.end());
  std::reverse(row_list.begin(), row_list.end());
  // Render each cell as sigma/s/weight triples.
  auto cell_str = [&](long long i, const Rat& j) -> std::string {
    auto it = page.cells.find({i, j});
    if (it == page.cells.end() || it->second.empty()) return ".";
    std::ostringstream os;
    bool first = true;
    for (const auto& e : it->second) {
      if (!first) os << " ";
      os << "#S=" << e.sigma << ",s=" << e.twist << ",[" << e.atom.label
         << "]w=" << rat_str(e.weight);
      first = false;
    }
    return os.str();
  };
  std::size_t width = 1;
  for (const auto& j : row_list)
    for (long long i = imin; i <= imax; ++i)
      width = std::max(width, cell_str(i, j).size());
  std::ostringstream os;
  os << "E1 page (rows j, columns i = " << imin << ".." << imax << ")\n";
  for (const auto& j : row_list) {
    os << "  j=" << rat_str(j) << " |";
    for (long long i = imin; i <= imax; ++i) {
      std::string s = cell_str(i, j);
      os << " " << s << std::string(width - s.size(), ' ');
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace wd::e1
