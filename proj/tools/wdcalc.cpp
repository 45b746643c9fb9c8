#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wd/error.hpp"
#include "wd/matrix.hpp"
#include "wd/purity.hpp"
#include "wd/segments.hpp"
#include "wd/specseq.hpp"
#include "wd/symbolic.hpp"
#include "wd/verify.hpp"

namespace {

constexpr const char* kVersion = "wdcalc 1.0.0";
constexpr const char* kConvention =
    "geometric Frobenius; |Art^-1|(phi) = q^-1; tensoring by |Art^-1| shifts "
    "weight by -2; Tate twist (-s) shifts weight by +2s";

#ifndef WDCALC_GOLDEN_DIR
#define WDCALC_GOLDEN_DIR ""
#endif

using wd::json;

std::string read_stream(std::istream& in) {
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json load_input(const std::string& path) {
  std::string text;
  if (path == "-") {
    text = read_stream(std::cin);
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw wd::parse_error("cannot open input file: " + path);
    text = read_stream(in);
  }
  return json::parse(text);
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

json head(const char* command) {
  json j;
  j["version"] = kVersion;
  j["convention"] = kConvention;
  j["command"] = command;
  return j;
}

struct CommonOpts {
  std::string input;
  std::string format = "text";
  long long q = 4;
  std::string w0 = "0";
};

wd::Rat parse_w0(const std::string& s) {
  auto r = wd::rat_parse(s);
  if (!r) throw wd::parse_error("--w0 must be an exact fraction string");
  return *r;
}

int cmd_rec(const CommonOpts& opts) {
  auto rep = wd::seg::segment_rep_from_json(load_input(opts.input), opts.q,
                                            parse_w0(opts.w0));
  auto rec = wd::seg::rec_segments(rep);
  auto verdict = wd::purity::classify(rec);
  if (opts.format == "json") {
    json j = head("rec");
    j["input"] = wd::seg::to_json(rep);
    j["tempered"] = wd::seg::is_tempered(rep);
    j["iwahori_dim"] = wd::seg::iwahori_dim(rep).str();
    j["rec"] = wd::to_json(rec);
    j["purity"] = wd::purity::purity_certificate(rec);
    emit(j);
  } else {
    std::cout << kVersion << "  rec\n";
    std::cout << "input: n=" << rep.n << " q=" << rep.q.q
              << " w0=" << wd::rat_str(rep.base_weight) << "\n";
    std::cout << "tempered: " << (wd::seg::is_tempered(rep) ? "yes" : "no")
              << "\n";
    std::cout << "iwahori_dim: " << wd::seg::iwahori_dim(rep).str() << "\n";
    std::cout << "rec: " << wd::to_json(rec).dump() << "\n";
    std::cout << "purity: " << wd::purity::verdict_str(verdict);
    if (verdict.center) std::cout << " center " << wd::rat_str(*verdict.center);
    std::cout << "\n";
  }
  return 0;
}

int cmd_purity(const CommonOpts& opts, bool reconstruct, bool with_bases) {
  json in = load_input(opts.input);
  bool matrix_backend = in.is_object() && in.contains("phi");
  json j = head("purity");
  j["backend"] = matrix_backend ? "matrix" : "symbolic";
  if (!reconstruct) {
    if (matrix_backend) {
      auto m = wd::mat::matrix_wd_from_json(in);
      j["certificate"] = wd::purity::purity_certificate(m, with_bases);
    } else {
      auto a = wd::symbolic_from_json(in);
      j["certificate"] = wd::purity::purity_certificate(a);
    }
    if (opts.format == "json") {
      emit(j);
    } else {
      const auto& cert = j["certificate"];
      std::cout << kVersion << "  purity (" << j["backend"].get<std::string>()
                << ")\n";
      std::cout << "verdict: " << cert["verdict"].get<std::string>();
      if (!cert["center"].is_null())
        std::cout << " center " << cert["center"].get<std::string>();
      std::cout << "\n";
      if (cert.contains("filtration")) {
        std::cout << "filtration jumps:";
        for (const auto& jump : cert["filtration"])
          std::cout << " " << jump["weight"].get<std::string>() << "(dim "
                    << jump["dim"].get<long long>() << ")";
        std::cout << "\n";
      }
      if (cert.contains("primitive")) {
        std::cout << "primitive dims:";
        for (const auto& layer : cert["primitive"])
          std::cout << " V(" << layer["i"].get<long long>()
                    << ")=" << layer["dim"].get<long long>();
        std::cout << "\n";
      }
    }
    return 0;
  }
  // --reconstruct: forget N, then search for the unique pure completion.
  if (matrix_backend) {
    auto m = wd::mat::matrix_wd_from_json(in);
    auto stripped = wd::mat::make_matrix_wd(
        m.q, wd::mat::frobenius_semisimplify(m).phi,
        wd::mat::RatMatrix(m.phi.rows(), m.phi.rows()));
    auto rec = wd::purity::reconstruct_monodromy(stripped);
    j["stripped"] = wd::mat::to_json(stripped);
    if (auto* got = std::get_if<wd::mat::MatrixWD>(&rec)) {
      j["pure_completion"] = wd::mat::to_json(*got);
      j["certificate"] = wd::purity::purity_certificate(*got, with_bases);
    } else {
      j["pure_completion"] = nullptr;
      j["no_pure_reason"] = std::get<wd::purity::NoPureN>(rec).reason;
    }
  } else {
    auto a = wd::symbolic_from_json(in);
    auto stripped = wd::purity::strip_monodromy(a);
    auto rec = wd::purity::reconstruct_monodromy(stripped);
    j["stripped"] = wd::to_json(stripped);
    if (auto* got = std::get_if<wd::SymbolicWD>(&rec)) {
      j["pure_completion"] = wd::to_json(*got);
      j["certificate"] = wd::purity::purity_certificate(*got);
    } else {
      j["pure_completion"] = nullptr;
      j["no_pure_reason"] = std::get<wd::purity::NoPureN>(rec).reason;
    }
  }
  if (opts.format == "json") {
    emit(j);
  } else {
    std::cout << kVersion << "  purity --reconstruct\n";
    if (j["pure_completion"].is_null())
      std::cout << "no pure completion: " << j["no_pure_reason"].get<std::string>()
                << "\n";
    else
      std::cout << "pure completion: " << j["pure_completion"].dump() << "\n";
  }
  return 0;
}

int cmd_red(const CommonOpts& opts, long long h, bool all, bool strata) {
  auto rep = wd::seg::segment_rep_from_json(load_input(opts.input), opts.q,
                                            parse_w0(opts.w0));
  if (!all && h < 0 && !strata) all = true;
  if (opts.format == "json") {
    json j = head("red");
    j["input"] = wd::seg::to_json(rep);
    if (h >= 0) {
      json row;
      row["h"] = h;
      row["class"] = wd::seg::to_json(wd::seg::red_h(rep, h));
      j["red_h"] = std::move(row);
    }
    if (all) j["red"] = wd::seg::red_table_json(rep)["red"];
    if (strata) j["strata"] = wd::seg::strata_table_json(rep)["strata"];
    emit(j);
  } else {
    if (h >= 0) {
      json cls = wd::seg::to_json(wd::seg::red_h(rep, h));
      std::cout << "Red^(" << h << ") = " << cls.dump() << "\n";
    }
    if (all) std::cout << wd::seg::red_table_text(rep);
    if (strata) std::cout << wd::seg::strata_table_text(rep);
  }
  return 0;
}

int cmd_specseq(const CommonOpts& opts) {
  auto rep = wd::seg::segment_rep_from_json(load_input(opts.input), opts.q,
                                            parse_w0(opts.w0));
  auto page = wd::e1::assemble_e1(rep);
  bool degenerate = wd::e1::check_degeneration(page);
  if (opts.format == "json") {
    json j = head("specseq");
    j["input"] = wd::seg::to_json(rep);
    j["tempered"] = wd::seg::is_tempered(rep);
    j["page"] = wd::e1::to_json(page);
    j["degenerate"] = degenerate;
    if (degenerate) {
      auto ab = wd::e1::abutment(page);
      j["abutment"] = wd::to_json(ab);
      j["abutment_purity"] = wd::purity::purity_certificate(ab);
      j["matches_rec"] = wd::e1::compare_with_rec(ab, rep);
    }
    emit(j);
  } else {
    std::cout << kVersion << "  specseq\n";
    std::cout << wd::e1::page_text(page);
    if (degenerate) {
      auto ab = wd::e1::abutment(page);
      auto verdict = wd::purity::classify(ab);
      std::cout << "degenerate at E1: yes\n";
      std::cout << "abutment: " << wd::to_json(ab).dump() << "\n";
      std::cout << "abutment purity: " << wd::purity::verdict_str(verdict);
      if (verdict.center)
        std::cout << " center " << wd::rat_str(*verdict.center);
      std::cout << "\n";
      std::cout << "matches rec: "
                << (wd::e1::compare_with_rec(ab, rep) ? "yes" : "no") << "\n";
    } else {
      std::cout << "not degenerate at E1; abutment certificate unavailable\n";
    }
  }
  return degenerate ? 0 : 4;
}

std::string self_path() {
  char buf[4096];
  ssize_t len = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (len <= 0) return "";
  buf[len] = '\0';
  return buf;
}

int cmd_verify(const wd::verify::Options& opts, const std::string& format) {
  auto results = wd::verify::run_all(opts);
  if (format == "json")
    emit(wd::verify::report_json(results, opts));
  else
    std::cout << wd::verify::report_text(results);
  return wd::verify::all_pass(results) ? 0 : 4;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"exact Weil-Deligne representation calculus"};
  app.require_subcommand(1);

  CommonOpts rec_opts, purity_opts, red_opts, ss_opts;
  bool reconstruct = false, with_bases = true;
  long long red_h_val = -1;
  bool red_all = false, red_strata = false;

  auto add_common = [](CLI::App* sub, CommonOpts& o) {
    sub->add_option("input", o.input, "input JSON path, or - for stdin")
        ->required();
    sub->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--q", o.q, "default residue cardinality when absent");
    sub->add_option("--w0", o.w0, "default base weight when absent");
  };

  auto* rec = app.add_subcommand("rec", "segments to Weil-Deligne");
  add_common(rec, rec_opts);
  auto* purity = app.add_subcommand("purity", "purity certificates");
  add_common(purity, purity_opts);
  purity->add_flag("--reconstruct", reconstruct,
                   "strip N, then find the unique pure completion");
  purity->add_flag("!--no-bases", with_bases, "omit bases from certificates");
  auto* red = app.add_subcommand("red", "Jacquet reduction tables");
  add_common(red, red_opts);
  red->set_help_flag("--help", "print help");
  red->add_option("--h", red_h_val, "single reduction level");
  red->add_flag("--all", red_all, "full table h = 0..n");
  red->add_flag("--strata", red_strata, "strata classes for every #S");
  auto* ss = app.add_subcommand("specseq", "weight spectral sequence page");
  add_common(ss, ss_opts);

  wd::verify::Options vopts;
  std::string verify_format = "text";
  auto* verify = app.add_subcommand("verify", "run the acceptance sweeps");
  verify->add_option("--format", verify_format, "output format")
      ->check(CLI::IsMember({"json", "text"}));
  verify->add_option("--max-n", vopts.strata_max_n, "partition sweep bound");
  verify->add_option("--max-dim", vopts.matrix_max_dim, "matrix sweep bound");
  verify->add_option("--instances", vopts.random_instances,
                     "randomized instances per suite");
  verify->add_option("--seed", vopts.seed, "random seed");
  verify->add_option("--golden-dir", vopts.golden_dir, "golden file directory");
  verify->add_option("--cli-path", vopts.cli_path, "CLI binary to exercise");
  verify->add_flag("--inject-fault", vopts.inject_fault,
                   "force one failing check (harness self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (rec->parsed()) return cmd_rec(rec_opts);
  if (purity->parsed()) return cmd_purity(purity_opts, reconstruct, with_bases);
  if (red->parsed())
    return cmd_red(red_opts, red->count("--h") ? red_h_val : -1, red_all,
                   red_strata);
  if (ss->parsed()) return cmd_specseq(ss_opts);
  if (verify->parsed()) {
    if (vopts.cli_path.empty()) vopts.cli_path = self_path();
    if (vopts.golden_dir.empty()) vopts.golden_dir = WDCALC_GOLDEN_DIR;
    return cmd_verify(vopts, verify_format);
  }
  return 5;
}

json error_json(const std::string& code, const std::string& message) {
  json j;
  j["error"] = code;
  j["message"] = message;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const wd::Error& e) {
    std::cerr << error_json(e.code(), e.what()).dump() << "\n";
    switch (e.kind()) {
      case wd::ErrKind::parse:
        return 2;
      case wd::ErrKind::domain:
        return 3;
      case wd::ErrKind::internal:
        return 5;
    }
    return 5;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << error_json("JsonError", e.what()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("InternalError", e.what()).dump() << "\n";
    return 5;
  }
}
