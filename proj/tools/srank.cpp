// srank: build, query and audit rank structures; run the certification suites.
// Every command prints JSON lines on stdout. Exit status: 0 success,
// 1 certification or verification failure, 2 usage error.

#include "srank/binom_approx.hpp"
#include "srank/rank_tree.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace srank;
using json = nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const json& j) { std::cout << j.dump() << '\n'; }

Params load_params(const std::string& config, const std::string& engine) {
  Params p;
  if (!config.empty()) {
    if (!std::filesystem::exists(config)) throw UsageError("config file not found: " + config);
    apply_config(p, read_config_file(config));
  }
  if (!engine.empty()) p.engine = parse_engine(engine);
  return p;
}

Bits input_bits(const std::string& in, std::size_t random_n, std::uint64_t seed) {
  if (!in.empty()) {
    if (!std::filesystem::exists(in)) throw UsageError("input file not found: " + in);
    return read_bitfile(in);
  }
  if (random_n == 0) throw UsageError("build needs --in or --random");
  return random_bits(random_n, seed);
}

// A configured n must match the input; an absent one is taken from it.
void fix_n(Params& p, std::size_t n, bool configured) {
  if (configured && p.n != 0 && p.n != n)
    throw UsageError("config n=" + std::to_string(p.n) + " but the input holds " + std::to_string(n) + " bits");
  p.n = n;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json sweep(const RankStructure& rs, const Bits* truth) {
  std::uint64_t max_reads = 0, total_reads = 0;
  std::size_t mismatches = 0, first_bad = 0;
  std::vector<std::size_t> table;
  if (truth) table = oracle_table(*truth);
  for (std::size_t u = 0; u <= rs.n; ++u) {
    ProbeMeter m;
    std::size_t r = rank(rs, u, m);
    max_reads = std::max(max_reads, m.word_reads);
    total_reads += m.word_reads;
    if (truth && r != table[u] && mismatches++ == 0) first_bad = u;
  }
  json j{{"queries", rs.n + 1},
         {"max_word_reads", max_reads},
         {"mean_word_reads", static_cast<double>(total_reads) / static_cast<double>(rs.n + 1)}};
  if (truth) {
    j["verified"] = mismatches == 0;
    j["mismatches"] = mismatches;
    if (mismatches) j["first_mismatch_u"] = first_bad;
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Succinct rank structures over the spillover representation"};
  app.require_subcommand(1);
  std::string in, out, config, engine, ledger, verify_bits;
  std::uint64_t seed = 1;
  std::size_t random_n = 0, u = 0;
  bool do_sweep = false;

  auto* build_cmd = app.add_subcommand("build", "Build a structure from a bit file");
  build_cmd->add_option("--in", in, "input bit file");
  build_cmd->add_option("--random", random_n, "build over n seeded random bits instead");
  build_cmd->add_option("--seed", seed, "seed for --random");
  build_cmd->add_option("--config", config, "key=value configuration");
  build_cmd->add_option("--engine", engine, "enum|probe")->check(CLI::IsMember({"enum", "probe"}));
  build_cmd->add_option("--out", out, "output structure file")->required();
  build_cmd->add_option("--ledger", ledger, "write the space audit here");

  auto* query_cmd = app.add_subcommand("query", "Rank queries on a built structure");
  query_cmd->add_option("--in", in, "structure file")->required();
  auto* u_opt = query_cmd->add_option("--u", u, "query position");
  auto* sweep_opt = query_cmd->add_flag("--sweep", do_sweep, "query every position");
  query_cmd->add_option("--verify", verify_bits, "bit file to compare a sweep against");
  u_opt->excludes(sweep_opt);

  auto* audit_cmd = app.add_subcommand("audit", "Space audit of a built structure");
  audit_cmd->add_option("--in", in, "structure file")->required();

  std::size_t l = 0, d = 0;
  std::string alpha = "1/2", eps, window = "1/4";
  int mx = 0, my = 0;
  std::size_t w_terms = 0;
  auto* va_cmd = app.add_subcommand("verify-approx", "Certify binomial approximations");
  va_cmd->add_option("--l", l, "binomial length")->required();
  va_cmd->add_option("--alpha", alpha, "local base as a fraction of l (local mode)");
  va_cmd->add_option("--d", d, "degree");
  va_cmd->add_option("--c", window, "window scale");
  va_cmd->add_option("--eps", eps, "rectangle mode: target error, e.g. 1/256");
  va_cmd->add_option("--mx", mx, "rectangle mode: x half-range");
  va_cmd->add_option("--my", my, "rectangle mode: y half-range");
  va_cmd->add_option("--w", w_terms, "rectangle mode: also certify integer terms at this w");

  std::size_t bench_n = 4096;
  auto* bench_cmd = app.add_subcommand("bench", "Build and sweep seeded random arrays");
  bench_cmd->add_option("--config", config, "key=value configuration");
  bench_cmd->add_option("--engine", engine, "enum|probe")->check(CLI::IsMember({"enum", "probe"}));
  bench_cmd->add_option("--n", bench_n, "array length");
  bench_cmd->add_option("--seed", seed, "seed");

  auto* self_cmd = app.add_subcommand("selftest", "Quick end-to-end checks");
  self_cmd->add_option("--seed", seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;
    emit({{"status", "usage_error"}, {"error", e.what()}});
    return 2;
  }

  if (*build_cmd) {
    Params p = load_params(config, engine);
    bool configured = p.n != 0;
    Bits bits = input_bits(in, random_n, seed);
    fix_n(p, bits.size(), configured);
    auto rs = build(bits, p);
    save_file(rs, out);
    auto audit = space_audit(rs);
    if (!ledger.empty()) {
      std::ofstream lf(ledger);
      if (!lf) throw UsageError("cannot write ledger " + ledger);
      lf << audit.dump(2) << '\n';
    }
    emit({{"command", "build"},
          {"status", "ok"},
          {"out", out},
          {"n", rs.n},
          {"total_bits", audit["total_bits"]},
          {"redundancy_bits", audit["redundancy_bits"]},
          {"engine", to_string(p.engine)},
          {"mode", to_string(p.mode)}});
    return 0;
  }
  if (*query_cmd) {
    if (!std::filesystem::exists(in)) throw UsageError("structure file not found: " + in);
    auto rs = load_file(in);
    if (do_sweep) {
      Bits truth;
      if (!verify_bits.empty()) {
        if (!std::filesystem::exists(verify_bits)) throw UsageError("bit file not found: " + verify_bits);
        truth = read_bitfile(verify_bits);
        if (truth.size() != rs.n) throw UsageError("--verify length differs from the structure's n");
      }
      auto j = sweep(rs, verify_bits.empty() ? nullptr : &truth);
      j["command"] = "query";
      emit(j);
      if (j.contains("verified") && !j["verified"].get<bool>()) return 1;
      return 0;
    }
    if (u_opt->count() == 0) throw UsageError("query needs --u or --sweep");
    ProbeMeter m;
    std::size_t r;
    try {
      r = rank(rs, u, m);
    } catch (const RangeError& e) {
      throw UsageError(e.what());
    }
    emit({{"command", "query"}, {"u", u}, {"rank", r}, {"word_reads", m.word_reads}});
    return 0;
  }
  if (*audit_cmd) {
    if (!std::filesystem::exists(in)) throw UsageError("structure file not found: " + in);
    auto rs = load_file(in);
    auto j = space_audit(rs);
    j["command"] = "audit";
    emit(j);
    return 0;
  }
  if (*va_cmd) {
    std::vector<CertReport> reps;
    if (!eps.empty()) {
      RectConfig cfg;
      if (d) cfg.degree = d;
      cfg.window_scale = parse_rational(window);
      cfg.relaxed = true;
      auto rd = rect_decompose(l, mx, my, parse_rational(eps), cfg, true);
      reps.push_back(verify_decomp(rd));
      if (w_terms) reps.push_back(verify_decomp(integer_terms(rd, w_terms, TermMode::direct, true)));
    } else {
      if (!d) throw UsageError("local mode needs --d");
      auto la = local_approx(l, parse_rational(alpha), d, parse_rational(window));
      reps.push_back(verify_decomp(la));
    }
    bool pass = true;
    for (auto& r : reps) {
      auto j = r.to_json();
      j.erase("runtime_ms");
      j["command"] = "verify-approx";
      emit(j);
      pass = pass && r.pass;
    }
    return pass ? 0 : 1;
  }
  if (*bench_cmd) {
    Params p = load_params(config, engine);
    if (p.w == 0) {
      p.w = 32;
      p.enforce_wmin = false;
    }
    p.n = bench_n;
    auto t0 = std::chrono::steady_clock::now();
    auto chain = build_codecs(p);
    double codec_ms = ms_since(t0);
    auto bits = random_bits(bench_n, seed);
    t0 = std::chrono::steady_clock::now();
    auto rs = build(bits, p, chain);
    double build_ms = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto j = sweep(rs, &bits);
    double sweep_ms = ms_since(t0);
    j["command"] = "bench";
    j["n"] = bench_n;
    j["engine"] = to_string(p.engine);
    j["codec_ms"] = codec_ms;
    j["build_ms"] = build_ms;
    j["sweep_ms"] = sweep_ms;
    j["total_bits"] = rs.arena.length();
    emit(j);
    return j["verified"].get<bool>() ? 0 : 1;
  }
  if (*self_cmd) {
    bool pass = true;
    for (auto e : {Engine::enumeration, Engine::probe}) {
      Params p;
      p.w = 16;
      p.B = 2;
      p.t = 2;
      p.n = 64;
      p.path = PathChoice::small;
      p.enforce_wmin = false;
      p.engine = e;
      auto bits = random_bits(64, seed);
      auto rs = build(bits, p);
      auto a = space_audit(rs);
      auto s = sweep(rs, &bits);
      bool ok = s["verified"].get<bool>() && a["redundancy_bits"].get<long long>() == 1;
      emit({{"command", "selftest"}, {"check", "single tree, one redundant bit"},
            {"engine", to_string(e)}, {"pass", ok}});
      pass = pass && ok;

      p.w = 32;
      p.n = 3000;
      p.path = PathChoice::automatic;
      auto bits2 = random_bits(3000, seed + 1);
      auto s2 = sweep(build(bits2, p), &bits2);
      bool ok2 = s2["verified"].get<bool>();
      emit({{"command", "selftest"}, {"check", "multi-block sweep against the oracle"},
            {"engine", to_string(e)}, {"pass", ok2}, {"max_word_reads", s2["max_word_reads"]}});
      pass = pass && ok2;
    }
    return pass ? 0 : 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CertificationError& e) {
    emit({{"status", "certification_failure"}, {"error", e.what()}});
    return 1;
  } catch (const IntegrityError& e) {
    emit({{"status", "integrity_failure"}, {"error", e.what()}});
    return 1;
  } catch (const BudgetError& e) {
    emit({{"status", "certification_failure"}, {"error", e.what()}});
    return 1;
  } catch (const std::exception& e) {
    // Usage, configuration and parameter errors, missing files.
    emit({{"status", "usage_error"}, {"error", e.what()}});
    return 2;
  }
}
