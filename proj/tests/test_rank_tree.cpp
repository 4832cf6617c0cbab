#include "srank/rank_tree.hpp"

#include <doctest.h>

#include <sstream>

using namespace srank;

namespace {

Params tree_params(std::size_t n, Engine e) {
  Params p;
  p.n = n;
  p.w = 32;
  p.B = 2;
  p.t = 2;
  p.engine = e;
  p.enforce_wmin = false;
  return p;
}

void sweep(const RankStructure& rs, const Bits& a) {
  auto table = oracle_table(a);
  ProbeMeter m;
  for (std::size_t u = 0; u <= a.size(); ++u) REQUIRE(rank(rs, u, m) == table[u]);
}

}  // namespace

TEST_CASE("oracles agree") {
  CHECK(oracle_rank({}, 0) == 0);
  CHECK(oracle_rank({1, 0, 1, 1}, 3) == 2);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto a = random_bits(777, seed, 0.3);
    auto t = oracle_table(a);
    for (std::size_t u = 0; u <= a.size(); ++u) REQUIRE(oracle_rank(a, u) == t[u]);
  }
}

TEST_CASE("all-zero and all-ones arrays") {
  for (auto e : {Engine::enumeration, Engine::probe}) {
    auto p = tree_params(1000, e);
    Bits zeros(1000, 0), ones(1000, 1);
    auto rz = build(zeros, p);
    auto ro = build(ones, p);
    ProbeMeter m;
    for (std::size_t u = 0; u <= 1000; ++u) {
      REQUIRE(rank(rz, u, m) == 0);
      REQUIRE(rank(ro, u, m) == u);
    }
    CHECK_THROWS_AS(rank(rz, 1001, m), RangeError);
  }
}

TEST_CASE("random arrays match the oracle at every position, both engines") {
  for (std::size_t n : {1024u, 4096u, 1000u}) {
    for (auto e : {Engine::enumeration, Engine::probe}) {
      auto p = tree_params(n, e);
      auto chain = build_codecs(p);
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto a = random_bits(n, seed, seed == 3 ? 0.1 : 0.5);
        auto rs = build(a, p, chain);
        sweep(rs, a);
        // Bits come back as rank differences.
        ProbeMeter m;
        for (std::size_t i = 0; i < n; ++i) REQUIRE(rank(rs, i + 1, m) - rank(rs, i, m) == a[i]);
      }
    }
  }
}

TEST_CASE("engines give the same ranks; probe engine reads are bounded") {
  const std::size_t n = 2048;
  auto a = random_bits(n, 42);
  auto re = build(a, tree_params(n, Engine::enumeration));
  auto rp = build(a, tree_params(n, Engine::probe));
  std::uint64_t max_reads = 0;
  for (std::size_t u = 0; u <= n; ++u) {
    ProbeMeter me, mp;
    REQUIRE(rank(re, u, me) == rank(rp, u, mp));
    max_reads = std::max(max_reads, mp.word_reads);
  }
  CHECK(max_reads <= 8);
}

TEST_CASE("single tree, w = 16, B = 2, t = 2, small path: one bit of redundancy") {
  for (auto e : {Engine::enumeration, Engine::probe}) {
    Params p;
    p.n = 64;
    p.w = 16;
    p.B = 2;
    p.t = 2;
    p.engine = e;
    p.path = PathChoice::small;
    p.enforce_wmin = false;
    auto a = random_bits(64, 3);
    auto rs = build(a, p);
    auto audit = space_audit(rs);
    CHECK(audit["total_bits"].get<std::size_t>() == 4 * 16 + 1);
    CHECK(audit["redundancy_bits"].get<long long>() == 1);
    CHECK(audit["per_block"]["spill_fits_w_plus_1"].get<bool>());
    sweep(rs, a);
  }
}

TEST_CASE("several blocks: redundancy within the per-block allowance") {
  auto p = tree_params(4096, Engine::probe);
  auto a = random_bits(4096, 8);
  auto rs = build(a, p);
  auto audit = space_audit(rs);
  CHECK(audit["blocks"].get<std::size_t>() == 32);
  CHECK(audit["within_allowance"].get<bool>());
  CHECK(audit["information_floor_ok"].get<bool>());
  CHECK(audit["prefix_width"].get<std::size_t>() == 13);
}

TEST_CASE("large path tree, t = 1, band 2: ranks match in both engines") {
  for (auto e : {Engine::enumeration, Engine::probe}) {
    Params p;
    p.n = 640;
    p.w = 16;
    p.B = 2;
    p.t = 1;
    p.engine = e;
    p.path = PathChoice::large;
    p.band = 2;
    p.enforce_wmin = false;
    auto chain = build_codecs(p);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto a = random_bits(640, seed, seed == 4 ? 0.2 : 0.5);
      sweep(build(a, p, chain), a);
    }
  }
}

TEST_CASE("serialization round trip and integrity checks") {
  auto p = tree_params(1500, Engine::probe);
  auto a = random_bits(1500, 5);
  auto rs = build(a, p);
  std::stringstream ss;
  save(rs, ss);
  std::string bytes = ss.str();
  std::stringstream in(bytes);
  auto back = load(in);
  CHECK(back.arena == rs.arena);
  sweep(back, a);
  std::stringstream again;
  save(back, again);
  CHECK(again.str() == bytes);

  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bin(bad);
  CHECK_THROWS_AS(load(bin), IntegrityError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(load(cut), IntegrityError);
}

TEST_CASE("build rejects mismatched n") {
  auto p = tree_params(100, Engine::probe);
  CHECK_THROWS_AS(build(Bits(99, 0), p), ParameterError);
}
