#include "srank/level_codec.hpp"

#include <doctest.h>

#include <bit>
#include <random>

using namespace srank;

TEST_CASE("leaf codec round trip and sum-sorted order, w = 10") {
  auto c = leaf_codec(10, Int(32));
  CHECK(c->K == 1024 + 32);
  CHECK(c->used() == 1024);
  std::vector<bool> hit(1024, false);
  for (unsigned x = 0; x < 1024; ++x) {
    Int k = leaf_encode(*c, Int(x));
    REQUIRE(k < 1024);
    std::size_t s = static_cast<std::size_t>(std::popcount(x));
    CHECK(c->sum_of(k) == s);
    CHECK(leaf_decode(*c, k) == x);
    hit[k.convert_to<std::size_t>()] = true;
  }
  for (bool b : hit) CHECK(b);
  CHECK_THROWS_AS(c->sum_of(Int(1024)), IntegrityError);
}

TEST_CASE("leaf_rank matches a popcount oracle") {
  auto c = leaf_codec(12, Int(64));
  std::mt19937_64 rng(7);
  for (int it = 0; it < 2000; ++it) {
    unsigned x = static_cast<unsigned>(rng() & 0xfff);
    Int k = leaf_encode(*c, Int(x));
    for (std::size_t u = 0; u <= 12; ++u) {
      unsigned mask = u == 0 ? 0u : ((1u << u) - 1);
      REQUIRE(leaf_rank(*c, k, u) == static_cast<std::size_t>(std::popcount(x & mask)));
    }
  }
}

TEST_CASE("counting audit passes on leaves and synthetic codecs") {
  auto c = leaf_codec(16, Int(256));
  auto a = child_sum_counts(*c);
  CHECK(a.pass);
  CHECK(a.exhaustive);
  CHECK(a.min_lower_ratio >= 1);

  auto s = synthetic_codec(64, 16, 2, Int(1) << 10);
  CHECK(s->K == pow2(16) + 1024);
  CHECK(s->used() == s->K);
  auto b = child_sum_counts(*s, 128, 3);
  CHECK(b.pass);
  CHECK_FALSE(b.exhaustive);
}

TEST_CASE("counting audit catches a deficient class") {
  auto c = leaf_codec(8, Int(16));
  auto bad = std::make_shared<LevelCodec>(*c);
  auto cnt = bad->cnt;
  cnt[4] -= 1;
  bad->set_counts(cnt);
  auto a = child_sum_counts(*bad);
  CHECK_FALSE(a.pass);
}
