#include "srank/model.hpp"

#include <doctest.h>

#include <random>

using namespace srank;

namespace {

// Independent bit-slice oracle: the arena as a plain vector of bools.
std::vector<bool> raw_bits(const BitArena& a) {
  std::vector<bool> v;
  for (std::size_t i = 0; i < a.length(); ++i) v.push_back(a.bit(i));
  return v;
}

Int slice(const std::vector<bool>& v, std::size_t off, std::size_t width) {
  Int r = 0;
  for (std::size_t i = width; i-- > 0;) r = r * 2 + (v[off + i] ? 1 : 0);
  return r;
}

}  // namespace

TEST_CASE("read_word on constant memories") {
  const std::size_t w = 16;
  BitArena zero, ones;
  zero.append_bits(0, w);
  ones.append_bits(pow2(w) - 1, w);
  ProbeMeter m;
  CHECK(read_word(zero, 0, w, m) == 0);
  CHECK(meter_report(m) == MeterReport{1, 0});
  CHECK(read_word(ones, 0, w, m) == pow2(w) - 1);
  CHECK(m.word_reads == 2);
}

TEST_CASE("read_word slices across bytes") {
  BitArena a;
  for (int i = 0; i < 4; ++i) a.append_u64(0xA5, 8);
  ProbeMeter m;
  CHECK(read_word(a, 4, 8, m) == 0x5A);
  auto raw = raw_bits(a);
  for (std::size_t off = 0; off + 8 <= a.length(); ++off) CHECK(read_word(a, off, 8, m) == slice(raw, off, 8));
}

TEST_CASE("read_word rejects out-of-range offsets") {
  BitArena a;
  a.append_bits(3, 10);
  ProbeMeter m;
  CHECK_THROWS_AS(read_word(a, 3, 8, m), RangeError);
  CHECK(m.word_reads == 0);
}

TEST_CASE("append_bits round trips and rejects wide values") {
  BitArena a;
  auto off = a.append_bits(5, 3);
  ProbeMeter m;
  CHECK(read_bits(a, off, 3, 8, m) == 5);
  auto len = a.length();
  CHECK(a.append_bits(0, 0) == len);
  CHECK(a.length() == len);
  CHECK_THROWS_AS(a.append_bits(8, 3), EncodingError);
}

TEST_CASE("random append sequences reconstruct by offset arithmetic") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    BitArena a;
    std::vector<std::pair<Int, std::size_t>> fields;
    std::vector<std::size_t> offs;
    for (int k = 0; k < 40; ++k) {
      std::size_t width = rng() % 200;
      Int v = 0;
      for (std::size_t b = 0; b < width; ++b) v = v * 2 + (rng() & 1);
      offs.push_back(a.append_bits(v, width));
      fields.emplace_back(v, width);
    }
    auto raw = raw_bits(a);
    std::size_t expect = 0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      CHECK(offs[k] == expect);
      CHECK(a.peek(offs[k], fields[k].second) == fields[k].first);
      CHECK(slice(raw, offs[k], fields[k].second) == fields[k].first);
      expect += fields[k].second;
    }
  }
}

TEST_CASE("word size above 64 bits behaves like a small word") {
  const std::size_t w = 200;
  BitArena a;
  Int v = pow2(199) + 12345;
  a.append_bits(v, w);
  a.append_bits(pow2(150) - 1, w);
  ProbeMeter m;
  CHECK(read_word(a, 0, w, m) == v);
  CHECK(read_word(a, w, w, m) == pow2(150) - 1);
  CHECK(read_bits(a, 10, 300, w, m) == (a.peek(10, 300)));
}

TEST_CASE("read_bits charges one probe per window") {
  BitArena a;
  for (int i = 0; i < 10; ++i) a.append_u64(0xFFFF, 16);
  ProbeMeter m;
  read_bits(a, 3, 16, 16, m);
  CHECK(m.word_reads == 1);
  m.reset();
  read_bits(a, 3, 33, 16, m);
  CHECK(m.word_reads == 3);
  m.reset();
  // A short field at the very end still costs one probe.
  CHECK(read_bits(a, a.length() - 5, 5, 16, m) == 31);
  CHECK(m.word_reads == 1);
}

TEST_CASE("arena and integer sources agree") {
  std::mt19937_64 rng(3);
  BitArena a;
  Int whole = 0;
  std::size_t len = 0;
  for (int k = 0; k < 20; ++k) {
    std::uint64_t v = rng();
    a.append_u64(v, 64);
    whole += Int(v) << len;
    len += 64;
  }
  ArenaSource as(a, 0, 32);
  IntSource is(whole, len, 32);
  for (int k = 0; k < 200; ++k) {
    std::size_t off = rng() % (len - 100), width = rng() % 100;
    ProbeMeter m1, m2;
    CHECK(as.read(off, width, m1) == is.read(off, width, m2));
  }
  ShiftedSource sh(is, 64);
  ProbeMeter m;
  CHECK(sh.read(0, 64, m) == is.read(64, 64, m));
}

TEST_CASE("spillover values stay inside their domain") {
  CHECK_NOTHROW(SpilloverValue(Int(0), Int(1)));
  CHECK_THROWS_AS(SpilloverValue(Int(3), Int(3)), RangeError);
}

TEST_CASE("limb serialization round trip") {
  BitArena a;
  a.append_bits(Int("123456789012345678901234567890"), 130);
  auto b = BitArena::from_limbs(a.limbs(), a.length());
  CHECK(a == b);
}
