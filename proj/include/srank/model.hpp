#pragma once
// Storage and access model: bit memory, metered word reads, spillover values.
// Bits inside a field are stored least-significant first; fields are packed
// back to back in append order.

#include <boost/multiprecision/gmp.hpp>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace srank {

using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct EncodingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when an exactly checked bound fails; `what()` names the bound and a witness.
struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Int pow2(std::size_t e);
std::size_t bit_length(const Int& v);   // 0 for v == 0
std::size_t ceil_log2(const Int& v);    // smallest b with 2^b >= v (v >= 1)
Int ceil_div(const Int& a, const Int& b);
Int binomial(std::size_t n, std::size_t k);
std::string to_string(const Int& v);

struct ProbeMeter {
  std::uint64_t word_reads = 0;
  std::uint64_t spill_reads = 0;
  void reset() { word_reads = spill_reads = 0; }
};

struct MeterReport {
  std::uint64_t word_reads;
  std::uint64_t spill_reads;
  bool operator==(const MeterReport&) const = default;
};

inline MeterReport meter_report(const ProbeMeter& m) { return {m.word_reads, m.spill_reads}; }

class BitArena {
 public:
  BitArena() = default;

  std::size_t length() const { return length_; }

  // Appends `value` in `width` bits and returns the start offset.
  std::size_t append_bits(const Int& value, std::size_t width);
  // Appends the low `width` bits of a machine integer.
  std::size_t append_u64(std::uint64_t value, std::size_t width);

  // Unmetered access, for builders and serialization only.
  Int peek(std::size_t offset, std::size_t width) const;
  bool bit(std::size_t i) const { return (limbs_[i >> 6] >> (i & 63)) & 1u; }

  const std::vector<std::uint64_t>& limbs() const { return limbs_; }
  static BitArena from_limbs(std::vector<std::uint64_t> limbs, std::size_t length);

  bool operator==(const BitArena& o) const { return length_ == o.length_ && limbs_ == o.limbs_; }

 private:
  std::vector<std::uint64_t> limbs_;
  std::size_t length_ = 0;
};

// One probe: bits [offset, offset + w).
Int read_word(const BitArena& arena, std::size_t offset, std::size_t w, ProbeMeter& meter);

// Reads a field of arbitrary width through w-bit windows; costs ceil(width / w)
// probes, or one probe when the field fits a single window near the arena end.
Int read_bits(const BitArena& arena, std::size_t offset, std::size_t width, std::size_t w,
              ProbeMeter& meter);

struct SpilloverValue {
  Int k;
  Int K;
  SpilloverValue() = default;
  SpilloverValue(Int k_, Int K_);
};

}  // namespace srank

namespace srank {

// Random-access bit memory seen by decoders; every access goes through a meter.
class BitSource {
 public:
  virtual ~BitSource() = default;
  virtual Int read(std::size_t offset, std::size_t width, ProbeMeter& meter) const = 0;
};

// A window of an arena starting at `base`; reads cost ceil(width / w) probes.
class ArenaSource final : public BitSource {
 public:
  ArenaSource(const BitArena& arena, std::size_t base, std::size_t w)
      : arena_(&arena), base_(base), w_(w) {}
  Int read(std::size_t offset, std::size_t width, ProbeMeter& meter) const override {
    return read_bits(*arena_, base_ + offset, width, w_, meter);
  }

 private:
  const BitArena* arena_;
  std::size_t base_;
  std::size_t w_;
};

// Bits held in an integer (used by in-process round trips); probes are still
// charged per w-bit window so accounting matches the arena form.
class IntSource final : public BitSource {
 public:
  IntSource(Int bits, std::size_t length, std::size_t w)
      : bits_(std::move(bits)), length_(length), w_(w) {}
  Int read(std::size_t offset, std::size_t width, ProbeMeter& meter) const override;

 private:
  Int bits_;
  std::size_t length_;
  std::size_t w_;
};

// Reads `width` bits at `offset` of a source shifted by `base`.
class ShiftedSource final : public BitSource {
 public:
  ShiftedSource(const BitSource& inner, std::size_t base) : inner_(&inner), base_(base) {}
  Int read(std::size_t offset, std::size_t width, ProbeMeter& meter) const override {
    return inner_->read(base_ + offset, width, meter);
  }

 private:
  const BitSource* inner_;
  std::size_t base_;
};

}  // namespace srank
