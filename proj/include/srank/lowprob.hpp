#pragma once
// Field code for a run of B' child spillovers that may fall anywhere.
// Values split by their sum: K_high = sums in [l/2 - h', l/2 + h'] with
// h' = floor(sqrt(l w)), K_low = the rest. A header holds one flag per element
// (1 = low). Element q stores one field:
//   high: v * C_max + rank,           v = T_q - T_pred - (q - pred) s_lo
//   low:  H + T_q * |K_low| + rank_low
// where pred is the nearest earlier low element (0 = the run's base) and
// rank is the index inside SUM^{-1}(s_q). Any T_q reads the header and at most
// two fields; k_q reads at most three.

#include "srank/level_codec.hpp"

#include <functional>

namespace srank {

struct LowProbLayout {
  std::size_t l = 0, Bp = 0, w = 0;
  std::size_t h = 0;            // h'
  std::size_t s_lo = 0, s_hi = 0;
  std::size_t T_max = 0;        // explicit prefix sums lie in [0, T_max]
  Int C_max;                    // max class size inside the band
  Int K_low;                    // used values outside the band
  Int H;                        // number of high field values
  Int D;                        // field domain
  std::size_t F = 0;            // ceil(log2 D)
  std::size_t F_bound = 0;      // w + floor(log2 w)

  bool is_low(std::size_t s) const { return s < s_lo || s > s_hi; }
  nlohmann::json to_json() const;
};

LowProbLayout lowprob_layout(const LevelCodec& child, std::size_t Bp, std::size_t T_max);

struct LowProbCode {
  std::uint64_t header = 0;  // bit q-1 set: element q is low
  std::vector<Int> fields;   // fields[q-1]
};

// ks: the run's spillovers (at most Bp); T_base: prefix sum before the run.
LowProbCode lowprob_fields(const LowProbLayout& L, const LevelCodec& child,
                           const std::vector<Int>& ks, std::size_t T_base);

// Access to a stored run; each call may charge probes.
struct LowProbReader {
  std::function<std::uint64_t()> header;
  std::function<Int(std::size_t)> field;  // 1-based
};

std::size_t lowprob_T(const LowProbLayout& L, const LowProbReader& rd, std::size_t q,
                      std::size_t T_base);
Int lowprob_k(const LowProbLayout& L, const LevelCodec& child, const LowProbReader& rd,
              std::size_t q, std::size_t T_base);

// Standalone bit string: B' header bits, then B' fields of F bits.
struct LowProbBits {
  Int bits;
  std::size_t length = 0;
};
LowProbBits encode_lowprob(const LowProbLayout& L, const LevelCodec& child,
                           const std::vector<Int>& ks, std::size_t T_base);
LowProbReader bits_reader(const LowProbLayout& L, const BitSource& src, ProbeMeter& meter);

}  // namespace srank
