#pragma once
// Tuples from mixed domains stored in m bits plus a spillover, with
// element-local decoding.
//
// Elements are merged left to right into groups whose product stays
// <= 2^{6w}; inside a group the first element is the most significant digit.
// Group values y_i are split as y_i = u_i * V_i + v_i and repacked into
// z_i = v_{i-1} * U_i + u_i (stored in w_i bits) for i < B'. The last pair
// z_{B'} = y_{B'} * V_{B'-1} + v_{B'-1} keeps its low m - sum(w_i) bits in
// memory and the rest in the spillover.
//
// Keyed plans treat the last element as a key: it becomes the outermost digit
// of z_{B'} and the spillover is aligned so that spill / key_stride is the key.

#include "srank/model.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace srank {

struct RadixPlan {
  std::vector<Int> original_domains;   // M_1..M_B
  std::vector<Int> merged_domains;     // N_1..N_{B'}
  std::vector<std::vector<std::size_t>> groups;  // original indices, most significant first
  std::vector<std::size_t> group_of;   // original index -> merged index (0-based)
  std::vector<Int> inner;              // original index -> product of less significant domains in its group
  std::vector<std::size_t> digit_widths;  // w_1..w_{B'-1}
  std::vector<Int> unit_sizes;         // U_1..U_{B'-1}
  std::vector<Int> carry_sizes;        // V_0..V_{B'-1}
  std::vector<std::size_t> field_offsets;  // z_1..z_{B'-1}, then the low part of z_{B'}
  std::size_t m = 0;
  std::size_t w = 0;
  std::size_t last_low_width = 0;      // bits of z_{B'} kept in memory
  bool keyed = false;
  Int key_stride = 0;                  // keyed: spillover values per key value
  Int K = 0;                           // construction spillover size
  Int K_bound = 0;                     // ceil(2^{-m} prod M_i) + 1

  std::size_t size() const { return original_domains.size(); }
  std::size_t merged_count() const { return merged_domains.size(); }
};

struct EncodedTuple {
  Int memory_bits;  // m bits, field layout per plan.field_offsets
  Int spill;        // in [0, K)
};

// Builds the plan. `check_floor` enforces m >= sum(log2 M_i) - w.
RadixPlan plan_radix(const std::vector<Int>& domains, std::size_t m, std::size_t w,
                     bool keyed = false, bool check_floor = true);

EncodedTuple radix_encode(const RadixPlan& plan, const std::vector<Int>& tuple);

// Decodes element i. Field indices touched (0-based over z_1..z_{B'}) are
// appended to `touched` when given; the spillover read is charged to
// meter.spill_reads.
Int radix_decode_element(const RadixPlan& plan, const BitSource& mem, const Int& spill,
                         std::size_t i, ProbeMeter& meter,
                         std::vector<std::size_t>* touched = nullptr);

// Key of a keyed plan, from the spillover alone.
Int radix_key(const RadixPlan& plan, const Int& spill);

// Full decode, for tests and audits.
std::vector<Int> radix_decode_all(const RadixPlan& plan, const EncodedTuple& enc);

struct AlignedLayout {
  std::size_t low_width = 0;
  std::vector<Int> starts;      // per key, in code units; multiples of 2^{low_width}
  std::vector<Int> top_starts;  // starts >> low_width
  Int K_top = 0;                // number of top values
  // Key whose interval holds codes with this top value.
  std::size_t key_of_top(const Int& top) const;
};

// Intervals of length ceil(count / 2^low) * 2^low laid out in key order.
AlignedLayout sum_align(const std::vector<Int>& counts, std::size_t low_width);

nlohmann::json to_json(const RadixPlan& plan);

}  // namespace srank
