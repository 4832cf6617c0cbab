#pragma once
// Combining B child spillovers into one node code: (B-1)w memory bits plus a
// spillover in [K], with the node's ones-count readable from the spillover
// alone. Two engines share this interface:
//   enumeration: one ranking over all child tuples, grouped by total sum and
//                mode; decodes read the whole (B-1)w-bit memory.
//   probe:       per-class mixed-radix gluing; each decode touches O(1) words.

#include "srank/level_codec.hpp"
#include "srank/mixed_radix.hpp"
#include "srank/params.hpp"
#include "srank/partition.hpp"

#include <json.hpp>

#include <memory>

namespace srank {

class Combiner {
 public:
  virtual ~Combiner() = default;

  Engine engine() const { return engine_; }
  bool small_path() const { return small_; }
  std::size_t arity() const { return B_; }
  std::size_t mem_bits() const { return m_; }
  const LevelCodec& child() const { return *child_; }
  const Int& K() const { return K_; }
  const std::vector<Int>& counts() const { return cnt_; }  // per total sum S in [0, B l]
  const Partition* partition() const { return partition_.get(); }

  // ks: child spillovers (values of the child's sum-sorted domain).
  virtual EncodedTuple encode(const std::vector<Int>& ks) const = 0;
  // T_i for 0 <= i <= B; T_0 and T_B cost no word reads.
  virtual std::size_t prefix_sum(const BitSource& mem, const Int& spill, std::size_t i,
                                 ProbeMeter& meter) const = 0;
  // k_i for 1 <= i <= B.
  virtual Int child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                          ProbeMeter& meter) const = 0;
  // (T_{i-1}, k_i) together, as the query descent needs them.
  virtual std::pair<std::size_t, Int> descend(const BitSource& mem, const Int& spill,
                                              std::size_t i, ProbeMeter& meter) const;
  // The node sum, from the spillover alone.
  std::size_t total_sum(const Int& spill) const;

  virtual nlohmann::json ledger() const = 0;

 protected:
  Combiner(CodecPtr child, std::size_t B, Engine e, bool small,
           std::shared_ptr<const Partition> part);
  // Fills K_ and cnt_; the own layout is sum-sorted by construction.
  void set_layout(std::vector<Int> per_sum);
  void check_arity(const std::vector<Int>& ks) const;
  nlohmann::json base_ledger() const;

  CodecPtr child_;
  std::size_t B_, w_, l_, m_;
  Engine engine_;
  bool small_;
  std::shared_ptr<const Partition> partition_;
  Int K_;
  std::vector<Int> cnt_;
  std::vector<Int> off_;
};

using CombinerPtr = std::shared_ptr<const Combiner>;

// Small path iff B log2(l+1) <= w/2, i.e. (l+1)^B <= 2^{w/2}.
bool use_small_path(std::size_t B, std::size_t l, std::size_t w);

CombinerPtr make_enum_combiner(CodecPtr child, const Params& p, bool small,
                               std::shared_ptr<const Partition> part);
CombinerPtr make_probe_combiner(CodecPtr child, const Params& p, bool small,
                                std::shared_ptr<const Partition> part);

// Builds the next level: picks the path, builds (or reuses) the partition,
// runs the chosen engine and checks the size bound of the mode:
//   small path  K <= 2^w + 2 B sigma
//   large path  strict: K <= 2^w + 33 B sigma; relaxed: K <= 2^w + G sigma
// with sigma = max(K_child - 2^w, n 2^{w/2}). Strict violations throw
// CertificationError; relaxed results are recorded in the ledger.
CodecPtr combine(CodecPtr child, const Params& p, Engine engine,
                 std::shared_ptr<const Partition> part = nullptr);

// Free-standing decoders over a node whose memory starts at `base` in `arena`.
std::size_t decode_prefix_sum(const LevelCodec& codec, const BitArena& arena, std::size_t base,
                              const Int& spill, std::size_t i, ProbeMeter& meter);
Int decode_child_spill(const LevelCodec& codec, const BitArena& arena, std::size_t base,
                       const Int& spill, std::size_t i, ProbeMeter& meter);

// Per-level size ledger of a codec chain, root first.
nlohmann::json size_ledger(const LevelCodec& top);

}  // namespace srank
