#pragma once
// Per-level code description. Every level's spillover domain is sum-sorted:
// the values whose subtree holds s ones form the interval [off[s], off[s+1]),
// and values in [off[len+1], K) are never produced.

#include "srank/model.hpp"

#include <json.hpp>

#include <memory>
#include <vector>

namespace srank {

class Combiner;

struct LevelCodec {
  std::size_t level = 0;
  std::size_t len = 0;       // bits under one node: B^level * w
  std::size_t w = 0;
  std::size_t B = 0;
  std::size_t mem_bits = 0;  // len - w
  Int K;
  std::vector<Int> cnt;      // cnt[s] for s in [0, len]
  std::vector<Int> off;      // off[s] = cnt[0] + ... + cnt[s-1], s in [0, len + 1]
  std::vector<Int> pascal;   // leaves only: C(p, j) at p * (w + 1) + j, p, j <= w
  std::shared_ptr<const LevelCodec> child;
  std::shared_ptr<const Combiner> combiner;
  nlohmann::json audit;      // size bound and counting audit, filled by combine()

  const Int& used() const { return off.back(); }
  Int sigma() const { return K - pow2(w); }
  void set_counts(std::vector<Int> c);
  // SUM(k) by binary search over the offsets; IntegrityError for unused values.
  std::size_t sum_of(const Int& k) const;
};

using CodecPtr = std::shared_ptr<const LevelCodec>;

// Base level: the w-bit word itself, colex-ranked inside its popcount class.
// K = 2^w + pad; padding values sit above every used value.
CodecPtr leaf_codec(std::size_t w, const Int& pad);
// word bit p holds array position p.
Int leaf_encode(const LevelCodec& c, const Int& word);
Int leaf_decode(const LevelCodec& c, const Int& k);
// Ones among positions [0, u) of the word behind k.
std::size_t leaf_rank(const LevelCodec& c, const Int& k, std::size_t u);

// Stand-in child for size experiments: cnt[s] = ceil(C(l, s) 2^{w-l}) plus an
// even share of the remaining slack, so that K = 2^w + sigma exactly.
CodecPtr synthetic_codec(std::size_t l, std::size_t w, std::size_t B, const Int& sigma);

struct FactAudit {
  bool pass = true;
  std::string failed;        // name of the first failing bound
  std::string witness;
  std::size_t subsets = 0;   // upper-bound subsets checked
  bool exhaustive = false;
  Rat min_lower_ratio;       // min_s cnt[s] / (C(len, s) 2^{w - len})
  nlohmann::json to_json() const;
};

// Lower bound cnt[s] >= C(len, s) 2^{w-len} at every s, and
// sum_{s in X} cnt[s] <= sigma + sum_{s in X} C(len, s) 2^{w-len} on subsets X:
// all of them when len <= 16, else `samples` random ones plus the greedy worst.
FactAudit child_sum_counts(const LevelCodec& c, std::size_t samples = 256,
                           std::uint64_t seed = 1);

}  // namespace srank
