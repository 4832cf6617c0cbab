#pragma once
// Rank structure over a bit array. The array is cut into blocks of B^t w bits
// (the last one zero-padded); each block is a depth-t tree of combiners over
// w-bit leaves. Arena layout:
//   [prefix table: ones in blocks 0..i-1 for i = 1..n'-1, bit_length(n) bits each]
//   per block: [tree memory, B^t w - w bits][top spillover, spill_width bits]
// A level-j node's memory is its combiner memory ((B-1) w bits) followed by the
// memories of its B children in order.

#include "srank/bitfile.hpp"
#include "srank/combiner.hpp"

#include <json.hpp>

#include <iosfwd>

namespace srank {

struct RankStructure {
  Params params;
  std::size_t n = 0;             // array length
  std::size_t block_len = 0;     // B^t w
  std::size_t blocks = 0;        // n'
  std::size_t pad_bits = 0;      // zeros appended to the last block
  std::size_t prefix_width = 0;  // 0 when there is a single block
  std::size_t mem_bits = 0;      // m_t
  std::size_t spill_width = 0;
  std::vector<CodecPtr> codecs;  // codecs[j]: level j, leaves at 0
  BitArena arena;

  std::size_t block_offset(std::size_t b) const {
    return (blocks - 1) * prefix_width + b * (mem_bits + spill_width);
  }
  const LevelCodec& top() const { return *codecs.back(); }
};

// The certified codec chain for p (data independent).
std::vector<CodecPtr> build_codecs(const Params& p);

RankStructure build(const Bits& array, const Params& p);
// Reuses a chain from build_codecs(p).
RankStructure build(const Bits& array, const Params& p, std::vector<CodecPtr> codecs);

// Ones among positions [0, u); RangeError when u > n.
std::size_t rank(const RankStructure& rs, std::size_t u, ProbeMeter& meter);

// Linear scan.
std::size_t oracle_rank(const Bits& array, std::size_t u);
// Cumulative table, for cross-checking the scan.
std::vector<std::size_t> oracle_table(const Bits& array);

nlohmann::json space_audit(const RankStructure& rs);

// Binary format, little-endian:
//   magic "SRANKBIN" (8 bytes), u32 version,
//   u64 header length, header JSON (UTF-8),
//   u64 arena length in bits, u64 limb count, limbs (u64 each).
// The header records the parameters and layout plus the K of every level,
// which load() checks against the chain rebuilt from the parameters.
constexpr std::uint32_t kFormatVersion = 1;
void save(const RankStructure& rs, std::ostream& out);
RankStructure load(std::istream& in);
void save_file(const RankStructure& rs, const std::string& path);
RankStructure load_file(const std::string& path);

nlohmann::json params_to_json(const Params& p);
Params params_from_json(const nlohmann::json& j);

}  // namespace srank
