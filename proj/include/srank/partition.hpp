#pragma once
// Partition of a child spillover domain, per child position p and prefix sum
// T_{p-1}, into blocks K_j (one per integer term covering the grid point) and
// the residual K_0. Inside SUM^{-1}(s) the blocks are consecutive intervals in
// term order starting at the class start; K_0 is the tail of the class.
// Coordinates: x = (p-1) l/2 - T_{p-1}, y = T_p - p l/2, s = T_p - T_{p-1}.

#include "srank/binom_approx.hpp"
#include "srank/level_codec.hpp"

#include <json.hpp>

namespace srank {

struct PartitionConfig {
  std::size_t l = 0, B = 0, w = 0;
  Rat eps;
  std::size_t h = 0;  // band half-width per position
  Int sigma;          // excess the residual bound is measured against
  RectConfig rect;
  TermMode mode = TermMode::direct;
  bool strict = false;
  std::uint64_t max_grid = 1u << 22;
};

// eps = sigma 2^{-w-2}, h = floor(sqrt(l ceil(log2(1/eps)))), unless overridden;
// sigma = max(K_child - 2^w, n 2^{w/2}).
PartitionConfig default_partition_config(const LevelCodec& child, const Params& p);

struct PositionPartition {
  std::size_t p = 0;
  std::size_t l = 0;
  int Mx = 0, My = 0;
  IntegerDecomp terms;
  std::vector<Int> W;                  // dense grid, index (x + Mx)(2My + 1) + (y + My)
  std::vector<std::pair<int, int>> zeroed;  // infeasible points dropped (relaxed mode)
  Int max_residual;                    // max over T_{p-1} of |K_0|
  Int min_residual;

  long x_of(std::size_t Tprev) const { return static_cast<long>((p - 1) * l / 2) - static_cast<long>(Tprev); }
  long y_of(std::size_t Tcur) const { return static_cast<long>(Tcur) - static_cast<long>(p * l / 2); }
  bool in_grid(long x, long y) const { return -Mx <= x && x <= Mx && -My <= y && y <= My; }
  std::size_t index(long x, long y) const {
    return static_cast<std::size_t>((x + Mx) * (2 * My + 1) + (y + My));
  }
  // Total good-block size inside SUM^{-1}(s) after prefix T_prev; 0 off the grid.
  const Int& good(std::size_t Tprev, std::size_t s) const;
  // T_{p-1} range where some good block exists.
  std::size_t prev_lo() const;
  std::size_t prev_hi() const;

  // Term cover lists, built on demand: for each grid point the covering terms
  // in term order and the start of each term's block within the class.
  void build_cover() const;
  bool has_cover() const { return !cover_begin.empty(); }
  // (j, rank) of class element idx: j >= 1 for blocks, j = 0 for the residual.
  std::pair<std::size_t, Int> block_of(std::size_t Tprev, std::size_t s, const Int& idx) const;
  // Class index of the rank-th element of block j (j >= 1).
  Int block_start(std::size_t Tprev, std::size_t s, std::size_t j) const;

  mutable std::vector<std::uint32_t> cover_begin;  // size points + 1
  mutable std::vector<std::uint32_t> cover_term;   // 1-based term indices
  mutable std::vector<Int> cover_start;
};

struct Partition {
  PartitionConfig cfg;
  std::vector<PositionPartition> pos;  // pos[p - 1]
  double build_ms = 0;

  const PositionPartition& at(std::size_t p) const { return pos.at(p - 1); }
  nlohmann::json ledger() const;
};

// Builds and certifies the decompositions of every position, the dense weight
// tables and the feasibility check W <= cnt_child[s]. Strict mode throws
// CertificationError on infeasible points and on |K_0| > 2 sigma; relaxed mode
// zeroes infeasible points and records them.
Partition build_partition(const LevelCodec& child, const PartitionConfig& cfg);

struct ClassifiedSeq {
  enum class Mode { good, one_bad, lowprob };
  Mode mode = Mode::good;
  std::size_t i_star = 0;   // first break (1-based), 0 if none
  std::size_t i_star2 = 0;  // second break, counted from the start of the sequence
  std::vector<std::size_t> s;         // child sums
  std::vector<std::size_t> T;         // absolute prefix sums, T[0] = 0
  std::vector<std::size_t> j_vector;  // block index per position (0 = residual); needs covers
};

std::string to_string(ClassifiedSeq::Mode m);

// First break: smallest i with k_i in the residual after T_{i-1}. Second break:
// first residual hit of the suffix, read with the suffix's own relative positions
// and prefix sums (base T_{i*}).
ClassifiedSeq classify_sequence(const std::vector<Int>& ks, const LevelCodec& child,
                                const Partition& P);

struct PartitionAudit {
  bool pass = true;
  std::string failed;
  std::string witness;
  std::size_t classes_checked = 0;
  Int max_residual;  // over positions and T_{p-1}
  Int residual_bound;  // 2 sigma
  bool residual_ok = true;
  nlohmann::json to_json() const;
};

// Disjointness and coverage of the block intervals, conservation against the
// dense table and cnt, far-sum capture, and the residual size bound.
PartitionAudit audit_partition(const LevelCodec& child, const Partition& P);

}  // namespace srank
