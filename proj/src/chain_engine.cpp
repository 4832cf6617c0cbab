// Enumeration engine. Child tuples are split into regions (one per mode and
// break pattern); a region is a concatenation of segments, each a run of
// positions counted by one rule:
//   any(L)            every child value allowed
//   good(L)           every position inside a good block
//   good_then_bad(L)  L-1 good positions, then one residual hit
// Segments use their own relative positions and prefix sums. A tuple's rank
// inside (region, S) orders segments by (total, in-segment rank), lexicographic
// over segments. For each S the regions get ceil(count / 2^m) spillover values
// in region order; spill = start + (rank >> m), memory = rank mod 2^m.

#include "engines.hpp"

#include <algorithm>
#include <map>

namespace srank {

namespace {

using detail::at_or_zero;

enum class Kind { any, good, good_then_bad };

struct Seg {
  Kind kind;
  std::size_t L;
};

struct Region {
  std::string mode;
  std::size_t i1 = 0, i2 = 0;
  std::vector<Seg> segs;
  std::vector<std::vector<Int>> rest;  // rest[j]: count of segments j.. by total; rest[q] = delta_0
};

struct Hit {
  std::size_t Tprev = 0, Tcur = 0;
  Int k;
};

struct Chain {
  std::size_t L = 0;
  long dlo = 0, dhi = -1;
  std::vector<long> ulo;  // per p in [1, L-1]: lowest U
  std::vector<std::vector<std::vector<Int>>> N;  // N[p][U - ulo[p]][d - dlo], p in [1, L-1]
  std::vector<Int> count;                        // by total d over [0, L l]
};

class EnumCombiner final : public Combiner {
 public:
  EnumCombiner(CodecPtr child, const Params& p, bool small, std::shared_ptr<const Partition> part);

  EncodedTuple encode(const std::vector<Int>& ks) const override;
  std::size_t prefix_sum(const BitSource& mem, const Int& spill, std::size_t i,
                         ProbeMeter& meter) const override;
  Int child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                  ProbeMeter& meter) const override;
  std::pair<std::size_t, Int> descend(const BitSource& mem, const Int& spill, std::size_t i,
                                      ProbeMeter& meter) const override;
  nlohmann::json ledger() const override;

 private:
  // Kernels at relative position p.
  const Int& W(std::size_t p, std::size_t U, std::size_t s) const {
    return partition_->at(p).good(U, s);
  }
  Int bad(std::size_t p, std::size_t U, std::size_t s) const {
    return child_->cnt[s] - W(p, U, s);
  }
  // Band of T_p (relative); position p+1's prefix band.
  long cur_lo(std::size_t p) const { return static_cast<long>(p * (l_ / 2)) - static_cast<long>(p * h_); }
  long cur_hi(std::size_t p) const { return static_cast<long>(p * (l_ / 2)) + static_cast<long>(p * h_); }
  // N_p(U -> d) of chain L (p in [1, L+1]).
  Int Nval(const Chain& c, std::size_t p, long U, long d) const;

  void build_any();
  void build_chain(std::size_t L);
  void build_gtb(std::size_t L);
  void build_regions();
  const std::vector<Int>& seg_count(const Seg& s) const;
  std::pair<long, long> seg_range(const Seg& s) const;

  // Encoding side: rank of positions [a, a + L) with total d.
  Int rank_seg(const Seg& sg, const std::vector<std::size_t>& s, const std::vector<Int>& idx,
               std::size_t a) const;
  Int rank_chain(std::size_t L, const std::vector<std::size_t>& s, const std::vector<Int>& idx,
                 std::size_t a, long d) const;
  // Decoding side: position t (1-based, relative) of a segment with total d, rank r.
  Hit unrank_seg(const Seg& sg, long d, Int r, std::size_t t) const;
  Hit unrank_chain(std::size_t L, long d, Int r, std::size_t t) const;

  std::size_t region_of(const std::vector<Int>& ks, std::vector<std::size_t>& s,
                        std::vector<Int>& idx) const;
  std::size_t entry_of(const Int& spill) const;
  Hit walk(const BitSource& mem, const Int& spill, std::size_t i, ProbeMeter& meter) const;

  std::size_t h_ = 0;
  Mode mode_;
  std::vector<std::vector<Int>> any_;  // any_[j] = cnt_child^{*j}
  std::vector<Chain> gc_;              // gc_[L], L in [0, B]
  std::vector<std::vector<Int>> gtb_;  // gtb_[L], L in [1, B]
  std::vector<Region> regions_;
  std::map<std::tuple<int, std::size_t, std::size_t>, std::size_t> region_index_;
  // Layout entries in spillover order (S-major, then region).
  std::vector<Int> start_, size_;
  std::vector<std::uint32_t> eS_, eR_;
};

EnumCombiner::EnumCombiner(CodecPtr child, const Params& p, bool small,
                           std::shared_ptr<const Partition> part)
    : Combiner(std::move(child), p.B, Engine::enumeration, small, std::move(part)), mode_(p.mode) {
  build_any();
  if (!small_) {
    if (!partition_) throw ParameterError("enumeration engine: large path needs a partition");
    h_ = partition_->cfg.h;
    gc_.resize(B_ + 1);
    gc_[0].count = {Int(1)};
    for (std::size_t L = 1; L <= B_; ++L) build_chain(L);
    gtb_.resize(B_ + 1);
    for (std::size_t L = 1; L <= B_; ++L) build_gtb(L);
  }
  build_regions();
}

void EnumCombiner::build_any() {
  const std::size_t upto = small_ ? B_ : B_ - 1;
  any_.assign(upto + 1, {});
  any_[0] = {Int(1)};
  for (std::size_t j = 1; j <= upto; ++j)
    any_[j] = detail::convolve(any_[j - 1], child_->cnt, j * l_ + 1);
}

Int EnumCombiner::Nval(const Chain& c, std::size_t p, long U, long d) const {
  if (p == c.L + 1) return U == d ? Int(1) : Int(0);
  if (p == c.L) {
    if (d < U || d - U > static_cast<long>(l_)) return 0;
    return W(p, static_cast<std::size_t>(U), static_cast<std::size_t>(d - U));
  }
  if (d < c.dlo || d > c.dhi) return 0;
  const auto& tab = c.N[p];
  long u = U - c.ulo[p];
  if (u < 0 || u >= static_cast<long>(tab.size())) return 0;
  return tab[static_cast<std::size_t>(u)][static_cast<std::size_t>(d - c.dlo)];
}

void EnumCombiner::build_chain(std::size_t L) {
  Chain c;
  c.L = L;
  c.dlo = std::max(0L, cur_lo(L));
  c.dhi = std::min(static_cast<long>(L * l_), cur_hi(L));
  c.N.resize(L);
  c.ulo.assign(L, 0);
  for (std::size_t p = L - 1; p >= 1; --p) {
    long ulo = std::max(0L, cur_lo(p - 1)), uhi = cur_hi(p - 1);
    long tlo = std::max(0L, cur_lo(p)), thi = cur_hi(p);
    c.ulo[p] = ulo;
    auto& tab = c.N[p];
    tab.assign(static_cast<std::size_t>(uhi - ulo + 1),
               std::vector<Int>(static_cast<std::size_t>(c.dhi - c.dlo + 1), Int(0)));
    for (long U = ulo; U <= uhi; ++U)
      for (long T = std::max(tlo, U); T <= std::min(thi, U + static_cast<long>(l_)); ++T) {
        const Int& wt = W(p, static_cast<std::size_t>(U), static_cast<std::size_t>(T - U));
        if (wt == 0) continue;
        auto& row = tab[static_cast<std::size_t>(U - ulo)];
        for (long d = c.dlo; d <= c.dhi; ++d) {
          Int nx = Nval(c, p + 1, T, d);
          if (nx != 0) row[static_cast<std::size_t>(d - c.dlo)] += wt * nx;
        }
      }
  }
  c.count.assign(L * l_ + 1, Int(0));
  for (long d = c.dlo; d <= c.dhi; ++d) c.count[static_cast<std::size_t>(d)] = Nval(c, 1, 0, d);
  gc_[L] = std::move(c);
}

void EnumCombiner::build_gtb(std::size_t L) {
  std::vector<Int> out(L * l_ + 1, Int(0));
  const auto& pre = gc_[L - 1].count;
  for (std::size_t T = 0; T < pre.size(); ++T) {
    if (pre[T] == 0) continue;
    for (std::size_t s = 0; s <= l_; ++s) {
      Int b = bad(L, T, s);
      if (b != 0) out[T + s] += pre[T] * b;
    }
  }
  gtb_[L] = std::move(out);
}

const std::vector<Int>& EnumCombiner::seg_count(const Seg& s) const {
  switch (s.kind) {
    case Kind::any: return any_[s.L];
    case Kind::good: return gc_[s.L].count;
    case Kind::good_then_bad: return gtb_[s.L];
  }
  throw std::logic_error("seg_count");
}

std::pair<long, long> EnumCombiner::seg_range(const Seg& s) const {
  if (s.kind == Kind::good) return {gc_[s.L].dlo, gc_[s.L].dhi};
  return {0, static_cast<long>(s.L * l_)};
}

void EnumCombiner::build_regions() {
  auto add = [&](std::string mode, std::size_t i1, std::size_t i2, std::vector<Seg> segs) {
    Region r;
    r.mode = std::move(mode);
    r.i1 = i1;
    r.i2 = i2;
    for (auto& s : segs)
      if (s.L > 0) r.segs.push_back(s);
    const std::size_t lim = B_ * l_ + 1;
    r.rest.assign(r.segs.size() + 1, {});
    r.rest.back() = {Int(1)};
    for (std::size_t j = r.segs.size(); j-- > 0;)
      r.rest[j] = detail::convolve(seg_count(r.segs[j]), r.rest[j + 1], lim);
    int key = r.mode == "good" ? 1 : r.mode == "one_bad" ? 2 : r.mode == "lowprob" ? 3 : 0;
    region_index_[{key, i1, i2}] = regions_.size();
    regions_.push_back(std::move(r));
  };
  if (small_) {
    add("small", 0, 0, {{Kind::any, B_}});
  } else {
    add("good", 0, 0, {{Kind::good, B_}});
    for (std::size_t i = 1; i <= B_; ++i)
      add("one_bad", i, 0, {{Kind::good_then_bad, i}, {Kind::good, B_ - i}});
    for (std::size_t i1 = 1; i1 <= B_; ++i1)
      for (std::size_t i2 = i1 + 1; i2 <= B_; ++i2)
        add("lowprob", i1, i2,
            {{Kind::good_then_bad, i1}, {Kind::good_then_bad, i2 - i1}, {Kind::any, B_ - i2}});
  }
  std::vector<Int> per_sum(B_ * l_ + 1, Int(0));
  Int pos = 0;
  const Int unit = pow2(m_);
  for (std::size_t S = 0; S <= B_ * l_; ++S)
    for (std::size_t r = 0; r < regions_.size(); ++r) {
      const Int& c = at_or_zero(regions_[r].rest[0], static_cast<long>(S));
      if (c == 0) continue;
      Int k = ceil_div(c, unit);
      start_.push_back(pos);
      size_.push_back(k);
      eS_.push_back(static_cast<std::uint32_t>(S));
      eR_.push_back(static_cast<std::uint32_t>(r));
      pos += k;
      per_sum[S] += k;
    }
  set_layout(std::move(per_sum));
}

Int EnumCombiner::rank_chain(std::size_t L, const std::vector<std::size_t>& s,
                             const std::vector<Int>& idx, std::size_t a, long d) const {
  const Chain& c = gc_[L];
  Int r = 0;
  long U = 0;
  for (std::size_t p = 1; p <= L; ++p) {
    long sp = static_cast<long>(s[a + p - 1]);
    long tlo = std::max({0L, cur_lo(p), U});
    for (long T = tlo; T < U + sp; ++T) {
      const Int& wt = W(p, static_cast<std::size_t>(U), static_cast<std::size_t>(T - U));
      if (wt != 0) r += wt * Nval(c, p + 1, T, d);
    }
    r += idx[a + p - 1] * Nval(c, p + 1, U + sp, d);
    U += sp;
  }
  return r;
}

Int EnumCombiner::rank_seg(const Seg& sg, const std::vector<std::size_t>& s,
                           const std::vector<Int>& idx, std::size_t a) const {
  long d = 0;
  for (std::size_t p = 0; p < sg.L; ++p) d += static_cast<long>(s[a + p]);
  switch (sg.kind) {
    case Kind::any: {
      Int r = 0;
      long U = 0;
      for (std::size_t p = 1; p <= sg.L; ++p) {
        const auto& A = any_[sg.L - p];
        long rem = d - U, sp = static_cast<long>(s[a + p - 1]);
        for (long x = 0; x < sp; ++x) {
          const Int& t = at_or_zero(A, rem - x);
          if (t != 0) r += child_->cnt[static_cast<std::size_t>(x)] * t;
        }
        r += idx[a + p - 1] * at_or_zero(A, rem - sp);
        U += sp;
      }
      return r;
    }
    case Kind::good:
      return rank_chain(sg.L, s, idx, a, d);
    case Kind::good_then_bad: {
      const std::size_t L = sg.L;
      const auto& pre = gc_[L - 1].count;
      long T = d - static_cast<long>(s[a + L - 1]);
      Int r = 0;
      for (long Tp = 0; Tp < T; ++Tp) {
        const Int& c = at_or_zero(pre, Tp);
        if (c == 0 || d - Tp > static_cast<long>(l_)) continue;
        Int b = bad(L, static_cast<std::size_t>(Tp), static_cast<std::size_t>(d - Tp));
        if (b != 0) r += c * b;
      }
      Int rc = L > 1 ? rank_chain(L - 1, s, idx, a, T) : Int(0);
      r += rc * bad(L, static_cast<std::size_t>(T), s[a + L - 1]);
      return r + idx[a + L - 1];
    }
  }
  throw std::logic_error("rank_seg");
}

Hit EnumCombiner::unrank_chain(std::size_t L, long d, Int r, std::size_t t) const {
  const Chain& c = gc_[L];
  long U = 0;
  for (std::size_t p = 1; p <= L; ++p) {
    long tlo = std::max({0L, cur_lo(p), U});
    long thi = std::min(cur_hi(p), U + static_cast<long>(l_));
    bool found = false;
    for (long T = tlo; T <= thi; ++T) {
      const Int& wt = W(p, static_cast<std::size_t>(U), static_cast<std::size_t>(T - U));
      if (wt == 0) continue;
      Int nx = Nval(c, p + 1, T, d);
      if (nx == 0) continue;
      Int blk = wt * nx;
      if (r >= blk) {
        r -= blk;
        continue;
      }
      Int q = r / nx;
      r -= q * nx;
      if (p == t) {
        auto s = static_cast<std::size_t>(T - U);
        return {static_cast<std::size_t>(U), static_cast<std::size_t>(T), child_->off[s] + q};
      }
      U = T;
      found = true;
      break;
    }
    if (!found) throw IntegrityError("enumeration engine: good-chain rank out of range");
  }
  throw IntegrityError("enumeration engine: good-chain position out of range");
}

Hit EnumCombiner::unrank_seg(const Seg& sg, long d, Int r, std::size_t t) const {
  switch (sg.kind) {
    case Kind::any: {
      long U = 0;
      for (std::size_t p = 1; p <= sg.L; ++p) {
        const auto& A = any_[sg.L - p];
        long rem = d - U;
        long xlo = std::max(0L, rem - static_cast<long>((sg.L - p) * l_));
        long xhi = std::min(static_cast<long>(l_), rem);
        long x = xlo;
        for (; x <= xhi; ++x) {
          const Int& comp = at_or_zero(A, rem - x);
          if (comp == 0) continue;
          Int blk = child_->cnt[static_cast<std::size_t>(x)] * comp;
          if (r < blk) break;
          r -= blk;
        }
        if (x > xhi) throw IntegrityError("enumeration engine: rank out of range");
        const Int& comp = at_or_zero(A, rem - x);
        Int q = r / comp;
        r -= q * comp;
        auto s = static_cast<std::size_t>(x);
        if (p == t)
          return {static_cast<std::size_t>(U), static_cast<std::size_t>(U + x), child_->off[s] + q};
        U += x;
      }
      break;
    }
    case Kind::good:
      return unrank_chain(sg.L, d, std::move(r), t);
    case Kind::good_then_bad: {
      const std::size_t L = sg.L;
      const auto& pre = gc_[L - 1].count;
      long T = std::max(0L, d - static_cast<long>(l_));
      Int b;
      for (; T <= std::min(d, static_cast<long>(pre.size()) - 1); ++T) {
        const Int& c = at_or_zero(pre, T);
        if (c == 0) continue;
        b = bad(L, static_cast<std::size_t>(T), static_cast<std::size_t>(d - T));
        if (b == 0) continue;
        Int blk = c * b;
        if (r < blk) break;
        r -= blk;
      }
      if (T > std::min(d, static_cast<long>(pre.size()) - 1))
        throw IntegrityError("enumeration engine: rank out of range");
      Int rc = r / b;
      Int ib = r - rc * b;
      if (t < L) return unrank_chain(L - 1, T, std::move(rc), t);
      auto s = static_cast<std::size_t>(d - T);
      return {static_cast<std::size_t>(T), static_cast<std::size_t>(d),
              child_->off[s] + W(L, static_cast<std::size_t>(T), s) + ib};
    }
  }
  throw IntegrityError("enumeration engine: position out of range");
}

std::size_t EnumCombiner::region_of(const std::vector<Int>& ks, std::vector<std::size_t>& s,
                                    std::vector<Int>& idx) const {
  s.resize(B_);
  idx.resize(B_);
  if (small_) {
    for (std::size_t i = 0; i < B_; ++i) {
      s[i] = child_->sum_of(ks[i]);
      idx[i] = ks[i] - child_->off[s[i]];
    }
    return 0;
  }
  auto cs = classify_sequence(ks, *child_, *partition_);
  for (std::size_t i = 0; i < B_; ++i) {
    s[i] = cs.s[i];
    idx[i] = ks[i] - child_->off[s[i]];
  }
  // The bad element is indexed past the good blocks of its class.
  auto shift_bad = [&](std::size_t i, std::size_t base) {
    idx[i - 1] -= partition_->at(i - base).good(cs.T[i - 1] - cs.T[base], s[i - 1]);
  };
  switch (cs.mode) {
    case ClassifiedSeq::Mode::good:
      return region_index_.at({1, 0, 0});
    case ClassifiedSeq::Mode::one_bad:
      shift_bad(cs.i_star, 0);
      return region_index_.at({2, cs.i_star, 0});
    case ClassifiedSeq::Mode::lowprob:
      shift_bad(cs.i_star, 0);
      shift_bad(cs.i_star2, cs.i_star);
      return region_index_.at({3, cs.i_star, cs.i_star2});
  }
  throw std::logic_error("region_of");
}

EncodedTuple EnumCombiner::encode(const std::vector<Int>& ks) const {
  check_arity(ks);
  std::vector<std::size_t> s;
  std::vector<Int> idx;
  std::size_t r = region_of(ks, s, idx);
  const Region& R = regions_[r];
  std::size_t S = 0;
  for (auto x : s) S += x;
  Int rank = 0;
  long rem = static_cast<long>(S);
  std::size_t a = 0;
  for (std::size_t j = 0; j < R.segs.size(); ++j) {
    const Seg& sg = R.segs[j];
    const auto& cj = seg_count(sg);
    const auto& nxt = R.rest[j + 1];
    long d = 0;
    for (std::size_t p = 0; p < sg.L; ++p) d += static_cast<long>(s[a + p]);
    auto [lo, hi] = seg_range(sg);
    for (long x = lo; x < d && x <= hi; ++x) {
      const Int& c = at_or_zero(cj, x);
      if (c == 0) continue;
      const Int& t = at_or_zero(nxt, rem - x);
      if (t != 0) rank += c * t;
    }
    rank += rank_seg(sg, s, idx, a) * at_or_zero(nxt, rem - d);
    rem -= d;
    a += sg.L;
  }
  // Locate the layout entry of (S, r).
  std::size_t e = 0;
  {
    auto lo = std::lower_bound(eS_.begin(), eS_.end(), static_cast<std::uint32_t>(S));
    e = static_cast<std::size_t>(lo - eS_.begin());
    while (e < eS_.size() && eS_[e] == S && eR_[e] != r) ++e;
    if (e == eS_.size() || eS_[e] != S) throw EncodingError("enumeration engine: empty region");
  }
  EncodedTuple out;
  out.spill = start_[e] + (rank >> m_);
  out.memory_bits = rank & (pow2(m_) - 1);
  return out;
}

std::size_t EnumCombiner::entry_of(const Int& spill) const {
  if (spill < 0 || spill >= K_) throw IntegrityError("enumeration engine: spillover out of range");
  auto it = std::upper_bound(start_.begin(), start_.end(), spill);
  return static_cast<std::size_t>(it - start_.begin()) - 1;
}

Hit EnumCombiner::walk(const BitSource& mem, const Int& spill, std::size_t i,
                       ProbeMeter& meter) const {
  ++meter.spill_reads;
  std::size_t e = entry_of(spill);
  const Region& R = regions_[eR_[e]];
  Int rank = ((spill - start_[e]) << m_) + mem.read(0, m_, meter);
  const std::size_t S = eS_[e];
  if (rank >= R.rest[0][S]) throw IntegrityError("enumeration engine: rank beyond region size");
  long rem = static_cast<long>(S);
  std::size_t a = 0, Tbase = 0;
  for (std::size_t j = 0; j < R.segs.size(); ++j) {
    const Seg& sg = R.segs[j];
    const auto& cj = seg_count(sg);
    const auto& nxt = R.rest[j + 1];
    auto [lo, hi] = seg_range(sg);
    long d = lo;
    for (; d <= hi; ++d) {
      const Int& c = at_or_zero(cj, d);
      if (c == 0) continue;
      const Int& t = at_or_zero(nxt, rem - d);
      if (t == 0) continue;
      Int blk = c * t;
      if (rank < blk) break;
      rank -= blk;
    }
    if (d > hi) throw IntegrityError("enumeration engine: segment total out of range");
    const Int& t = at_or_zero(nxt, rem - d);
    Int rj = rank / t;
    rank -= rj * t;
    if (i <= a + sg.L) {
      Hit h = unrank_seg(sg, d, std::move(rj), i - a);
      h.Tprev += Tbase;
      h.Tcur += Tbase;
      return h;
    }
    a += sg.L;
    Tbase += static_cast<std::size_t>(d);
    rem -= d;
  }
  throw IntegrityError("enumeration engine: position beyond the region");
}

std::size_t EnumCombiner::prefix_sum(const BitSource& mem, const Int& spill, std::size_t i,
                                     ProbeMeter& meter) const {
  if (i > B_) throw RangeError("prefix_sum: i > B");
  if (i == 0) return 0;
  if (i == B_) {
    ++meter.spill_reads;
    return total_sum(spill);
  }
  return walk(mem, spill, i, meter).Tcur;
}

Int EnumCombiner::child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                              ProbeMeter& meter) const {
  if (i < 1 || i > B_) throw RangeError("child_spill: i outside [1, B]");
  return walk(mem, spill, i, meter).k;
}

std::pair<std::size_t, Int> EnumCombiner::descend(const BitSource& mem, const Int& spill,
                                                  std::size_t i, ProbeMeter& meter) const {
  if (i < 1 || i > B_) throw RangeError("descend: i outside [1, B]");
  Hit h = walk(mem, spill, i, meter);
  return {h.Tprev, std::move(h.k)};
}

nlohmann::json EnumCombiner::ledger() const {
  auto j = base_ledger();
  std::map<std::string, Int> K_mode, count_mode;
  for (std::size_t e = 0; e < start_.size(); ++e) {
    const Region& R = regions_[eR_[e]];
    K_mode[R.mode] += size_[e];
    count_mode[R.mode] += R.rest[0][eS_[e]];
  }
  for (auto& [mname, v] : K_mode) j["K_" + mname] = v.str();
  for (auto& [mname, v] : count_mode) j["count_" + mname] = v.str();
  j["regions"] = regions_.size();
  j["layout_entries"] = start_.size();
  return j;
}

}  // namespace

CombinerPtr make_enum_combiner(CodecPtr child, const Params& p, bool small,
                               std::shared_ptr<const Partition> part) {
  return std::make_shared<EnumCombiner>(std::move(child), p, small, std::move(part));
}

}  // namespace srank
