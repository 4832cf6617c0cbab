#include "srank/partition.hpp"

#include <algorithm>
#include <chrono>

namespace srank {

namespace {

const Int& zero_int() {
  static const Int z = 0;
  return z;
}

std::size_t isqrt(const Int& v) {
  return boost::multiprecision::sqrt(v).convert_to<std::size_t>();
}

}  // namespace

PartitionConfig default_partition_config(const LevelCodec& child, const Params& p) {
  PartitionConfig c;
  c.l = child.len;
  c.B = p.B;
  c.w = p.w;
  c.strict = p.mode == Mode::strict;
  c.mode = p.terms;
  c.max_grid = p.caps.max_grid;
  Int floor_sigma = Int(p.n) * pow2(p.w / 2);
  c.sigma = std::max(child.K - pow2(p.w), floor_sigma);
  c.eps = p.epsilon ? *p.epsilon : Rat(c.sigma, pow2(p.w + 2));
  if (c.eps <= 0 || c.eps >= 1) throw ParameterError("partition: eps must lie in (0, 1)");
  // L = ceil(log2(1/eps))
  std::size_t L = 0;
  while (Rat(1) / Rat(pow2(L)) > c.eps) ++L;
  c.h = p.band ? *p.band : isqrt(Int(c.l) * Int(L));
  if (c.h > c.l / 2)
    throw ParameterError("partition: band half-width " + std::to_string(c.h) + " exceeds l/2 = " +
                         std::to_string(c.l / 2) + "; set band");
  c.rect.relaxed = !c.strict;
  c.rect.side = p.rect_side ? *p.rect_side : 1;
  c.rect.degree = p.degree;
  c.rect.window_scale = p.window_scale;
  return c;
}

const Int& PositionPartition::good(std::size_t Tprev, std::size_t s) const {
  long x = x_of(Tprev), y = y_of(Tprev + s);
  if (!in_grid(x, y)) return zero_int();
  return W[index(x, y)];
}

std::size_t PositionPartition::prev_lo() const { return (p - 1) * l / 2 - static_cast<std::size_t>(Mx); }
std::size_t PositionPartition::prev_hi() const { return (p - 1) * l / 2 + static_cast<std::size_t>(Mx); }

void PositionPartition::build_cover() const {
  if (has_cover()) return;
  const std::size_t npts = W.size();
  std::vector<std::vector<std::uint32_t>> lists(npts);
  std::vector<bool> dropped(npts, false);
  for (auto [x, y] : zeroed) dropped[index(x, y)] = true;
  for (std::size_t j = 0; j < terms.terms.size(); ++j) {
    const auto& t = terms.terms[j];
    if (t.weight == 0) continue;
    auto xs = t.X.elements(), ys = t.Y.elements();
    for (int x : xs)
      for (int y : ys)
        if (!dropped[index(x, y)]) lists[index(x, y)].push_back(static_cast<std::uint32_t>(j + 1));
  }
  cover_begin.assign(npts + 1, 0);
  cover_term.clear();
  cover_start.clear();
  for (std::size_t i = 0; i < npts; ++i) {
    cover_begin[i] = static_cast<std::uint32_t>(cover_term.size());
    Int acc = 0;
    for (auto j : lists[i]) {
      cover_term.push_back(j);
      cover_start.push_back(acc);
      acc += terms.terms[j - 1].weight;
    }
  }
  cover_begin[npts] = static_cast<std::uint32_t>(cover_term.size());
}

std::pair<std::size_t, Int> PositionPartition::block_of(std::size_t Tprev, std::size_t s,
                                                        const Int& idx) const {
  long x = x_of(Tprev), y = y_of(Tprev + s);
  if (!in_grid(x, y)) return {0, idx};
  std::size_t pt = index(x, y);
  if (idx >= W[pt]) return {0, idx - W[pt]};
  if (!has_cover()) throw ParameterError("block_of: cover lists not built");
  std::size_t lo = cover_begin[pt], hi = cover_begin[pt + 1];
  // last entry with start <= idx
  auto first = cover_start.begin() + static_cast<long>(lo);
  auto last = cover_start.begin() + static_cast<long>(hi);
  auto it = std::upper_bound(first, last, idx) - 1;
  std::size_t e = static_cast<std::size_t>(it - cover_start.begin());
  return {cover_term[e], idx - cover_start[e]};
}

Int PositionPartition::block_start(std::size_t Tprev, std::size_t s, std::size_t j) const {
  long x = x_of(Tprev), y = y_of(Tprev + s);
  if (!in_grid(x, y)) throw RangeError("block_start: point outside the grid");
  std::size_t pt = index(x, y);
  for (std::size_t e = cover_begin[pt]; e < cover_begin[pt + 1]; ++e)
    if (cover_term[e] == j) return cover_start[e];
  throw RangeError("block_start: term " + std::to_string(j) + " does not cover the point");
}

nlohmann::json Partition::ledger() const {
  nlohmann::json j;
  j["l"] = cfg.l;
  j["h"] = cfg.h;
  j["eps"] = rat_str(cfg.eps);
  j["sigma"] = cfg.sigma.str();
  j["side"] = cfg.rect.side ? *cfg.rect.side : 0;
  for (const auto& P : pos) {
    nlohmann::json e;
    e["p"] = P.p;
    e["Mx"] = P.Mx;
    e["My"] = P.My;
    e["r"] = P.terms.r();
    e["r_rect"] = P.terms.r_rect;
    e["zeroed_points"] = P.zeroed.size();
    e["max_residual"] = P.max_residual.str();
    e["min_residual"] = P.min_residual.str();
    j["positions"].push_back(e);
  }
  return j;
}

Partition build_partition(const LevelCodec& child, const PartitionConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Partition P;
  P.cfg = cfg;
  const std::size_t l = cfg.l;
  if (child.len != l) throw ParameterError("build_partition: child length mismatch");
  for (std::size_t p = 1; p <= cfg.B; ++p) {
    PositionPartition pp;
    pp.p = p;
    pp.l = l;
    pp.Mx = static_cast<int>((p - 1) * cfg.h);
    pp.My = static_cast<int>(p * cfg.h);
    std::uint64_t pts = std::uint64_t(2 * pp.Mx + 1) * std::uint64_t(2 * pp.My + 1);
    if (pts > cfg.max_grid)
      throw ConfigError("caps.max_grid exceeded: position " + std::to_string(p) + " needs " +
                        std::to_string(pts) + " grid points");
    auto rd = rect_decompose(l, pp.Mx, pp.My, cfg.eps, cfg.rect, true);
    pp.terms = integer_terms(rd, cfg.w, cfg.mode, true);
    pp.W.assign(pts, Int(0));
    for (const auto& t : pp.terms.terms) {
      if (t.weight == 0) continue;
      auto ys = t.Y.elements();
      for (int x : t.X.elements())
        for (int y : ys) pp.W[pp.index(x, y)] += t.weight;
    }
    // Feasibility: W(x, y) <= cnt_child[s].
    for (int x = -pp.Mx; x <= pp.Mx; ++x)
      for (int y = -pp.My; y <= pp.My; ++y) {
        Int& v = pp.W[pp.index(x, y)];
        if (v == 0) continue;
        long s = static_cast<long>(l / 2) + x + y;
        bool ok = s >= 0 && s <= static_cast<long>(l) && v <= child.cnt[static_cast<std::size_t>(s)];
        if (ok) continue;
        if (cfg.strict)
          throw CertificationError("partition Claim feasibility: sum_j weights " + v.str() +
                                   " > cnt_child[" + std::to_string(s) + "] at position " +
                                   std::to_string(p) + ", x=" + std::to_string(x) +
                                   ", y=" + std::to_string(y));
        pp.zeroed.emplace_back(x, y);
        v = 0;
      }
    // Residual sizes per feasible prefix sum.
    for (int x = -pp.Mx; x <= pp.Mx; ++x) {
      Int covered = 0;
      for (int y = -pp.My; y <= pp.My; ++y) covered += pp.W[pp.index(x, y)];
      Int res = child.K - covered;
      if (x == -pp.Mx || res > pp.max_residual) pp.max_residual = res;
      if (x == -pp.Mx || res < pp.min_residual) pp.min_residual = res;
    }
    if (cfg.strict && pp.max_residual > 2 * cfg.sigma)
      throw CertificationError("partition Claim residual: |K_0| = " + pp.max_residual.str() +
                               " > 2 sigma = " + Int(2 * cfg.sigma).str() + " at position " +
                               std::to_string(p));
    P.pos.push_back(std::move(pp));
  }
  P.build_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return P;
}

std::string to_string(ClassifiedSeq::Mode m) {
  switch (m) {
    case ClassifiedSeq::Mode::good: return "good";
    case ClassifiedSeq::Mode::one_bad: return "one_bad";
    case ClassifiedSeq::Mode::lowprob: return "lowprob";
  }
  return "?";
}

ClassifiedSeq classify_sequence(const std::vector<Int>& ks, const LevelCodec& child,
                                const Partition& P) {
  const std::size_t B = ks.size();
  if (B != P.pos.size()) throw ParameterError("classify_sequence: arity mismatch");
  ClassifiedSeq c;
  c.T.assign(B + 1, 0);
  c.s.resize(B);
  c.j_vector.assign(B, 0);
  for (std::size_t i = 1; i <= B; ++i) {
    c.s[i - 1] = child.sum_of(ks[i - 1]);
    c.T[i] = c.T[i - 1] + c.s[i - 1];
  }
  std::size_t base = 0;  // position offset of the current good run
  for (std::size_t i = 1; i <= B; ++i) {
    const auto& pp = P.at(i - base);
    std::size_t Tprev = c.T[i - 1] - c.T[base];
    std::size_t s = c.s[i - 1];
    Int idx = ks[i - 1] - child.off[s];
    bool in_block = idx < pp.good(Tprev, s);
    if (in_block && pp.has_cover()) c.j_vector[i - 1] = pp.block_of(Tprev, s, idx).first;
    if (in_block) continue;
    if (c.i_star == 0) {
      c.i_star = i;
      c.mode = ClassifiedSeq::Mode::one_bad;
      base = i;
    } else {
      c.i_star2 = i;
      c.mode = ClassifiedSeq::Mode::lowprob;
      break;
    }
  }
  if (c.mode == ClassifiedSeq::Mode::lowprob)
    for (std::size_t i = c.i_star2 + 1; i <= B; ++i) c.j_vector[i - 1] = 0;
  return c;
}

nlohmann::json PartitionAudit::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  j["classes_checked"] = classes_checked;
  j["max_residual"] = max_residual.str();
  j["residual_bound"] = residual_bound.str();
  j["residual_ok"] = residual_ok;
  if (!pass) {
    j["failed"] = failed;
    j["witness"] = witness;
  }
  return j;
}

PartitionAudit audit_partition(const LevelCodec& child, const Partition& P) {
  PartitionAudit a;
  a.residual_bound = 2 * P.cfg.sigma;
  auto fail = [&](const std::string& name, std::size_t p, std::size_t Tprev, std::size_t s) {
    if (!a.pass) return;
    a.pass = false;
    a.failed = name;
    a.witness = "p=" + std::to_string(p) + " T_prev=" + std::to_string(Tprev) +
                " s=" + std::to_string(s);
  };
  const long l = static_cast<long>(P.cfg.l);
  bool first = true;
  for (auto& pp : P.pos) {
    pp.build_cover();
    const long center = static_cast<long>(pp.p) * l / 2;
    for (std::size_t Tprev = pp.prev_lo(); Tprev <= pp.prev_hi(); ++Tprev) {
      Int covered = 0;
      const long tp = static_cast<long>(Tprev);
      // Sums off the grid rows carry no block; the lookup must put them in K_0.
      for (long s : {center - pp.My - 1 - tp, center + pp.My + 1 - tp})
        if (s >= 0 && s <= l) {
          auto b = pp.block_of(Tprev, static_cast<std::size_t>(s), Int(0));
          if (b.first != 0 || pp.good(Tprev, static_cast<std::size_t>(s)) != 0)
            fail("far-sum capture", pp.p, Tprev, static_cast<std::size_t>(s));
        }
      const long s_lo = std::max(0L, center - pp.My - tp), s_hi = std::min(l, center + pp.My - tp);
      for (long sl = s_lo; sl <= s_hi; ++sl) {
        const auto s = static_cast<std::size_t>(sl);
        ++a.classes_checked;
        const Int& cs = child.cnt[s];
        long x = pp.x_of(Tprev), y = pp.y_of(Tprev + s);
        std::size_t pt = pp.index(x, y);
        // Route 1: dense table. Route 2: walk the cover intervals.
        Int end = 0;
        for (std::size_t e = pp.cover_begin[pt]; e < pp.cover_begin[pt + 1]; ++e) {
          if (pp.cover_start[e] != end) fail("blocks disjoint and contiguous", pp.p, Tprev, s);
          const auto& t = pp.terms.terms[pp.cover_term[e] - 1];
          if (!(t.X.contains(static_cast<int>(x)) && t.Y.contains(static_cast<int>(y))))
            fail("block size = weight 1_X 1_Y", pp.p, Tprev, s);
          end += t.weight;
        }
        if (end != pp.W[pt]) fail("dense table = sum of block sizes", pp.p, Tprev, s);
        if (end > cs) fail("blocks within SUM^-1(s)", pp.p, Tprev, s);
        // Lookup at both ends of every block, then the residual tail [end, cnt[s]).
        for (std::size_t e = pp.cover_begin[pt]; e < pp.cover_begin[pt + 1]; ++e) {
          const auto& t = pp.terms.terms[pp.cover_term[e] - 1];
          Int lo = pp.cover_start[e], hi = lo + t.weight - 1;
          auto b1 = pp.block_of(Tprev, s, lo), b2 = pp.block_of(Tprev, s, hi);
          if (b1.first != pp.cover_term[e] || b1.second != 0 || b2.first != pp.cover_term[e] ||
              b2.second != t.weight - 1)
            fail("block lookup inverts block start", pp.p, Tprev, s);
        }
        if (cs > end) {
          auto b = pp.block_of(Tprev, s, end);
          if (b.first != 0 || b.second != 0) fail("residual is the class tail", pp.p, Tprev, s);
        }
        covered += end;
      }
      Int res = child.K - covered;
      if (first || res > a.max_residual) a.max_residual = res;
      first = false;
    }
  }
  a.residual_ok = a.max_residual <= a.residual_bound;
  return a;
}

}  // namespace srank
