// Probe engine, large path. One region per (mode, break positions, j-vector
// of the good positions); each region is a keyed mixed-radix plan whose
// elements are, position by position:
//   good  prefix sum index (relative to its run, within the allowed set) and
//         rank inside the term's block
//   bad   rank inside the residual K_0 after the relative prefix sum
//   free  one low-probability field (plus one header element for the run)
// and whose key is T_B: its index in Y_{B, j_B} for good regions, T_B itself
// otherwise. Spillovers are relabelled so that each T_B owns one interval:
// inside it, regions appear in order, each with key_stride values.

#include "engines.hpp"
#include "srank/lowprob.hpp"

#include <algorithm>
#include <map>

namespace srank {

namespace {

enum class PKind { good, bad, free };

struct PosDesc {
  PKind kind = PKind::good;
  std::size_t base = 0;  // absolute position whose prefix sum anchors the run
  std::size_t rel = 0;   // position inside the run, 1-based
  std::size_t j = 0;     // good: term index (1-based) at partition position rel
  int t_elem = -1;       // good: element indexing tvals; -1 when the prefix sum is T_B
  std::vector<long> tvals;
  int r_elem = -1;
  std::size_t q = 0;     // free: index inside the run
};

struct PRegion {
  int mode = 1;  // 1 good, 2 one_bad, 3 lowprob
  std::size_t i1 = 0, i2 = 0;
  std::vector<std::size_t> jv;
  std::vector<PosDesc> pos;
  std::vector<Int> domains;
  std::vector<long> keyvals;  // good: allowed T_B; empty: key = T_B
  int header_elem = -1;
  RadixPlan plan;
  std::vector<std::uint32_t> entry;  // key index -> layout entry
};

using JVec = std::vector<std::size_t>;

class LargeProbeCombiner final : public Combiner {
 public:
  LargeProbeCombiner(CodecPtr child, const Params& p, std::shared_ptr<const Partition> part);

  EncodedTuple encode(const std::vector<Int>& ks) const override;
  std::size_t prefix_sum(const BitSource& mem, const Int& spill, std::size_t i,
                         ProbeMeter& meter) const override;
  Int child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                  ProbeMeter& meter) const override;
  std::pair<std::size_t, Int> descend(const BitSource& mem, const Int& spill, std::size_t i,
                                      ProbeMeter& meter) const override;
  nlohmann::json ledger() const override;

 private:
  struct Ctx {
    const PRegion* R;
    const BitSource* mem;
    Int local;
    ProbeMeter* meter;
    long TB;
    std::map<int, Int> cache;
  };

  const PositionPartition& pp(std::size_t rel) const { return partition_->at(rel); }
  // Term sets in y coordinates, sorted.
  const std::vector<int>& Yset(std::size_t p, std::size_t j) const { return ys_[p][j - 1]; }
  std::vector<int> Dset(std::size_t p, std::size_t j, std::size_t jn) const;
  std::vector<JVec> run_jvecs(std::size_t L) const;

  void add_good_run(PRegion& R, std::size_t base, const JVec& jv, bool last_is_key) const;
  void add_bad(PRegion& R, std::size_t i, std::size_t base) const;
  void finish_region(PRegion R);
  void build_layout();

  // Residual K_0 after relative prefix T at relative position p, ordered by value.
  Int residual_size(std::size_t p, std::size_t T) const;
  Int residual_rank(std::size_t p, std::size_t T, const Int& k) const;
  Int residual_value(std::size_t p, std::size_t T, Int rho) const;

  Int elem(Ctx& c, int e) const;
  long T_at(Ctx& c, std::size_t i) const;
  Int k_at(Ctx& c, std::size_t i) const;
  LowProbReader reader(Ctx& c) const;
  Ctx open(const BitSource& mem, const Int& spill, ProbeMeter& meter) const;

  Mode mode_;
  std::vector<std::vector<std::vector<int>>> ys_, xs_;  // [p][j-1]
  std::vector<std::size_t> r_;                         // terms per position
  std::vector<Int> Rmax_;                              // residual domain per position
  LowProbLayout low_;
  std::vector<PRegion> regions_;
  std::map<JVec, std::size_t> index_;  // (mode, i1, i2, j...) -> region
  std::vector<Int> estart_;
  std::vector<std::uint32_t> eregion_, ekey_, eS_;
};

LargeProbeCombiner::LargeProbeCombiner(CodecPtr child, const Params& p,
                                       std::shared_ptr<const Partition> part)
    : Combiner(std::move(child), p.B, Engine::probe, false, std::move(part)), mode_(p.mode) {
  if (!partition_) throw ParameterError("probe engine: large path needs a partition");
  Int prod = 1;
  ys_.resize(B_ + 1);
  xs_.resize(B_ + 1);
  r_.assign(B_ + 1, 0);
  for (std::size_t q = 1; q <= B_; ++q) {
    const auto& P = pp(q);
    P.build_cover();
    for (const auto& t : P.terms.terms) {
      ys_[q].push_back(t.Y.elements());
      xs_[q].push_back(t.X.elements());
    }
    r_[q] = P.terms.terms.size();
    prod *= Int(r_[q]);
  }
  if (prod > Int(p.caps.max_j_tuples))
    throw ConfigError("caps.max_j_tuples exceeded: r_1...r_B = " + prod.str() + " > " +
                      std::to_string(p.caps.max_j_tuples));

  Rmax_.assign(B_ + 1, Int(0));
  for (std::size_t q = 1; q <= B_; ++q)
    for (std::size_t T = pp(q).prev_lo(); T <= pp(q).prev_hi(); ++T)
      Rmax_[q] = std::max(Rmax_[q], residual_size(q, T));
  // Free runs follow the second break, so they hold at most B - 2 elements.
  low_ = lowprob_layout(*child_, std::max<std::size_t>(B_ - 2, 1), B_ * l_);
  if (mode_ == Mode::strict) {
    if (low_.F > low_.F_bound)
      throw CertificationError("low-probability Lemma: field width " + std::to_string(low_.F) +
                               " > w + floor(log2 w) = " + std::to_string(low_.F_bound));
    Int sigma = partition_->cfg.sigma;
    if (low_.K_low > sigma + 1)
      throw CertificationError("low-probability Lemma: |K_low| = " + low_.K_low.str() +
                               " > sigma + 1");
  }

  for (const auto& jv : run_jvecs(B_)) {
    PRegion R;
    R.mode = 1;
    add_good_run(R, 0, jv, true);
    for (int y : Yset(B_, jv.back())) R.keyvals.push_back(static_cast<long>(B_ * l_ / 2) + y);
    finish_region(std::move(R));
  }
  for (std::size_t i = 1; i <= B_; ++i)
    for (const auto& pre : run_jvecs(i - 1))
      for (const auto& suf : run_jvecs(B_ - i)) {
        PRegion R;
        R.mode = 2;
        R.i1 = i;
        add_good_run(R, 0, pre, false);
        add_bad(R, i, 0);
        add_good_run(R, i, suf, true);
        finish_region(std::move(R));
      }
  for (std::size_t i1 = 1; i1 <= B_; ++i1)
    for (std::size_t i2 = i1 + 1; i2 <= B_; ++i2)
      for (const auto& pre : run_jvecs(i1 - 1))
        for (const auto& mid : run_jvecs(i2 - i1 - 1)) {
          PRegion R;
          R.mode = 3;
          R.i1 = i1;
          R.i2 = i2;
          add_good_run(R, 0, pre, false);
          add_bad(R, i1, 0);
          add_good_run(R, i1, mid, false);
          add_bad(R, i2, i1);
          if (i2 < B_) {
            R.header_elem = static_cast<int>(R.domains.size());
            R.domains.push_back(pow2(B_ - i2));
            for (std::size_t i = i2 + 1; i <= B_; ++i) {
              PosDesc d;
              d.kind = PKind::free;
              d.base = i2;
              d.rel = i - i2;
              d.q = i - i2;
              d.r_elem = static_cast<int>(R.domains.size());
              R.domains.push_back(low_.D);
              R.pos.push_back(std::move(d));
            }
          }
          finish_region(std::move(R));
        }
  build_layout();
}

std::vector<int> LargeProbeCombiner::Dset(std::size_t p, std::size_t j, std::size_t jn) const {
  const auto& Y = Yset(p, j);
  if (jn == 0) return Y;
  const auto& X = xs_[p + 1][jn - 1];
  std::vector<int> out;
  for (int y : Y)
    if (std::binary_search(X.begin(), X.end(), -y)) out.push_back(y);
  return out;
}

std::vector<JVec> LargeProbeCombiner::run_jvecs(std::size_t L) const {
  std::vector<JVec> out;
  if (L == 0) {
    out.push_back({});
    return out;
  }
  JVec cur(L, 0);
  // Depth-first over positions; a prefix survives while every D set is nonempty.
  std::function<void(std::size_t)> rec = [&](std::size_t p) {
    for (std::size_t j = 1; j <= r_[p]; ++j) {
      if (Yset(p, j).empty() || xs_[p][j - 1].empty()) continue;
      if (p == 1 && !std::binary_search(xs_[1][j - 1].begin(), xs_[1][j - 1].end(), 0)) continue;
      if (p > 1 && Dset(p - 1, cur[p - 2], j).empty()) continue;
      cur[p - 1] = j;
      if (p == L)
        out.push_back(cur);
      else
        rec(p + 1);
    }
  };
  rec(1);
  return out;
}

void LargeProbeCombiner::add_good_run(PRegion& R, std::size_t base, const JVec& jv,
                                      bool last_is_key) const {
  const std::size_t L = jv.size();
  for (std::size_t p = 1; p <= L; ++p) {
    PosDesc d;
    d.kind = PKind::good;
    d.base = base;
    d.rel = p;
    d.j = jv[p - 1];
    if (!(p == L && last_is_key)) {
      auto D = Dset(p, d.j, p < L ? jv[p] : 0);
      for (int y : D) d.tvals.push_back(static_cast<long>(p * l_ / 2) + y);
      d.t_elem = static_cast<int>(R.domains.size());
      R.domains.push_back(Int(d.tvals.size()));
    }
    d.r_elem = static_cast<int>(R.domains.size());
    R.domains.push_back(pp(p).terms.terms[d.j - 1].weight);
    R.pos.push_back(std::move(d));
  }
}

void LargeProbeCombiner::add_bad(PRegion& R, std::size_t i, std::size_t base) const {
  PosDesc d;
  d.kind = PKind::bad;
  d.base = base;
  d.rel = i - base;
  d.r_elem = static_cast<int>(R.domains.size());
  R.domains.push_back(std::max(Rmax_[d.rel], Int(1)));
  R.pos.push_back(std::move(d));
}

void LargeProbeCombiner::finish_region(PRegion R) {
  R.jv.assign(B_, 0);
  for (std::size_t i = 1; i <= B_; ++i)
    if (R.pos[i - 1].kind == PKind::good) R.jv[i - 1] = R.pos[i - 1].j;
  R.domains.push_back(R.mode == 1 ? Int(R.keyvals.size()) : Int(B_ * l_ + 1));
  for (const auto& d : R.domains)
    if (d == 0) return;  // some element has no value: the region is empty
  R.plan = plan_radix(R.domains, m_, w_, true, false);
  JVec key{static_cast<std::size_t>(R.mode), R.i1, R.i2};
  key.insert(key.end(), R.jv.begin(), R.jv.end());
  index_[key] = regions_.size();
  regions_.push_back(std::move(R));
}

void LargeProbeCombiner::build_layout() {
  const std::size_t Smax = B_ * l_;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> bucket(Smax + 1);
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    auto& R = regions_[r];
    std::size_t nkeys = static_cast<std::size_t>(R.domains.back());
    R.entry.assign(nkeys, 0);
    for (std::size_t k = 0; k < nkeys; ++k) {
      std::size_t S = R.mode == 1 ? static_cast<std::size_t>(R.keyvals[k]) : k;
      bucket[S].emplace_back(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(k));
    }
  }
  std::vector<Int> per_sum(Smax + 1, Int(0));
  Int pos = 0;
  for (std::size_t S = 0; S <= Smax; ++S)
    for (auto [r, k] : bucket[S]) {
      regions_[r].entry[k] = static_cast<std::uint32_t>(estart_.size());
      estart_.push_back(pos);
      eregion_.push_back(r);
      ekey_.push_back(k);
      eS_.push_back(static_cast<std::uint32_t>(S));
      pos += regions_[r].plan.key_stride;
      per_sum[S] += regions_[r].plan.key_stride;
    }
  set_layout(std::move(per_sum));
}

Int LargeProbeCombiner::residual_size(std::size_t p, std::size_t T) const {
  Int n = child_->used();
  for (std::size_t s = 0; s <= l_; ++s) n -= pp(p).good(T, s);
  return n;
}

Int LargeProbeCombiner::residual_rank(std::size_t p, std::size_t T, const Int& k) const {
  std::size_t s = child_->sum_of(k);
  Int rho = 0;
  for (std::size_t x = 0; x < s; ++x) rho += child_->cnt[x] - pp(p).good(T, x);
  return rho + (k - child_->off[s] - pp(p).good(T, s));
}

Int LargeProbeCombiner::residual_value(std::size_t p, std::size_t T, Int rho) const {
  for (std::size_t s = 0; s <= l_; ++s) {
    const Int& g = pp(p).good(T, s);
    Int tail = child_->cnt[s] - g;
    if (rho < tail) return child_->off[s] + g + rho;
    rho -= tail;
  }
  throw IntegrityError("probe engine: residual rank out of range");
}

EncodedTuple LargeProbeCombiner::encode(const std::vector<Int>& ks) const {
  check_arity(ks);
  auto cs = classify_sequence(ks, *child_, *partition_);
  int mode = cs.mode == ClassifiedSeq::Mode::good ? 1 : cs.mode == ClassifiedSeq::Mode::one_bad ? 2 : 3;
  std::size_t i1 = cs.i_star, i2 = cs.i_star2;
  JVec key{static_cast<std::size_t>(mode), i1, i2};
  key.insert(key.end(), cs.j_vector.begin(), cs.j_vector.end());
  auto it = index_.find(key);
  if (it == index_.end()) throw EncodingError("probe engine: no region for the classified tuple");
  const PRegion& R = regions_[it->second];
  std::vector<Int> tup(R.domains.size(), Int(0));
  const long TB = static_cast<long>(cs.T[B_]);
  for (std::size_t i = 1; i <= B_; ++i) {
    const PosDesc& d = R.pos[i - 1];
    std::size_t Tb = cs.T[d.base];
    std::size_t Tp = cs.T[i - 1] - Tb;
    std::size_t s = cs.s[i - 1];
    switch (d.kind) {
      case PKind::good: {
        if (d.t_elem >= 0) {
          long Tr = static_cast<long>(cs.T[i] - Tb);
          auto pos = std::lower_bound(d.tvals.begin(), d.tvals.end(), Tr);
          if (pos == d.tvals.end() || *pos != Tr) throw EncodingError("probe engine: prefix sum outside D");
          tup[static_cast<std::size_t>(d.t_elem)] = Int(pos - d.tvals.begin());
        }
        auto b = pp(d.rel).block_of(Tp, s, ks[i - 1] - child_->off[s]);
        tup[static_cast<std::size_t>(d.r_elem)] = b.second;
        break;
      }
      case PKind::bad:
        tup[static_cast<std::size_t>(d.r_elem)] = residual_rank(d.rel, Tp, ks[i - 1]);
        break;
      case PKind::free:
        break;
    }
  }
  if (R.header_elem >= 0) {
    std::vector<Int> run(ks.begin() + static_cast<long>(i2), ks.end());
    auto lc = lowprob_fields(low_, *child_, run, cs.T[i2]);
    tup[static_cast<std::size_t>(R.header_elem)] = Int(lc.header);
    for (std::size_t i = i2 + 1; i <= B_; ++i)
      tup[static_cast<std::size_t>(R.pos[i - 1].r_elem)] = lc.fields[i - i2 - 1];
  }
  std::size_t kidx;
  if (R.mode == 1) {
    auto pos = std::lower_bound(R.keyvals.begin(), R.keyvals.end(), TB);
    if (pos == R.keyvals.end() || *pos != TB) throw EncodingError("probe engine: T_B outside key set");
    kidx = static_cast<std::size_t>(pos - R.keyvals.begin());
  } else {
    kidx = static_cast<std::size_t>(TB);
  }
  tup.back() = Int(kidx);
  auto enc = radix_encode(R.plan, tup);
  Int low = enc.spill - Int(kidx) * R.plan.key_stride;
  enc.spill = estart_[R.entry[kidx]] + low;
  return enc;
}

LargeProbeCombiner::Ctx LargeProbeCombiner::open(const BitSource& mem, const Int& spill,
                                                 ProbeMeter& meter) const {
  if (spill < 0 || spill >= K_) throw IntegrityError("probe engine: spillover out of range");
  auto it = std::upper_bound(estart_.begin(), estart_.end(), spill);
  std::size_t e = static_cast<std::size_t>(it - estart_.begin()) - 1;
  Ctx c;
  c.R = &regions_[eregion_[e]];
  c.mem = &mem;
  c.meter = &meter;
  c.local = Int(ekey_[e]) * c.R->plan.key_stride + (spill - estart_[e]);
  c.TB = eS_[e];
  return c;
}

Int LargeProbeCombiner::elem(Ctx& c, int e) const {
  auto it = c.cache.find(e);
  if (it != c.cache.end()) return it->second;
  Int v = radix_decode_element(c.R->plan, *c.mem, c.local, static_cast<std::size_t>(e), *c.meter);
  c.cache.emplace(e, v);
  return v;
}

LowProbReader LargeProbeCombiner::reader(Ctx& c) const {
  LowProbReader rd;
  rd.header = [this, &c]() { return elem(c, c.R->header_elem).convert_to<std::uint64_t>(); };
  rd.field = [this, &c](std::size_t q) {
    return elem(c, c.R->pos[c.R->i2 + q - 1].r_elem);
  };
  return rd;
}

long LargeProbeCombiner::T_at(Ctx& c, std::size_t i) const {
  if (i == 0) return 0;
  if (i == B_) return c.TB;
  const PosDesc& d = c.R->pos[i - 1];
  switch (d.kind) {
    case PKind::good: {
      if (d.t_elem < 0) return c.TB;
      auto idx = static_cast<std::size_t>(elem(c, d.t_elem));
      if (idx >= d.tvals.size()) throw IntegrityError("probe engine: prefix-sum index out of range");
      return T_at(c, d.base) + d.tvals[idx];
    }
    case PKind::bad: {
      long Tp = T_at(c, i - 1);
      long Tb = T_at(c, d.base);
      Int k = residual_value(d.rel, static_cast<std::size_t>(Tp - Tb), elem(c, d.r_elem));
      return Tp + static_cast<long>(child_->sum_of(k));
    }
    case PKind::free: {
      auto rd = reader(c);
      return static_cast<long>(
          lowprob_T(low_, rd, d.q, static_cast<std::size_t>(T_at(c, c.R->i2))));
    }
  }
  throw std::logic_error("T_at");
}

Int LargeProbeCombiner::k_at(Ctx& c, std::size_t i) const {
  const PosDesc& d = c.R->pos[i - 1];
  switch (d.kind) {
    case PKind::good: {
      long Tp = T_at(c, i - 1), Tc = T_at(c, i), Tb = T_at(c, d.base);
      if (Tc < Tp || Tc - Tp > static_cast<long>(l_)) throw IntegrityError("probe engine: bad sums");
      auto s = static_cast<std::size_t>(Tc - Tp);
      Int start = pp(d.rel).block_start(static_cast<std::size_t>(Tp - Tb), s, d.j);
      return child_->off[s] + start + elem(c, d.r_elem);
    }
    case PKind::bad: {
      long Tp = T_at(c, i - 1), Tb = T_at(c, d.base);
      return residual_value(d.rel, static_cast<std::size_t>(Tp - Tb), elem(c, d.r_elem));
    }
    case PKind::free: {
      auto rd = reader(c);
      return lowprob_k(low_, *child_, rd, d.q, static_cast<std::size_t>(T_at(c, c.R->i2)));
    }
  }
  throw std::logic_error("k_at");
}

std::size_t LargeProbeCombiner::prefix_sum(const BitSource& mem, const Int& spill, std::size_t i,
                                           ProbeMeter& meter) const {
  if (i > B_) throw RangeError("prefix_sum: i > B");
  if (i == 0) return 0;
  if (i == B_) {
    ++meter.spill_reads;
    return total_sum(spill);
  }
  Ctx c = open(mem, spill, meter);
  return static_cast<std::size_t>(T_at(c, i));
}

Int LargeProbeCombiner::child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                                    ProbeMeter& meter) const {
  if (i < 1 || i > B_) throw RangeError("child_spill: i outside [1, B]");
  Ctx c = open(mem, spill, meter);
  return k_at(c, i);
}

std::pair<std::size_t, Int> LargeProbeCombiner::descend(const BitSource& mem, const Int& spill,
                                                        std::size_t i, ProbeMeter& meter) const {
  if (i < 1 || i > B_) throw RangeError("descend: i outside [1, B]");
  Ctx c = open(mem, spill, meter);
  auto T = static_cast<std::size_t>(T_at(c, i - 1));
  return {T, k_at(c, i)};
}

nlohmann::json LargeProbeCombiner::ledger() const {
  auto j = base_ledger();
  const char* names[] = {"", "good", "one_bad", "lowprob"};
  std::map<std::string, Int> K_mode;
  std::map<std::string, std::size_t> n_mode;
  Int K_j_max = 0;
  nlohmann::json K_j = nlohmann::json::array();
  for (const auto& R : regions_) {
    K_mode[names[R.mode]] += R.plan.K;
    n_mode[names[R.mode]] += 1;
    if (R.mode == 1) {
      K_j_max = std::max(K_j_max, R.plan.K);
      if (K_j.size() < 64) {
        nlohmann::json e;
        e["j"] = R.jv;
        e["K_j"] = R.plan.K.str();
        e["K_j_bound"] = R.plan.K_bound.str();
        K_j.push_back(e);
      }
    }
  }
  for (auto& [name, v] : K_mode) j["K_" + name] = v.str();
  for (auto& [name, v] : n_mode) j["regions_" + name] = v;
  j["K_j_max"] = K_j_max.str();
  j["K_j_first"] = K_j;
  j["lowprob_layout"] = low_.to_json();
  nlohmann::json rmax = nlohmann::json::array();
  for (std::size_t q = 1; q <= B_; ++q) rmax.push_back(Rmax_[q].str());
  j["residual_domain"] = rmax;
  j["layout_entries"] = estart_.size();
  return j;
}

}  // namespace

namespace detail {
CombinerPtr make_large_probe(CodecPtr child, const Params& p, std::shared_ptr<const Partition> part) {
  return std::make_shared<LargeProbeCombiner>(std::move(child), p, std::move(part));
}
}  // namespace detail

}  // namespace srank
