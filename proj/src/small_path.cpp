// Probe engine, small path: the spillover names the sum tuple (s_1..s_B) and
// carries the top of a mixed-radix code over the in-class indices. Tuples are
// ordered by (total, lexicographic), so the total is monotone in the spillover.

#include "engines.hpp"

#include <algorithm>
#include <map>

namespace srank {

namespace {

class SmallProbeCombiner final : public Combiner {
 public:
  SmallProbeCombiner(CodecPtr child, const Params& p, std::shared_ptr<const Partition> part)
      : Combiner(std::move(child), p.B, Engine::probe, true, std::move(part)) {
    std::vector<std::uint32_t> live;
    for (std::size_t s = 0; s <= l_; ++s)
      if (child_->cnt[s] != 0) live.push_back(static_cast<std::uint32_t>(s));
    Int total = boost::multiprecision::pow(Int(live.size()), static_cast<unsigned>(B_));
    if (total > Int(p.caps.max_s_tuples))
      throw ConfigError("caps.max_s_tuples exceeded: " + total.str() + " sum tuples > " +
                        std::to_string(p.caps.max_s_tuples));
    std::vector<std::uint32_t> cur(B_, 0);
    std::vector<std::size_t> digit(B_, 0);
    while (true) {
      for (std::size_t i = 0; i < B_; ++i) cur[i] = live[digit[i]];
      tuples_.push_back(cur);
      std::size_t i = B_;
      while (i > 0 && ++digit[i - 1] == live.size()) digit[--i] = 0;
      if (i == 0) break;
    }
    auto sum = [](const std::vector<std::uint32_t>& t) {
      std::size_t s = 0;
      for (auto x : t) s += x;
      return s;
    };
    std::stable_sort(tuples_.begin(), tuples_.end(),
                     [&](const auto& a, const auto& b) { return sum(a) < sum(b); });
    std::vector<Int> per_sum(B_ * l_ + 1, Int(0));
    Int pos = 0;
    for (std::size_t t = 0; t < tuples_.size(); ++t) {
      index_[tuples_[t]] = t;
      Int k = plan(t).K;
      start_.push_back(pos);
      pos += k;
      per_sum[sum(tuples_[t])] += k;
      max_tuple_K_ = std::max(max_tuple_K_, k);
    }
    set_layout(std::move(per_sum));
  }

  EncodedTuple encode(const std::vector<Int>& ks) const override {
    check_arity(ks);
    std::vector<std::uint32_t> key(B_);
    std::vector<Int> idx(B_);
    for (std::size_t i = 0; i < B_; ++i) {
      std::size_t s = child_->sum_of(ks[i]);
      key[i] = static_cast<std::uint32_t>(s);
      idx[i] = ks[i] - child_->off[s];
    }
    std::size_t t = index_.at(key);
    auto enc = radix_encode(plan(t), idx);
    enc.spill += start_[t];
    return enc;
  }

  std::size_t prefix_sum(const BitSource&, const Int& spill, std::size_t i,
                         ProbeMeter& meter) const override {
    if (i > B_) throw RangeError("prefix_sum: i > B");
    if (i == 0) return 0;
    ++meter.spill_reads;
    const auto& tup = tuples_[tuple_of(spill)];
    std::size_t T = 0;
    for (std::size_t j = 0; j < i; ++j) T += tup[j];
    return T;
  }

  Int child_spill(const BitSource& mem, const Int& spill, std::size_t i,
                  ProbeMeter& meter) const override {
    if (i < 1 || i > B_) throw RangeError("child_spill: i outside [1, B]");
    std::size_t t = tuple_of(spill);
    std::size_t s = tuples_[t][i - 1];
    Int idx = radix_decode_element(plan(t), mem, spill - start_[t], i - 1, meter);
    return child_->off[s] + idx;
  }

  std::pair<std::size_t, Int> descend(const BitSource& mem, const Int& spill, std::size_t i,
                                      ProbeMeter& meter) const override {
    if (i < 1 || i > B_) throw RangeError("descend: i outside [1, B]");
    std::size_t t = tuple_of(spill);
    std::size_t T = 0;
    for (std::size_t j = 0; j + 1 < i; ++j) T += tuples_[t][j];
    std::size_t s = tuples_[t][i - 1];
    Int idx = radix_decode_element(plan(t), mem, spill - start_[t], i - 1, meter);
    return {T, child_->off[s] + idx};
  }

  nlohmann::json ledger() const override {
    auto j = base_ledger();
    j["s_tuples"] = tuples_.size();
    j["max_tuple_K"] = max_tuple_K_.str();
    return j;
  }

 private:
  std::size_t tuple_of(const Int& spill) const {
    if (spill < 0 || spill >= K_) throw IntegrityError("probe engine: spillover out of range");
    auto it = std::upper_bound(start_.begin(), start_.end(), spill);
    return static_cast<std::size_t>(it - start_.begin()) - 1;
  }

  // Plans depend only on the tuple, so they are rebuilt on use.
  RadixPlan plan(std::size_t t) const {
    std::vector<Int> dom;
    for (auto s : tuples_[t]) dom.push_back(child_->cnt[s]);
    return plan_radix(dom, m_, w_);
  }

  std::vector<std::vector<std::uint32_t>> tuples_;
  std::map<std::vector<std::uint32_t>, std::size_t> index_;
  std::vector<Int> start_;
  Int max_tuple_K_ = 0;
};

}  // namespace

namespace detail {
CombinerPtr make_large_probe(CodecPtr child, const Params& p, std::shared_ptr<const Partition> part);
}

CombinerPtr make_probe_combiner(CodecPtr child, const Params& p, bool small,
                                std::shared_ptr<const Partition> part) {
  if (small) return std::make_shared<SmallProbeCombiner>(std::move(child), p, std::move(part));
  return detail::make_large_probe(std::move(child), p, std::move(part));
}

}  // namespace srank
