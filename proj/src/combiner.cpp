#include "srank/combiner.hpp"

#include "engines.hpp"

#include <algorithm>

namespace srank {

namespace detail {

const Int& zero() {
  static const Int z = 0;
  return z;
}

std::vector<Int> convolve(const std::vector<Int>& x, const std::vector<Int>& y, std::size_t limit) {
  std::size_t n = std::min(limit, x.size() + y.size() - 1);
  std::vector<Int> out(n, Int(0));
  for (std::size_t a = 0; a < x.size() && a < n; ++a) {
    if (x[a] == 0) continue;
    for (std::size_t b = 0; b < y.size() && a + b < n; ++b)
      if (y[b] != 0) out[a + b] += x[a] * y[b];
  }
  return out;
}

}  // namespace detail

Combiner::Combiner(CodecPtr child, std::size_t B, Engine e, bool small,
                   std::shared_ptr<const Partition> part)
    : child_(std::move(child)),
      B_(B),
      w_(child_->w),
      l_(child_->len),
      m_((B - 1) * child_->w),
      engine_(e),
      small_(small),
      partition_(std::move(part)) {
  if (B_ < 2) throw ParameterError("combiner: B must be >= 2");
  if (l_ % 2 != 0) throw ParameterError("combiner: child length must be even");
}

void Combiner::set_layout(std::vector<Int> per_sum) {
  cnt_ = std::move(per_sum);
  off_.assign(cnt_.size() + 1, Int(0));
  for (std::size_t s = 0; s < cnt_.size(); ++s) off_[s + 1] = off_[s] + cnt_[s];
  K_ = off_.back();
}

void Combiner::check_arity(const std::vector<Int>& ks) const {
  if (ks.size() != B_)
    throw EncodingError("combiner: expected " + std::to_string(B_) + " child spillovers, got " +
                        std::to_string(ks.size()));
  for (const auto& k : ks)
    if (k < 0 || k >= child_->used())
      throw EncodingError("combiner: child spillover " + k.str() + " outside the child's range");
}

std::size_t Combiner::total_sum(const Int& spill) const {
  if (spill < 0 || spill >= K_) throw IntegrityError("spillover " + spill.str() + " >= K");
  auto it = std::upper_bound(off_.begin(), off_.end(), spill);
  return static_cast<std::size_t>(it - off_.begin()) - 1;
}

std::pair<std::size_t, Int> Combiner::descend(const BitSource& mem, const Int& spill, std::size_t i,
                                              ProbeMeter& meter) const {
  std::size_t T = prefix_sum(mem, spill, i - 1, meter);
  return {T, child_spill(mem, spill, i, meter)};
}

nlohmann::json Combiner::base_ledger() const {
  nlohmann::json j;
  j["engine"] = to_string(engine_);
  j["path"] = small_ ? "small" : "large";
  j["B"] = B_;
  j["l"] = l_;
  j["m"] = m_;
  j["K"] = K_.str();
  j["K_child"] = child_->K.str();
  if (partition_) j["partition"] = partition_->ledger();
  return j;
}

bool use_small_path(std::size_t B, std::size_t l, std::size_t w) {
  return boost::multiprecision::pow(Int(l + 1), static_cast<unsigned>(B)) <= pow2(w / 2);
}

namespace {

Int lemma_sigma(const LevelCodec& child, const Params& p) {
  return std::max(child.K - pow2(p.w), Int(p.n) * pow2(p.w / 2));
}

struct BoundCheck {
  std::string name;
  Int bound;
};

BoundCheck size_bound(const Combiner& c, const Params& p, const Int& sigma) {
  const Int B(c.arity());
  if (c.small_path()) return {"K <= 2^w + 2 B sigma", pow2(p.w) + 2 * B * sigma};
  if (p.mode == Mode::strict) return {"K <= 2^w + 33 B sigma", pow2(p.w) + 33 * B * sigma};
  return {"K <= 2^w + G sigma", pow2(p.w) + growth_factor(c.arity(), c.child().len, p.w) * sigma};
}

}  // namespace

CodecPtr combine(CodecPtr child, const Params& p, Engine engine,
                 std::shared_ptr<const Partition> part) {
  const std::size_t l = child->len;
  bool small = p.path == PathChoice::small ||
               (p.path == PathChoice::automatic && use_small_path(p.B, l, p.w));
  if (!small && !part)
    part = std::make_shared<const Partition>(build_partition(*child, default_partition_config(*child, p)));
  CombinerPtr comb = engine == Engine::enumeration ? make_enum_combiner(child, p, small, part)
                                                   : make_probe_combiner(child, p, small, part);
  auto c = std::make_shared<LevelCodec>();
  c->level = child->level + 1;
  c->len = p.B * l;
  c->w = p.w;
  c->B = p.B;
  c->mem_bits = c->len - p.w;
  c->K = comb->K();
  c->set_counts(comb->counts());
  c->child = child;
  c->combiner = comb;

  Int sigma = lemma_sigma(*child, p);
  auto bc = size_bound(*comb, p, sigma);
  if (p.mode == Mode::strict && c->K > bc.bound)
    throw CertificationError("level " + std::to_string(c->level) + ": " + bc.name + " fails: K=" +
                             c->K.str() + " bound=" + bc.bound.str());
  auto fact = child_sum_counts(*c, 64, c->level);
  c->audit["sigma"] = sigma.str();
  c->audit["bound"] = bc.name;
  c->audit["bound_value"] = bc.bound.str();
  c->audit["bound_ok"] = c->K <= bc.bound;
  c->audit["fact"] = fact.to_json();
  if (!fact.pass)
    throw CertificationError("level " + std::to_string(c->level) + " counting Fact: " + fact.failed +
                             " at " + fact.witness);
  return c;
}

std::size_t decode_prefix_sum(const LevelCodec& codec, const BitArena& arena, std::size_t base,
                              const Int& spill, std::size_t i, ProbeMeter& meter) {
  if (!codec.combiner) throw ParameterError("decode_prefix_sum: leaf codec has no combiner");
  ArenaSource src(arena, base, codec.w);
  return codec.combiner->prefix_sum(src, spill, i, meter);
}

Int decode_child_spill(const LevelCodec& codec, const BitArena& arena, std::size_t base,
                       const Int& spill, std::size_t i, ProbeMeter& meter) {
  if (!codec.combiner) throw ParameterError("decode_child_spill: leaf codec has no combiner");
  ArenaSource src(arena, base, codec.w);
  return codec.combiner->child_spill(src, spill, i, meter);
}

nlohmann::json size_ledger(const LevelCodec& top) {
  nlohmann::json levels = nlohmann::json::array();
  std::vector<const LevelCodec*> chain;
  for (const LevelCodec* c = &top; c; c = c->child.get()) chain.push_back(c);
  for (const LevelCodec* c : chain) {
    nlohmann::json e;
    e["level"] = c->level;
    e["len"] = c->len;
    e["mem_bits"] = c->mem_bits;
    e["K"] = c->K.str();
    e["K_minus_2w"] = c->sigma().str();
    e["spill_bits"] = ceil_log2(c->K);
    if (c->child) {
      Int prev = c->child->sigma();
      if (prev > 0) e["growth"] = rat_to_double(Rat(c->sigma(), prev));
      e["growth_formula_G"] = growth_factor(c->B, c->child->len, c->w).str();
    }
    if (!c->audit.is_null()) e["audit"] = c->audit;
    if (c->combiner) e["combiner"] = c->combiner->ledger();
    levels.push_back(e);
  }
  return levels;
}

}  // namespace srank
