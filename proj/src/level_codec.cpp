#include "srank/level_codec.hpp"
#include "srank/binom_approx.hpp"

#include <algorithm>
#include <random>

namespace srank {

void LevelCodec::set_counts(std::vector<Int> c) {
  cnt = std::move(c);
  off.assign(cnt.size() + 1, Int(0));
  for (std::size_t s = 0; s < cnt.size(); ++s) off[s + 1] = off[s] + cnt[s];
}

std::size_t LevelCodec::sum_of(const Int& k) const {
  if (k < 0 || k >= used())
    throw IntegrityError("spillover " + k.str() + " outside the used range [0, " + used().str() +
                         ") at level " + std::to_string(level));
  auto it = std::upper_bound(off.begin(), off.end(), k);
  return static_cast<std::size_t>(it - off.begin()) - 1;
}

CodecPtr leaf_codec(std::size_t w, const Int& pad) {
  if (w == 0) throw ParameterError("leaf_codec: w must be positive");
  auto c = std::make_shared<LevelCodec>();
  c->level = 0;
  c->len = w;
  c->w = w;
  c->B = 1;
  c->mem_bits = 0;
  c->K = pow2(w) + pad;
  std::vector<Int> cnt;
  for (std::size_t s = 0; s <= w; ++s) cnt.push_back(binomial(w, s));
  c->set_counts(std::move(cnt));
  c->pascal.assign((w + 1) * (w + 1), Int(0));
  for (std::size_t p = 0; p <= w; ++p)
    for (std::size_t j = 0; j <= p; ++j)
      c->pascal[p * (w + 1) + j] =
          (j == 0 || j == p) ? Int(1)
                             : c->pascal[(p - 1) * (w + 1) + j - 1] + c->pascal[(p - 1) * (w + 1) + j];
  return c;
}

namespace {

const Int& pas(const LevelCodec& c, std::size_t p, std::size_t j) {
  return c.pascal[p * (c.w + 1) + j];
}

}  // namespace

Int leaf_encode(const LevelCodec& c, const Int& word) {
  if (word < 0 || word >= pow2(c.w)) throw EncodingError("leaf_encode: word wider than w bits");
  Int rank = 0;
  std::size_t j = 0;
  for (std::size_t p = 0; p < c.w; ++p)
    if (bit_test(word, static_cast<unsigned>(p))) {
      ++j;
      if (j <= p) rank += pas(c, p, j);
    }
  return c.off[j] + rank;
}

Int leaf_decode(const LevelCodec& c, const Int& k) {
  std::size_t j = c.sum_of(k);
  Int r = k - c.off[j];
  Int word = 0;
  for (std::size_t p = c.w; p-- > 0 && j > 0;) {
    const Int& b = j <= p ? pas(c, p, j) : Int(0);
    if (j > p || b <= r) {
      if (j <= p) r -= b;
      bit_set(word, static_cast<unsigned>(p));
      --j;
    }
  }
  return word;
}

std::size_t leaf_rank(const LevelCodec& c, const Int& k, std::size_t u) {
  if (u > c.w) throw RangeError("leaf_rank: u > w");
  std::size_t j = c.sum_of(k);
  Int r = k - c.off[j];
  for (std::size_t p = c.w; p-- > u && j > 0;) {
    // C(p, j) = 0 for j > p: every remaining position is set.
    if (j > p) return u;
    const Int& b = pas(c, p, j);
    if (b <= r) {
      r -= b;
      --j;
    }
  }
  return j;
}

CodecPtr synthetic_codec(std::size_t l, std::size_t w, std::size_t B, const Int& sigma) {
  if (l <= w) throw ParameterError("synthetic_codec: needs l > w");
  auto c = std::make_shared<LevelCodec>();
  c->level = 1;
  c->len = l;
  c->w = w;
  c->B = B;
  c->mem_bits = l - w;
  c->K = pow2(w) + sigma;
  std::vector<Int> cnt(l + 1);
  Int total = 0;
  for (std::size_t s = 0; s <= l; ++s) {
    cnt[s] = ceil_div(binomial(l, s), pow2(l - w));
    total += cnt[s];
  }
  if (total > c->K)
    throw ParameterError("synthetic_codec: sigma " + sigma.str() + " below the rounding excess " +
                         (total - pow2(w)).str());
  Int rem = c->K - total;
  Int share = rem / Int(l + 1);
  std::size_t extra = static_cast<std::size_t>(rem % Int(l + 1));
  for (std::size_t s = 0; s <= l; ++s) cnt[s] += share + (s < extra ? 1 : 0);
  c->set_counts(std::move(cnt));
  return c;
}

nlohmann::json FactAudit::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  j["subsets"] = subsets;
  j["exhaustive"] = exhaustive;
  j["min_lower_ratio"] = rat_to_double(min_lower_ratio);
  if (!pass) {
    j["failed"] = failed;
    j["witness"] = witness;
  }
  return j;
}

FactAudit child_sum_counts(const LevelCodec& c, std::size_t samples, std::uint64_t seed) {
  FactAudit a;
  const std::size_t L = c.len;
  const Int scale = pow2(L);
  // Everything scaled by 2^len: target(s) = C(len, s) 2^w.
  std::vector<Int> target(L + 1);
  for (std::size_t s = 0; s <= L; ++s) target[s] = binomial(L, s) * pow2(c.w);
  const Int sigma_scaled = c.sigma() * scale;

  if (c.off.back() > c.K) {
    a.pass = false;
    a.failed = "sum_s cnt[s] <= K";
    a.witness = "used=" + c.off.back().str() + " K=" + c.K.str();
    return a;
  }
  bool first = true;
  for (std::size_t s = 0; s <= L; ++s) {
    Rat ratio(c.cnt[s] * scale, target[s]);
    if (first || ratio < a.min_lower_ratio) a.min_lower_ratio = ratio;
    first = false;
    if (c.cnt[s] * scale < target[s] && a.pass) {
      a.pass = false;
      a.failed = "cnt[s] >= C(len,s) 2^{w-len}";
      a.witness = "s=" + std::to_string(s) + " cnt=" + c.cnt[s].str();
    }
  }

  auto check = [&](const std::vector<std::size_t>& X) {
    ++a.subsets;
    Int lhs = 0, rhs = sigma_scaled;
    for (auto s : X) {
      lhs += c.cnt[s] * scale;
      rhs += target[s];
    }
    if (lhs > rhs && a.pass) {
      a.pass = false;
      a.failed = "sum_{s in X} cnt[s] <= sigma + sum_{s in X} C(len,s) 2^{w-len}";
      std::string xs;
      for (auto s : X) xs += (xs.empty() ? "" : ",") + std::to_string(s);
      a.witness = "X={" + xs + "}";
    }
  };

  if (L <= 16) {
    a.exhaustive = true;
    for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << (L + 1)); ++mask) {
      std::vector<std::size_t> X;
      for (std::size_t s = 0; s <= L; ++s)
        if ((mask >> s) & 1) X.push_back(s);
      check(X);
    }
    return a;
  }
  std::vector<std::size_t> worst;
  for (std::size_t s = 0; s <= L; ++s)
    if (c.cnt[s] * scale > target[s]) worst.push_back(s);
  check(worst);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < samples; ++k) {
    std::vector<std::size_t> X;
    for (std::size_t s = 0; s <= L; ++s)
      if (rng() & 1) X.push_back(s);
    check(X);
  }
  return a;
}

}  // namespace srank
