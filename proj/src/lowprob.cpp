#include "srank/lowprob.hpp"

#include <algorithm>

namespace srank {

nlohmann::json LowProbLayout::to_json() const {
  return {{"h_prime", h},       {"s_lo", s_lo},       {"s_hi", s_hi},
          {"C_max", C_max.str()}, {"K_low", K_low.str()}, {"field_domain", D.str()},
          {"F", F},             {"F_bound", F_bound}, {"Bp", Bp}};
}

LowProbLayout lowprob_layout(const LevelCodec& child, std::size_t Bp, std::size_t T_max) {
  LowProbLayout L;
  L.l = child.len;
  L.Bp = Bp;
  L.w = child.w;
  L.T_max = T_max;
  L.h = boost::multiprecision::sqrt(Int(L.l) * Int(L.w)).convert_to<std::size_t>();
  L.s_lo = L.l / 2 > L.h ? L.l / 2 - L.h : 0;
  L.s_hi = std::min(L.l, L.l / 2 + L.h);
  L.C_max = 0;
  for (std::size_t s = L.s_lo; s <= L.s_hi; ++s) L.C_max = std::max(L.C_max, child.cnt[s]);
  L.K_low = child.used() - (child.off[L.s_hi + 1] - child.off[L.s_lo]);
  L.H = Int(Bp * (L.s_hi - L.s_lo) + 1) * L.C_max;
  L.D = L.H + Int(T_max + 1) * L.K_low;
  L.F = ceil_log2(std::max(L.D, Int(1)));
  std::size_t lg = 0;
  while ((std::size_t(2) << lg) <= L.w) ++lg;
  L.F_bound = L.w + lg;
  return L;
}

LowProbCode lowprob_fields(const LowProbLayout& L, const LevelCodec& child,
                           const std::vector<Int>& ks, std::size_t T_base) {
  if (ks.size() > L.Bp) throw EncodingError("lowprob: run longer than the layout");
  LowProbCode c;
  std::size_t T = T_base, T_pred = T_base, pred = 0;
  for (std::size_t q = 1; q <= ks.size(); ++q) {
    std::size_t s = child.sum_of(ks[q - 1]);
    T += s;
    if (T > L.T_max) throw EncodingError("lowprob: prefix sum above T_max");
    if (L.is_low(s)) {
      c.header |= std::uint64_t(1) << (q - 1);
      const Int& k = ks[q - 1];
      Int rank_low = k < child.off[L.s_lo] ? k : k - (child.off[L.s_hi + 1] - child.off[L.s_lo]);
      c.fields.push_back(L.H + Int(T) * L.K_low + rank_low);
      T_pred = T;
      pred = q;
    } else {
      std::size_t v = T - T_pred - (q - pred) * L.s_lo;
      c.fields.push_back(Int(v) * L.C_max + (ks[q - 1] - child.off[s]));
    }
  }
  return c;
}

std::size_t lowprob_T(const LowProbLayout& L, const LowProbReader& rd, std::size_t q,
                      std::size_t T_base) {
  if (q == 0) return T_base;
  Int f = rd.field(q);
  if (f >= L.H) return static_cast<std::size_t>((f - L.H) / L.K_low);
  std::uint64_t hdr = rd.header() & ((std::uint64_t(1) << (q - 1)) - 1);
  std::size_t pred = 0, T_pred = T_base;
  if (hdr != 0) {
    pred = 64 - static_cast<std::size_t>(__builtin_clzll(hdr));
    T_pred = static_cast<std::size_t>((rd.field(pred) - L.H) / L.K_low);
  }
  std::size_t v = static_cast<std::size_t>(f / L.C_max);
  return T_pred + (q - pred) * L.s_lo + v;
}

Int lowprob_k(const LowProbLayout& L, const LevelCodec& child, const LowProbReader& rd,
              std::size_t q, std::size_t T_base) {
  Int f = rd.field(q);
  if (f >= L.H) {
    Int rank_low = (f - L.H) % L.K_low;
    if (rank_low < child.off[L.s_lo]) return rank_low;
    return rank_low + (child.off[L.s_hi + 1] - child.off[L.s_lo]);
  }
  std::size_t s = lowprob_T(L, rd, q, T_base) - lowprob_T(L, rd, q - 1, T_base);
  return child.off[s] + f % L.C_max;
}

LowProbBits encode_lowprob(const LowProbLayout& L, const LevelCodec& child,
                           const std::vector<Int>& ks, std::size_t T_base) {
  auto c = lowprob_fields(L, child, ks, T_base);
  LowProbBits b;
  b.bits = Int(c.header);
  b.length = L.Bp;
  for (const auto& f : c.fields) {
    b.bits += f << b.length;
    b.length += L.F;
  }
  return b;
}

LowProbReader bits_reader(const LowProbLayout& L, const BitSource& src, ProbeMeter& meter) {
  LowProbReader rd;
  rd.header = [&L, &src, &meter]() {
    return src.read(0, L.Bp, meter).convert_to<std::uint64_t>();
  };
  rd.field = [&L, &src, &meter](std::size_t q) {
    Int f = src.read(L.Bp + (q - 1) * L.F, L.F, meter);
    if (f >= L.D) throw IntegrityError("lowprob: field value outside its domain");
    return f;
  };
  return rd;
}

}  // namespace srank
