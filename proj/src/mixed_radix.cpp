#include "srank/mixed_radix.hpp"

#include <algorithm>

namespace srank {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Greedy left-to-right merge of domains[0..count) under the 2^{6w} cap.
std::vector<std::vector<std::size_t>> greedy_groups(const std::vector<Int>& domains,
                                                    std::size_t count, std::size_t w) {
  const Int cap = pow2(6 * w);
  std::vector<std::vector<std::size_t>> groups;
  Int prod = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (groups.empty() || prod * domains[i] > cap) {
      groups.push_back({i});
      prod = domains[i];
    } else {
      groups.back().push_back(i);
      prod *= domains[i];
    }
  }
  return groups;
}

// Fills digit widths, unit/carry sizes and field offsets; false if the
// first B'-1 fields do not fit m bits.
bool layout_digits(RadixPlan& p) {
  const std::size_t Bp = p.merged_domains.size();
  p.digit_widths.clear();
  p.unit_sizes.clear();
  p.carry_sizes.assign(1, Int(1));
  p.field_offsets.clear();
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < Bp; ++i) {
    const Int& V = p.carry_sizes.back();
    std::size_t wi = bit_length(V) - 1 + (3 * p.w) / 2;
    Int U = pow2(wi) / V;
    p.digit_widths.push_back(wi);
    p.unit_sizes.push_back(U);
    p.carry_sizes.push_back(ceil_div(p.merged_domains[i], U));
    p.field_offsets.push_back(used);
    used += wi;
  }
  if (used > p.m) return false;
  p.field_offsets.push_back(used);
  p.last_low_width = p.m - used;
  return true;
}

Int last_range(const RadixPlan& p) {
  Int top = p.merged_domains.empty() ? Int(1) : p.merged_domains.back();
  return top * p.carry_sizes.back();
}

}  // namespace

RadixPlan plan_radix(const std::vector<Int>& domains, std::size_t m, std::size_t w, bool keyed,
                     bool check_floor) {
  if (domains.empty()) throw ParameterError("plan_radix: empty domain list");
  if (w == 0) throw ParameterError("plan_radix: w must be positive");
  Int total = 1;
  for (const auto& d : domains) {
    if (d <= 0) throw ParameterError("plan_radix: domain of size 0");
    if (check_floor && d > pow2(w))
      throw ParameterError("plan_radix: domain " + d.str() + " exceeds 2^w");
    total *= d;
  }
  if (check_floor && total > pow2(m + w))
    throw ParameterError("plan_radix: m=" + std::to_string(m) +
                         " is below sum(log2 M_i) - w for product " + total.str());

  RadixPlan p;
  p.original_domains = domains;
  p.m = m;
  p.w = w;
  p.keyed = keyed;
  const std::size_t body = keyed ? domains.size() - 1 : domains.size();
  p.groups = greedy_groups(domains, body, w);

  for (;;) {
    p.merged_domains.clear();
    for (const auto& g : p.groups) {
      Int prod = 1;
      for (auto i : g) prod *= domains[i];
      p.merged_domains.push_back(prod);
    }
    if (layout_digits(p)) break;
    if (p.groups.size() < 2)
      throw ParameterError("plan_radix: digit fields do not fit m=" + std::to_string(m));
    auto last = p.groups.back();
    p.groups.pop_back();
    p.groups.back().insert(p.groups.back().end(), last.begin(), last.end());
  }

  p.group_of.assign(domains.size(), npos);
  p.inner.assign(domains.size(), Int(1));
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    Int acc = 1;
    for (std::size_t k = p.groups[g].size(); k-- > 0;) {
      std::size_t i = p.groups[g][k];
      p.group_of[i] = g;
      p.inner[i] = acc;
      acc *= domains[i];
    }
  }

  Int stride = ceil_div(last_range(p), pow2(p.last_low_width));
  if (keyed) {
    p.key_stride = stride;
    p.K = domains.back() * stride;
  } else {
    p.K = stride;
  }
  p.K_bound = ceil_div(total, pow2(m)) + 1;
  return p;
}

EncodedTuple radix_encode(const RadixPlan& p, const std::vector<Int>& tuple) {
  if (tuple.size() != p.size())
    throw EncodingError("radix_encode: tuple has " + std::to_string(tuple.size()) +
                        " elements, plan expects " + std::to_string(p.size()));
  for (std::size_t i = 0; i < tuple.size(); ++i)
    if (tuple[i] < 0 || tuple[i] >= p.original_domains[i])
      throw EncodingError("radix_encode: element " + std::to_string(i) + " = " + tuple[i].str() +
                          " outside [0, " + p.original_domains[i].str() + ")");

  const std::size_t Bp = p.merged_count();
  std::vector<Int> y(Bp, Int(0));
  for (std::size_t g = 0; g < Bp; ++g)
    for (auto i : p.groups[g]) y[g] = y[g] * p.original_domains[i] + tuple[i];

  EncodedTuple enc;
  enc.memory_bits = 0;
  Int v_prev = 0;
  for (std::size_t g = 0; g + 1 < Bp; ++g) {
    Int u = y[g] / p.carry_sizes[g + 1];
    Int v = y[g] % p.carry_sizes[g + 1];
    Int z = v_prev * p.unit_sizes[g] + u;
    enc.memory_bits |= z << p.field_offsets[g];
    v_prev = v;
  }
  Int top = Bp == 0 ? Int(0) : y[Bp - 1];
  Int z_last = top * p.carry_sizes.back() + v_prev;
  const std::size_t low = p.last_low_width;
  enc.memory_bits |= (z_last & (pow2(low) - 1)) << p.field_offsets.back();
  enc.spill = z_last >> low;
  if (p.keyed) enc.spill += tuple.back() * p.key_stride;
  return enc;
}

Int radix_key(const RadixPlan& p, const Int& spill) {
  if (!p.keyed) throw ParameterError("radix_key: plan is not keyed");
  if (spill < 0 || spill >= p.K) throw IntegrityError("radix_key: spillover outside [0, K)");
  return spill / p.key_stride;
}

Int radix_decode_element(const RadixPlan& p, const BitSource& mem, const Int& spill,
                         std::size_t i, ProbeMeter& meter, std::vector<std::size_t>* touched) {
  if (i >= p.size()) throw RangeError("radix_decode_element: index out of range");
  if (spill < 0 || spill >= p.K) throw IntegrityError("radix_decode_element: spillover outside [0, K)");
  ++meter.spill_reads;
  if (p.keyed && i + 1 == p.size()) return spill / p.key_stride;

  const std::size_t Bp = p.merged_count();
  const std::size_t g = p.group_of[i];
  const std::size_t last = Bp - 1;

  auto field = [&](std::size_t f) -> Int {
    if (touched) touched->push_back(f);
    return mem.read(p.field_offsets[f], p.digit_widths[f], meter);
  };
  auto z_last = [&]() -> Int {
    if (touched) touched->push_back(last);
    Int s = p.keyed ? Int(spill % p.key_stride) : spill;
    Int z = (s << p.last_low_width) + mem.read(p.field_offsets[last], p.last_low_width, meter);
    if (z >= last_range(p)) throw IntegrityError("radix_decode_element: final digit out of range");
    return z;
  };

  Int y;
  if (g == last) {
    y = z_last() / p.carry_sizes.back();
  } else {
    Int zg = field(g);
    if (zg >= p.carry_sizes[g] * p.unit_sizes[g])
      throw IntegrityError("radix_decode_element: digit " + std::to_string(g) + " out of range");
    Int u = zg % p.unit_sizes[g];
    Int v;
    if (g + 1 == last) {
      v = z_last() % p.carry_sizes[g + 1];
    } else {
      Int zn = field(g + 1);
      v = zn / p.unit_sizes[g + 1];
    }
    if (v >= p.carry_sizes[g + 1])
      throw IntegrityError("radix_decode_element: carry digit out of range");
    y = u * p.carry_sizes[g + 1] + v;
  }
  if (y >= p.merged_domains[g])
    throw IntegrityError("radix_decode_element: merged value " + y.str() + " out of range");
  return (y / p.inner[i]) % p.original_domains[i];
}

std::vector<Int> radix_decode_all(const RadixPlan& p, const EncodedTuple& enc) {
  IntSource src(enc.memory_bits, p.m, std::max<std::size_t>(p.w, 1));
  ProbeMeter meter;
  std::vector<Int> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    out.push_back(radix_decode_element(p, src, enc.spill, i, meter));
  return out;
}

std::size_t AlignedLayout::key_of_top(const Int& top) const {
  if (top < 0 || top >= K_top) throw RangeError("key_of_top: value outside [0, K')");
  auto it = std::upper_bound(top_starts.begin(), top_starts.end(), top);
  return static_cast<std::size_t>(it - top_starts.begin()) - 1;
}

AlignedLayout sum_align(const std::vector<Int>& counts, std::size_t low_width) {
  AlignedLayout a;
  a.low_width = low_width;
  const Int unit = pow2(low_width);
  Int top = 0;
  for (const auto& c : counts) {
    if (c < 0) throw ParameterError("sum_align: negative count");
    a.top_starts.push_back(top);
    a.starts.push_back(top * unit);
    top += ceil_div(c, unit);
  }
  a.K_top = top;
  // Keys with zero count share their successor's start; key_of_top picks the
  // last key at a start, which is the one that owns the interval.
  return a;
}

nlohmann::json to_json(const RadixPlan& p) {
  auto strs = [](const std::vector<Int>& v) {
    std::vector<std::string> s;
    for (const auto& x : v) s.push_back(x.str());
    return s;
  };
  return nlohmann::json{{"original_domains", strs(p.original_domains)},
                        {"merged_domains", strs(p.merged_domains)},
                        {"groups", p.groups},
                        {"digit_widths", p.digit_widths},
                        {"unit_sizes", strs(p.unit_sizes)},
                        {"carry_sizes", strs(p.carry_sizes)},
                        {"field_offsets", p.field_offsets},
                        {"m", p.m},
                        {"w", p.w},
                        {"last_low_width", p.last_low_width},
                        {"keyed", p.keyed},
                        {"key_stride", p.key_stride.str()},
                        {"K", p.K.str()},
                        {"K_bound", p.K_bound.str()}};
}

}  // namespace srank
