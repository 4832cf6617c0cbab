#pragma once
// Shared helpers for the combiner engines.

#include "srank/combiner.hpp"

namespace srank::detail {

const Int& zero();

// Truncated convolution: out[s] = sum_{a+b=s} x[a] y[b] for s < limit.
std::vector<Int> convolve(const std::vector<Int>& x, const std::vector<Int>& y, std::size_t limit);

inline const Int& at_or_zero(const std::vector<Int>& v, long i) {
  return (i < 0 || i >= static_cast<long>(v.size())) ? zero() : v[static_cast<std::size_t>(i)];
}

}  // namespace srank::detail
