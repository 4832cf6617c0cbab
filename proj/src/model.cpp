#include "srank/model.hpp"

#include <gmp.h>

namespace srank {

Int pow2(std::size_t e) {
  Int r = 1;
  r <<= e;
  return r;
}

std::size_t bit_length(const Int& v) {
  if (v <= 0) return 0;
  return mpz_sizeinbase(v.backend().data(), 2);
}

std::size_t ceil_log2(const Int& v) {
  if (v <= 1) return 0;
  Int m = v - 1;
  return bit_length(m);
}

Int ceil_div(const Int& a, const Int& b) {
  Int q, r;
  divide_qr(a, b, q, r);
  if (r != 0) ++q;
  return q;
}

Int binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  Int r;
  mpz_bin_uiui(r.backend().data(), n, k);
  return r;
}

std::string to_string(const Int& v) { return v.str(); }

namespace {

std::uint64_t low_limb(const Int& v, std::size_t shift) {
  // 64 bits of v starting at bit `shift`.
  const auto* z = v.backend().data();
  std::size_t limb = shift / GMP_NUMB_BITS;
  std::size_t off = shift % GMP_NUMB_BITS;
  std::size_t n = mpz_size(z);
  std::uint64_t lo = limb < n ? mpz_getlimbn(z, limb) : 0;
  std::uint64_t hi = limb + 1 < n ? mpz_getlimbn(z, limb + 1) : 0;
  if (off == 0) return lo;
  return (lo >> off) | (hi << (64 - off));
}

}  // namespace

std::size_t BitArena::append_bits(const Int& value, std::size_t width) {
  if (value < 0 || bit_length(value) > width)
    throw EncodingError("append_bits: value " + value.str() + " does not fit " +
                        std::to_string(width) + " bits");
  std::size_t start = length_;
  std::size_t done = 0;
  while (done < width) {
    std::size_t chunk = std::min<std::size_t>(64, width - done);
    std::uint64_t bits = low_limb(value, done);
    if (chunk < 64) bits &= (std::uint64_t{1} << chunk) - 1;
    append_u64(bits, chunk);
    done += chunk;
  }
  return start;
}

std::size_t BitArena::append_u64(std::uint64_t value, std::size_t width) {
  std::size_t start = length_;
  if (width == 0) return start;
  if (width < 64) value &= (std::uint64_t{1} << width) - 1;
  std::size_t need = (length_ + width + 63) / 64;
  if (limbs_.size() < need) limbs_.resize(need, 0);
  std::size_t pos = length_;
  std::size_t idx = pos >> 6, off = pos & 63;
  limbs_[idx] |= value << off;
  if (off != 0 && off + width > 64) limbs_[idx + 1] |= value >> (64 - off);
  length_ += width;
  return start;
}

Int BitArena::peek(std::size_t offset, std::size_t width) const {
  if (offset + width > length_ || offset + width < offset)
    throw RangeError("bit range [" + std::to_string(offset) + ", +" + std::to_string(width) +
                     ") beyond arena length " + std::to_string(length_));
  Int r = 0;
  std::size_t done = 0;
  // Collect 64-bit chunks from the most significant end.
  std::vector<std::uint64_t> chunks;
  while (done < width) {
    std::size_t chunk = std::min<std::size_t>(64, width - done);
    std::size_t pos = offset + done;
    std::size_t idx = pos >> 6, off = pos & 63;
    std::uint64_t v = limbs_[idx] >> off;
    if (off != 0 && idx + 1 < limbs_.size()) v |= limbs_[idx + 1] << (64 - off);
    if (chunk < 64) v &= (std::uint64_t{1} << chunk) - 1;
    chunks.push_back(v);
    done += chunk;
  }
  for (std::size_t i = chunks.size(); i-- > 0;) {
    r <<= 64;
    r += chunks[i];
  }
  return r;
}

BitArena BitArena::from_limbs(std::vector<std::uint64_t> limbs, std::size_t length) {
  if (limbs.size() != (length + 63) / 64) throw ParameterError("limb count does not match length");
  BitArena a;
  a.limbs_ = std::move(limbs);
  a.length_ = length;
  if (length % 64 != 0 && !a.limbs_.empty())
    a.limbs_.back() &= (std::uint64_t{1} << (length % 64)) - 1;
  return a;
}

Int read_word(const BitArena& arena, std::size_t offset, std::size_t w, ProbeMeter& meter) {
  if (offset + w > arena.length())
    throw RangeError("read_word at " + std::to_string(offset) + " (w=" + std::to_string(w) +
                     ") beyond arena length " + std::to_string(arena.length()));
  ++meter.word_reads;
  return arena.peek(offset, w);
}

Int read_bits(const BitArena& arena, std::size_t offset, std::size_t width, std::size_t w,
              ProbeMeter& meter) {
  if (width == 0) return 0;
  if (offset + width > arena.length())
    throw RangeError("field [" + std::to_string(offset) + ", +" + std::to_string(width) +
                     ") beyond arena length " + std::to_string(arena.length()));
  Int r = 0;
  std::size_t done = 0;
  std::vector<Int> parts;
  parts.reserve(width / w + 1);
  while (done < width) {
    std::size_t take = std::min(w, width - done);
    std::size_t pos = offset + done;
    Int word;
    if (pos + w <= arena.length()) {
      word = read_word(arena, pos, w, meter);
    } else {
      // Window slid back so it stays inside the arena.
      std::size_t start = arena.length() >= w ? arena.length() - w : 0;
      if (arena.length() >= w) {
        word = read_word(arena, start, w, meter) >> (pos - start);
      } else {
        ++meter.word_reads;
        word = arena.peek(pos, arena.length() - pos);
      }
    }
    if (take < w) word &= pow2(take) - 1;
    parts.push_back(std::move(word));
    done += take;
  }
  std::size_t shift = 0;
  for (auto& p : parts) {
    r += p << shift;
    shift += w;
  }
  return r;
}

SpilloverValue::SpilloverValue(Int k_, Int K_) : k(std::move(k_)), K(std::move(K_)) {
  if (k < 0 || k >= K) throw RangeError("spillover " + k.str() + " outside [0, " + K.str() + ")");
}

}  // namespace srank

namespace srank {

Int IntSource::read(std::size_t offset, std::size_t width, ProbeMeter& meter) const {
  if (offset + width > length_)
    throw RangeError("field [" + std::to_string(offset) + ", +" + std::to_string(width) +
                     ") beyond source length " + std::to_string(length_));
  if (width == 0) return 0;
  meter.word_reads += (width + w_ - 1) / w_;
  return (bits_ >> offset) & (pow2(width) - 1);
}

}  // namespace srank
