#pragma once
// Input bit arrays: a header line `n=<int>` (optionally followed by ` format=hex`
// or ` format=raw`) and then the body. Raw bodies pack 8 bits per byte,
// least-significant bit first; hex bodies hold the same bytes as hex digit
// pairs, whitespace ignored. The header may instead live in `<path>.hdr`.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace srank {

using Bits = std::vector<std::uint8_t>;  // one 0/1 entry per position

Bits read_bitfile(const std::string& path);
void write_bitfile(const std::string& path, const Bits& bits, bool hex);

Bits decode_bit_body(const std::string& body, std::size_t n, bool hex);
std::string encode_bit_body(const Bits& bits, bool hex);

Bits random_bits(std::size_t n, std::uint64_t seed, double density = 0.5);

}  // namespace srank
