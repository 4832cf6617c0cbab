#include "srank/bitfile.hpp"

#include "srank/model.hpp"

#include <fstream>
#include <sstream>

namespace srank {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Header {
  std::size_t n = 0;
  bool hex = false;
};

Header parse_header(const std::string& line) {
  Header h;
  std::istringstream in(line);
  std::string tok;
  bool have_n = false;
  while (in >> tok) {
    if (tok.rfind("n=", 0) == 0) {
      try {
        h.n = std::stoull(tok.substr(2));
      } catch (const std::exception&) {
        throw ConfigError("bad header token '" + tok + "'");
      }
      have_n = true;
    } else if (tok == "format=hex") {
      h.hex = true;
    } else if (tok == "format=raw") {
      h.hex = false;
    } else {
      throw ConfigError("bad header token '" + tok + "'");
    }
  }
  if (!have_n) throw ConfigError("header line lacks n=<int>");
  return h;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bits decode_bit_body(const std::string& body, std::size_t n, bool hex) {
  std::vector<std::uint8_t> bytes;
  if (hex) {
    int hi = -1;
    for (char c : body) {
      if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
      int v = hex_value(c);
      if (v < 0) throw ConfigError(std::string("non-hex character '") + c + "' in bit body");
      if (hi < 0) {
        hi = v;
      } else {
        bytes.push_back(static_cast<std::uint8_t>(hi * 16 + v));
        hi = -1;
      }
    }
    if (hi >= 0) throw ConfigError("odd number of hex digits in bit body");
  } else {
    bytes.assign(body.begin(), body.end());
  }
  if (bytes.size() * 8 < n)
    throw ConfigError("bit body holds " + std::to_string(bytes.size() * 8) + " bits, header says n=" +
                      std::to_string(n));
  Bits bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return bits;
}

std::string encode_bit_body(const Bits& bits, bool hex) {
  std::string bytes((bits.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
  if (!hex) return bytes;
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto b = static_cast<unsigned char>(bytes[i]);
    out += digits[b >> 4];
    out += digits[b & 15];
    if (i % 32 == 31) out += '\n';
  }
  out += '\n';
  return out;
}

Bits read_bitfile(const std::string& path) {
  std::string data = slurp(path);
  if (data.rfind("n=", 0) == 0) {
    auto nl = data.find('\n');
    if (nl == std::string::npos) throw ConfigError("header line is not terminated");
    Header h = parse_header(data.substr(0, nl));
    return decode_bit_body(data.substr(nl + 1), h.n, h.hex);
  }
  std::string side = slurp(path + ".hdr");
  auto nl = side.find('\n');
  Header h = parse_header(side.substr(0, nl));
  return decode_bit_body(data, h.n, h.hex);
}

void write_bitfile(const std::string& path, const Bits& bits, bool hex) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << "n=" << bits.size() << (hex ? " format=hex" : " format=raw") << '\n';
  f << encode_bit_body(bits, hex);
}

Bits random_bits(std::size_t n, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  Bits b(n);
  for (auto& x : b) x = coin(rng) ? 1 : 0;
  return b;
}

}  // namespace srank
