#include "srank/params.hpp"

#include <fstream>
#include <sstream>

namespace srank {

std::size_t Params::block_len() const {
  std::size_t b = w;
  for (std::size_t i = 0; i < t; ++i) b *= B;
  return b;
}

Int Params::pad() const {
  if (base_pad) return *base_pad;
  return Int(n) * pow2(w / 2);
}

Int growth_factor(std::size_t B, std::size_t l, std::size_t w) {
  Int a = 34 * Int(B);
  Int b = 32 * Int(B) * Int(l + 1);
  Int c = Int(B) * Int(B) * pow(Int(w), static_cast<unsigned>(B)) * 512;
  return std::max({a, b, c});
}

std::size_t w_min(std::size_t t, std::size_t B, std::size_t n) {
  for (std::size_t w = 2; w <= 1 << 14; w += 2) {
    Int prod = Int(n) * pow2(w / 2);
    std::size_t l = w;
    for (std::size_t i = 1; i <= t; ++i) {
      prod *= growth_factor(B, l, w);
      l *= B;
    }
    if (prod <= pow2(w)) return w;
  }
  throw ParameterError("w_min: no word size up to 2^14 satisfies the growth audit");
}

void validate(const Params& p) {
  if (p.n == 0) throw ParameterError("n must be positive");
  if (p.w < 2 || p.w % 2 != 0) throw ParameterError("w must be even and >= 2");
  if (p.B < 2) throw ParameterError("B must be >= 2");
  if (p.t < 1) throw ParameterError("t must be >= 1");
  if (p.mode == Mode::strict) {
    // w >= 7 log2 n  <=>  2^w >= n^7
    if (pow2(p.w) < pow(Int(p.n), 7u))
      throw ParameterError("strict mode needs w >= 7 log2 n (w=" + std::to_string(p.w) +
                           ", n=" + std::to_string(p.n) + ")");
    // B = round(w^{1/3})  <=>  (2B-1)^3 <= 8w < (2B+1)^3
    std::size_t lo = (2 * p.B - 1) * (2 * p.B - 1) * (2 * p.B - 1);
    std::size_t hi = (2 * p.B + 1) * (2 * p.B + 1) * (2 * p.B + 1);
    if (!(lo <= 8 * p.w && 8 * p.w < hi))
      throw ParameterError("strict mode needs B = round(w^{1/3}) (B=" + std::to_string(p.B) +
                           ", w=" + std::to_string(p.w) + ")");
    if (p.epsilon || p.band)
      throw ParameterError("strict mode does not accept epsilon/band overrides");
  } else if (p.enforce_wmin) {
    std::size_t wm = w_min(p.t, p.B, p.n);
    if (p.w < wm)
      throw ParameterError("relaxed mode needs w >= w_min(t,B,n) = " + std::to_string(wm) +
                           " (set enforce_wmin=false to build below it)");
  }
  if (p.base_pad && *p.base_pad < 0) throw ParameterError("base_pad must be nonnegative");
  if (p.window_scale <= 0) throw ParameterError("window_scale must be positive");
}

std::string to_string(Mode m) { return m == Mode::strict ? "strict" : "relaxed"; }
std::string to_string(Engine e) { return e == Engine::enumeration ? "enum" : "probe"; }

Mode parse_mode(const std::string& s) {
  if (s == "strict") return Mode::strict;
  if (s == "relaxed") return Mode::relaxed;
  throw ConfigError("mode must be strict|relaxed, got '" + s + "'");
}

Engine parse_engine(const std::string& s) {
  if (s == "enum") return Engine::enumeration;
  if (s == "probe") return Engine::probe;
  throw ConfigError("engine must be enum|probe, got '" + s + "'");
}

PathChoice parse_path(const std::string& s) {
  if (s == "auto") return PathChoice::automatic;
  if (s == "small") return PathChoice::small;
  if (s == "large") return PathChoice::large;
  throw ConfigError("path must be auto|small|large, got '" + s + "'");
}

TermMode parse_terms(const std::string& s) {
  if (s == "dyadic") return TermMode::dyadic;
  if (s == "direct") return TermMode::direct;
  throw ConfigError("terms must be dyadic|direct, got '" + s + "'");
}

Rat parse_rational(const std::string& s) {
  auto slash = s.find('/');
  auto caret = s.find("2^");
  try {
    if (caret == 0) {
      long e = std::stol(s.substr(2));
      return e >= 0 ? Rat(pow2(e)) : Rat(Int(1), pow2(-e));
    }
    if (slash == std::string::npos) return Rat(Int(s));
    return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw ConfigError("not a rational: '" + s + "'");
  }
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true|false, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(Params& p, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "w") p.w = to_size(k, v);
    else if (k == "B") p.B = to_size(k, v);
    else if (k == "t") p.t = to_size(k, v);
    else if (k == "n") p.n = to_size(k, v);
    else if (k == "mode") p.mode = parse_mode(v);
    else if (k == "engine") p.engine = parse_engine(v);
    else if (k == "path") p.path = parse_path(v);
    else if (k == "terms") p.terms = parse_terms(v);
    else if (k == "enforce_wmin") p.enforce_wmin = to_bool(k, v);
    else if (k == "base_pad") p.base_pad = Int(v);
    else if (k == "epsilon") p.epsilon = parse_rational(v);
    else if (k == "band") p.band = to_size(k, v);
    else if (k == "rect_side") p.rect_side = to_size(k, v);
    else if (k == "degree") p.degree = to_size(k, v);
    else if (k == "window_scale") p.window_scale = parse_rational(v);
    else if (k == "max_s_tuples") p.caps.max_s_tuples = to_size(k, v);
    else if (k == "max_j_tuples") p.caps.max_j_tuples = to_size(k, v);
    else if (k == "max_grid") p.caps.max_grid = to_size(k, v);
    else throw ConfigError("unknown config key '" + k + "'");
  }
}

}  // namespace srank
