#pragma once
// Construction parameters and their validation.

#include "srank/model.hpp"

#include <map>
#include <optional>
#include <string>

namespace srank {

enum class Mode { strict, relaxed };
enum class Engine { enumeration, probe };
enum class PathChoice { automatic, small, large };
enum class TermMode { dyadic, direct };

struct Caps {
  std::uint64_t max_s_tuples = 1u << 20;  // s-tuples tabulated by the probe engine (small path)
  std::uint64_t max_j_tuples = 1u << 16;  // j-vectors glued by the probe engine (large path)
  std::uint64_t max_grid = 1u << 22;      // grid points of one approximation certificate
};

struct Params {
  std::size_t n = 0;
  std::size_t w = 0;
  std::size_t B = 2;
  std::size_t t = 1;
  Mode mode = Mode::relaxed;
  Caps caps;
  Engine engine = Engine::probe;
  PathChoice path = PathChoice::automatic;
  TermMode terms = TermMode::direct;
  bool enforce_wmin = true;
  // Base spillover domain is 2^w + pad; default pad = n * 2^{w/2}.
  std::optional<Int> base_pad;
  // Large-path overrides (relaxed mode only).
  std::optional<Rat> epsilon;
  std::optional<std::size_t> band;       // half-width h of the per-child sum band
  std::optional<std::size_t> rect_side;  // max rectangle side, in grid points
  std::optional<std::size_t> degree;     // d of the local approximation
  Rat window_scale{1, 4};                // c in side <= c * sqrt(l) / 2

  std::size_t block_len() const;  // B^t * w
  Int pad() const;
};

// Smallest even w with prod_i G_i * n * 2^{w/2} <= 2^w, where
// G_i = max(34B, 32B(l_i + 1), B^2 w^B 2^9) and l_i = B^{i-1} w.
std::size_t w_min(std::size_t t, std::size_t B, std::size_t n);
Int growth_factor(std::size_t B, std::size_t l, std::size_t w);

// Throws ParameterError naming the violated condition.
void validate(const Params& p);

std::string to_string(Mode m);
std::string to_string(Engine e);
Mode parse_mode(const std::string& s);
Engine parse_engine(const std::string& s);
PathChoice parse_path(const std::string& s);
TermMode parse_terms(const std::string& s);
Rat parse_rational(const std::string& s);

// Flat key=value configuration; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);
// Applies recognized keys; unknown keys raise ConfigError.
void apply_config(Params& p, const std::map<std::string, std::string>& kv);

}  // namespace srank
