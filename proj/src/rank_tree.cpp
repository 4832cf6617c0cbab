#include "srank/rank_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace srank {

std::vector<CodecPtr> build_codecs(const Params& p) {
  validate(p);
  std::vector<CodecPtr> chain{leaf_codec(p.w, p.pad())};
  for (std::size_t j = 1; j <= p.t; ++j) chain.push_back(combine(chain.back(), p, p.engine));
  return chain;
}

namespace {

struct NodeCode {
  Int mem;
  Int spill;
};

NodeCode encode_node(const RankStructure& rs, const Bits& a, std::size_t level, std::size_t start) {
  const LevelCodec& c = *rs.codecs[level];
  if (level == 0) {
    Int word = 0;
    for (std::size_t i = c.w; i-- > 0;) {
      word <<= 1;
      if (start + i < a.size() && a[start + i]) word += 1;
    }
    return {Int(0), leaf_encode(c, word)};
  }
  const LevelCodec& child = *rs.codecs[level - 1];
  const std::size_t B = c.B, head = (B - 1) * c.w;
  std::vector<Int> ks;
  Int mem = 0;
  for (std::size_t i = 0; i < B; ++i) {
    auto cc = encode_node(rs, a, level - 1, start + i * child.len);
    ks.push_back(cc.spill);
    mem += cc.mem << (head + i * child.mem_bits);
  }
  auto enc = c.combiner->encode(ks);
  mem += enc.memory_bits;
  return {mem, enc.spill};
}

}  // namespace

RankStructure build(const Bits& array, const Params& p) { return build(array, p, build_codecs(p)); }

RankStructure build(const Bits& array, const Params& p, std::vector<CodecPtr> codecs) {
  if (array.empty()) throw ParameterError("build: empty array");
  if (p.n != array.size())
    throw ParameterError("build: params.n=" + std::to_string(p.n) + " but the array holds " +
                         std::to_string(array.size()) + " bits");
  if (codecs.size() != p.t + 1) throw ParameterError("build: codec chain depth != t + 1");
  RankStructure rs;
  rs.params = p;
  rs.n = array.size();
  rs.codecs = std::move(codecs);
  rs.block_len = p.block_len();
  rs.blocks = (rs.n + rs.block_len - 1) / rs.block_len;
  rs.pad_bits = rs.blocks * rs.block_len - rs.n;
  rs.prefix_width = rs.blocks > 1 ? bit_length(Int(rs.n)) : 0;
  rs.mem_bits = rs.block_len - p.w;
  const Int& K = rs.top().K;
  rs.spill_width = std::max(p.w + 1, ceil_log2(K));

  std::size_t ones = 0;
  for (std::size_t b = 1; b < rs.blocks; ++b) {
    for (std::size_t i = (b - 1) * rs.block_len; i < b * rs.block_len; ++i) ones += array[i];
    rs.arena.append_u64(ones, rs.prefix_width);
  }
  for (std::size_t b = 0; b < rs.blocks; ++b) {
    auto code = encode_node(rs, array, p.t, b * rs.block_len);
    rs.arena.append_bits(code.mem, rs.mem_bits);
    rs.arena.append_bits(code.spill, rs.spill_width);
  }
  return rs;
}

std::size_t rank(const RankStructure& rs, std::size_t u, ProbeMeter& meter) {
  if (u > rs.n) throw RangeError("rank: u=" + std::to_string(u) + " > n=" + std::to_string(rs.n));
  const std::size_t w = rs.params.w;
  std::size_t b = u / rs.block_len, local = u % rs.block_len;
  if (b == rs.blocks) {  // u = n on a block boundary
    --b;
    local = rs.block_len;
  }
  std::size_t r = 0;
  if (b > 0) r = read_bits(rs.arena, (b - 1) * rs.prefix_width, rs.prefix_width, w, meter).convert_to<std::size_t>();
  if (local == 0) return r;
  std::size_t base = rs.block_offset(b);
  Int spill = read_bits(rs.arena, base + rs.mem_bits, rs.spill_width, w, meter);
  if (spill >= rs.top().K) throw IntegrityError("rank: top spillover outside [0, K)");
  for (std::size_t level = rs.params.t; level > 0; --level) {
    const LevelCodec& c = *rs.codecs[level];
    const LevelCodec& child = *c.child;
    ArenaSource src(rs.arena, base, w);
    std::size_t i = local / child.len;
    if (i == c.B) return r + c.combiner->total_sum(spill);
    local %= child.len;
    if (local == 0) return r + c.combiner->prefix_sum(src, spill, i, meter);
    auto [T, k] = c.combiner->descend(src, spill, i + 1, meter);
    r += T;
    spill = std::move(k);
    base += (c.B - 1) * w + i * child.mem_bits;
  }
  return r + leaf_rank(*rs.codecs[0], spill, local);
}

std::size_t oracle_rank(const Bits& array, std::size_t u) {
  if (u > array.size()) throw RangeError("oracle_rank: u > n");
  std::size_t r = 0;
  for (std::size_t i = 0; i < u; ++i) r += array[i] ? 1 : 0;
  return r;
}

std::vector<std::size_t> oracle_table(const Bits& array) {
  std::vector<std::size_t> t(array.size() + 1, 0);
  for (std::size_t i = 0; i < array.size(); ++i) t[i + 1] = t[i] + (array[i] ? 1 : 0);
  return t;
}

nlohmann::json space_audit(const RankStructure& rs) {
  nlohmann::json j;
  const std::size_t total = rs.arena.length();
  j["n"] = rs.n;
  j["total_bits"] = total;
  j["redundancy_bits"] = static_cast<long long>(total) - static_cast<long long>(rs.n);
  j["blocks"] = rs.blocks;
  j["block_len"] = rs.block_len;
  j["pad_bits"] = rs.pad_bits;
  j["prefix_bits"] = (rs.blocks - 1) * rs.prefix_width;
  j["prefix_width"] = rs.prefix_width;
  j["per_block"] = {{"mem_bits", rs.mem_bits}, {"spill_width", rs.spill_width},
                    {"spill_fits_w_plus_1", rs.top().K <= pow2(rs.params.w + 1)}};
  // Redundancy allowed by the block count: one bit per tree plus the prefix table.
  std::size_t allowed = rs.blocks + (rs.blocks - 1) * bit_length(Int(rs.n));
  j["redundancy_allowance"] = allowed;
  j["within_allowance"] = total <= rs.n + rs.pad_bits + allowed;
  j["information_floor_ok"] = total >= rs.n;
  // c with redundancy = n / w^{c t}, when the redundancy is positive.
  long long red = static_cast<long long>(total) - static_cast<long long>(rs.n);
  if (red > 0)
    j["c_measured"] = std::log(static_cast<double>(rs.n) / static_cast<double>(red)) /
                      (static_cast<double>(rs.params.t) * std::log(static_cast<double>(rs.params.w)));
  j["levels"] = size_ledger(rs.top());
  j["mode"] = to_string(rs.params.mode);
  j["engine"] = to_string(rs.params.engine);
  return j;
}

nlohmann::json params_to_json(const Params& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["w"] = p.w;
  j["B"] = p.B;
  j["t"] = p.t;
  j["mode"] = to_string(p.mode);
  j["engine"] = to_string(p.engine);
  j["path"] = p.path == PathChoice::automatic ? "auto" : p.path == PathChoice::small ? "small" : "large";
  j["terms"] = p.terms == TermMode::dyadic ? "dyadic" : "direct";
  j["enforce_wmin"] = p.enforce_wmin;
  j["caps"] = {{"max_s_tuples", p.caps.max_s_tuples},
               {"max_j_tuples", p.caps.max_j_tuples},
               {"max_grid", p.caps.max_grid}};
  if (p.base_pad) j["base_pad"] = p.base_pad->str();
  if (p.epsilon) j["epsilon"] = p.epsilon->str();
  if (p.band) j["band"] = *p.band;
  if (p.rect_side) j["rect_side"] = *p.rect_side;
  if (p.degree) j["degree"] = *p.degree;
  j["window_scale"] = p.window_scale.str();
  return j;
}

Params params_from_json(const nlohmann::json& j) {
  Params p;
  p.n = j.at("n").get<std::size_t>();
  p.w = j.at("w").get<std::size_t>();
  p.B = j.at("B").get<std::size_t>();
  p.t = j.at("t").get<std::size_t>();
  p.mode = parse_mode(j.at("mode").get<std::string>());
  p.engine = parse_engine(j.at("engine").get<std::string>());
  p.path = parse_path(j.at("path").get<std::string>());
  p.terms = parse_terms(j.at("terms").get<std::string>());
  p.enforce_wmin = j.at("enforce_wmin").get<bool>();
  const auto& c = j.at("caps");
  p.caps.max_s_tuples = c.at("max_s_tuples").get<std::uint64_t>();
  p.caps.max_j_tuples = c.at("max_j_tuples").get<std::uint64_t>();
  p.caps.max_grid = c.at("max_grid").get<std::uint64_t>();
  if (j.contains("base_pad")) p.base_pad = Int(j["base_pad"].get<std::string>());
  if (j.contains("epsilon")) p.epsilon = parse_rational(j["epsilon"].get<std::string>());
  if (j.contains("band")) p.band = j["band"].get<std::size_t>();
  if (j.contains("rect_side")) p.rect_side = j["rect_side"].get<std::size_t>();
  if (j.contains("degree")) p.degree = j["degree"].get<std::size_t>();
  p.window_scale = parse_rational(j.at("window_scale").get<std::string>());
  return p;
}

namespace {

constexpr char kMagic[8] = {'S', 'R', 'A', 'N', 'K', 'B', 'I', 'N'};

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    int c = in.get();
    if (c == EOF) throw IntegrityError("load: truncated input");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

nlohmann::json header_of(const RankStructure& rs) {
  nlohmann::json h;
  h["params"] = params_to_json(rs.params);
  h["n"] = rs.n;
  h["block_len"] = rs.block_len;
  h["blocks"] = rs.blocks;
  h["pad_bits"] = rs.pad_bits;
  h["prefix_width"] = rs.prefix_width;
  h["mem_bits"] = rs.mem_bits;
  h["spill_width"] = rs.spill_width;
  nlohmann::json ks = nlohmann::json::array();
  for (const auto& c : rs.codecs) ks.push_back(c->K.str());
  h["level_K"] = ks;
  return h;
}

}  // namespace

void save(const RankStructure& rs, std::ostream& out) {
  out.write(kMagic, 8);
  put_u32(out, kFormatVersion);
  std::string h = header_of(rs).dump();
  put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  put_u64(out, rs.arena.length());
  const auto& limbs = rs.arena.limbs();
  put_u64(out, limbs.size());
  for (auto l : limbs) put_u64(out, l);
  if (!out) throw std::runtime_error("save: write failed");
}

RankStructure load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic))
    throw IntegrityError("load: bad magic");
  auto version = get_uint(in, 4);
  if (version != kFormatVersion)
    throw IntegrityError("load: unsupported format version " + std::to_string(version));
  auto hlen = get_uint(in, 8);
  if (hlen > (1u << 24)) throw IntegrityError("load: header too large");
  std::string h(hlen, '\0');
  if (!in.read(h.data(), static_cast<std::streamsize>(hlen))) throw IntegrityError("load: truncated header");
  nlohmann::json hdr;
  try {
    hdr = nlohmann::json::parse(h);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("load: malformed header: ") + e.what());
  }
  RankStructure rs;
  rs.params = params_from_json(hdr.at("params"));
  rs.n = hdr.at("n").get<std::size_t>();
  rs.block_len = hdr.at("block_len").get<std::size_t>();
  rs.blocks = hdr.at("blocks").get<std::size_t>();
  rs.pad_bits = hdr.at("pad_bits").get<std::size_t>();
  rs.prefix_width = hdr.at("prefix_width").get<std::size_t>();
  rs.mem_bits = hdr.at("mem_bits").get<std::size_t>();
  rs.spill_width = hdr.at("spill_width").get<std::size_t>();
  auto bits = get_uint(in, 8);
  auto count = get_uint(in, 8);
  if (count != (bits + 63) / 64) throw IntegrityError("load: limb count does not match bit length");
  std::vector<std::uint64_t> limbs(count);
  for (auto& l : limbs) l = get_uint(in, 8);
  rs.arena = BitArena::from_limbs(std::move(limbs), bits);

  rs.codecs = build_codecs(rs.params);
  const auto& ks = hdr.at("level_K");
  if (ks.size() != rs.codecs.size()) throw IntegrityError("load: level count mismatch");
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (Int(ks[j].get<std::string>()) != rs.codecs[j]->K)
      throw IntegrityError("load: K of level " + std::to_string(j) + " differs from the rebuilt chain");
  if (rs.block_len != rs.params.block_len() || rs.mem_bits != rs.block_len - rs.params.w ||
      rs.blocks * rs.block_len != rs.n + rs.pad_bits ||
      bits != rs.block_offset(rs.blocks))
    throw IntegrityError("load: layout fields are inconsistent");
  return rs;
}

void save_file(const RankStructure& rs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save(rs, out);
}

RankStructure load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load(in);
}

}  // namespace srank
