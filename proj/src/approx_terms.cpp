#include "srank/binom_approx.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <map>
#include <set>

namespace srank {

// ---------------------------------------------------------------- IntSet

IntSet::IntSet(int lo_, int hi_) : lo(lo_) {
  std::size_t n = hi_ >= lo_ ? static_cast<std::size_t>(hi_ - lo_) + 1 : 0;
  bits.assign((n + 63) / 64, 0);
}

IntSet IntSet::singleton(int v) {
  IntSet s(v, v);
  s.insert(v);
  return s;
}

void IntSet::insert(int v) {
  if (v < lo || v > hi()) throw RangeError("IntSet::insert: value outside the set's window");
  auto k = static_cast<std::size_t>(v - lo);
  bits[k / 64] |= std::uint64_t{1} << (k % 64);
}

bool IntSet::contains(int v) const {
  if (v < lo || bits.empty() || v > hi()) return false;
  auto k = static_cast<std::size_t>(v - lo);
  return (bits[k / 64] >> (k % 64)) & 1u;
}

bool IntSet::empty() const {
  return std::all_of(bits.begin(), bits.end(), [](std::uint64_t b) { return b == 0; });
}

std::size_t IntSet::size() const {
  std::size_t n = 0;
  for (auto b : bits) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

std::vector<int> IntSet::elements() const {
  std::vector<int> v;
  for (std::size_t i = 0; i < bits.size(); ++i)
    for (std::uint64_t b = bits[i]; b; b &= b - 1)
      v.push_back(lo + static_cast<int>(i * 64 + static_cast<std::size_t>(std::countr_zero(b))));
  return v;
}

Int IntegerDecomp::value_at(int x, int y) const {
  Int s = 0;
  for (const auto& t : terms)
    if (t.X.contains(x) && t.Y.contains(y)) s += t.weight;
  return s;
}

// ---------------------------------------------------------------- integer terms

IntegerDecomp integer_terms(const RectDecomp& rd, std::size_t w, TermMode mode, bool certify) {
  if (w == 0 || w % 2 != 0) throw ParameterError("integer_terms: w must be even and positive");
  IntegerDecomp id;
  id.l = rd.l;
  id.w = w;
  id.Mx = rd.Mx;
  id.My = rd.My;
  id.eps = rd.eps;
  id.mode = mode;
  id.r_rect = rd.r;
  const Rat half_scale(pow2(w / 2));

  for (std::size_t k = 0; k < rd.rects.size(); ++k) {
    RectEval ev(rd, k);
    const Rect& R = rd.rects[k];
    std::map<std::pair<int, std::uint32_t>, std::vector<Int>> rfloor;
    std::map<std::pair<std::pair<int, std::uint32_t>, std::pair<int, std::uint32_t>>,
             std::vector<std::pair<Int, Int>>>
        qunit;
    R.approx->for_each_product([&](const ProductTerm& p) {
      if (ev.vanishes(p)) return;
      auto key = std::make_pair(static_cast<int>(p.r), p.re);
      auto it = rfloor.find(key);
      if (it == rfloor.end()) {
        std::vector<Int> f;
        for (int y = R.ay; y <= R.by; ++y) {
          Rat v = half_scale * ev.r_tilde(p, y);
          f.push_back(numerator(v) / denominator(v));
        }
        it = rfloor.emplace(key, std::move(f)).first;
      }
      const auto& fr = it->second;
      // floor(coef * K_x) with K_x the unit-coefficient Q~ scaled by 2^{w/2}.
      auto qkey = std::make_pair(key, std::make_pair(static_cast<int>(p.q), p.qe));
      auto qt = qunit.find(qkey);
      if (qt == qunit.end()) {
        ProductTerm unit = p;
        unit.coef = 1;
        std::vector<std::pair<Int, Int>> ks;
        for (int x = R.ax; x <= R.bx; ++x) {
          Rat v = half_scale * ev.q_tilde(unit, x);
          ks.emplace_back(numerator(v), denominator(v));
        }
        qt = qunit.emplace(qkey, std::move(ks)).first;
      }
      std::vector<Int> fq;
      bool any = false;
      for (const auto& [num, den] : qt->second) {
        fq.push_back(p.coef * num / den);
        any = any || fq.back() != 0;
      }
      if (!any || std::all_of(fr.begin(), fr.end(), [](const Int& v) { return v == 0; })) return;

      if (mode == TermMode::dyadic) {
        // Clamp to w/2 bits; a factor equal to 1 loses one unit, which only grows E.
        const Int cap = pow2(w / 2) - 1;
        for (auto& v : fq) v = std::min(v, cap);
        std::vector<Int> frc = fr;
        for (auto& v : frc) v = std::min(v, cap);
        for (std::size_t j1 = 0; j1 < w / 2; ++j1) {
          IntSet X(R.ax, R.bx);
          for (int x = R.ax; x <= R.bx; ++x)
            if (bit_test(fq[static_cast<std::size_t>(x - R.ax)], static_cast<unsigned>(j1))) X.insert(x);
          if (X.empty()) continue;
          for (std::size_t j2 = 0; j2 < w / 2; ++j2) {
            IntSet Y(R.ay, R.by);
            for (int y = R.ay; y <= R.by; ++y)
              if (bit_test(frc[static_cast<std::size_t>(y - R.ay)], static_cast<unsigned>(j2))) Y.insert(y);
            if (Y.empty()) continue;
            id.terms.push_back(IntTerm{pow2(j1 + j2), X, std::move(Y)});
          }
        }
      } else {
        std::map<Int, IntSet> xl, yl;
        for (int x = R.ax; x <= R.bx; ++x) {
          const Int& v = fq[static_cast<std::size_t>(x - R.ax)];
          if (v == 0) continue;
          auto [pos, fresh] = xl.try_emplace(v, IntSet(R.ax, R.bx));
          pos->second.insert(x);
        }
        for (int y = R.ay; y <= R.by; ++y) {
          const Int& u = fr[static_cast<std::size_t>(y - R.ay)];
          if (u == 0) continue;
          auto [pos, fresh] = yl.try_emplace(u, IntSet(R.ay, R.by));
          pos->second.insert(y);
        }
        for (const auto& [v, X] : xl)
          for (const auto& [u, Y] : yl) id.terms.push_back(IntTerm{v * u, X, Y});
      }
    });
  }

  if (certify) {
    CertReport rep = verify_decomp(id);
    if (!rep.pass) throw CertificationError("integer decomposition: " + rep.witness);
  }
  return id;
}

// ---------------------------------------------------------------- reports

void CertReport::add(CheckResult c) {
  if (!c.pass && pass) {
    pass = false;
    witness = c.name + ": " + c.witness;
  }
  checks.push_back(std::move(c));
}

nlohmann::json CertReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : checks)
    cs.push_back({{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}, {"detail", c.detail}});
  return nlohmann::json{{"lemma", lemma},
                        {"params", params},
                        {"pass", pass},
                        {"witness", witness},
                        {"max_slack", rat_to_double(max_slack)},
                        {"max_slack_exact", rat_str(max_slack)},
                        {"r", r},
                        {"runtime_ms", runtime_ms},
                        {"checks", cs}};
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string pt(long x, long y) { return "(x=" + std::to_string(x) + ", y=" + std::to_string(y) + ")"; }

// sum_i Q_i(x) R_i(y) * 2 p_den on [0, sx] x [0, sy], grouped by R shape.
std::vector<Int> local_product_sums(const LocalApprox& la, std::size_t sx, std::size_t sy) {
  const Int M(la.M);
  std::map<std::pair<int, std::uint32_t>, std::vector<Int>> byR;
  la.for_each_product([&](const ProductTerm& p) {
    auto& acc = byR[{static_cast<int>(p.r), p.re}];
    if (acc.empty()) acc.assign(sx + 1, Int(0));
    for (std::size_t z = 0; z <= sx; ++z) acc[z] += p.coef * factor_value(p.q, p.qe, M, Int(z));
  });
  std::vector<Int> S((sx + 1) * (sy + 1), Int(0));
  for (const auto& [key, acc] : byR)
    for (std::size_t yz = 0; yz <= sy; ++yz) {
      Int rv = factor_value(static_cast<Factor>(key.first), key.second, M, Int(yz));
      for (std::size_t xz = 0; xz <= sx; ++xz) S[xz * (sy + 1) + yz] += acc[xz] * rv;
    }
  return S;
}

// Exact "value < 1" with a bit-length shortcut: log2(n/d) < bitlen(n) - (bitlen(d) - 1).
std::size_t shape_slot(Factor f, std::uint32_t e) {
  return static_cast<std::size_t>(e) * 4 + static_cast<std::size_t>(f);
}

}  // namespace

CertReport verify_decomp(const LocalApprox& la) {
  auto t0 = Clock::now();
  CertReport rep;
  rep.lemma = "local approximation";
  rep.params = {{"l", la.l}, {"alpha", rat_str(la.alpha)}, {"d", la.d}, {"M", la.M},
                {"epsilon", rat_str(la.epsilon)}};
  rep.r = la.product_count();

  rep.add({"P(0) = 1 - eps/2", la.P_at(0) == 1 - la.epsilon / 2, "", rat_str(la.P_at(0))});
  rep.add({"product count <= d^4 + d^2 + 1", Int(rep.r) <= la.product_bound(),
           std::to_string(rep.r), ""});
  rep.add({"constant-term budget", la.budget_ok(), "",
           "beta_00=" + std::to_string(rat_to_double(la.budget_lhs)) +
               " rhs=" + std::to_string(rat_to_double(la.budget_rhs))});

  // Factors nonnegative on the window.
  const Int M(la.M);
  CheckResult nonneg{"Q_i, R_i >= 0 on the window", true, "", ""};
  std::set<std::pair<int, std::uint32_t>> seen;
  la.for_each_product([&](const ProductTerm& p) {
    if (!nonneg.pass) return;
    if (p.coef < 0) {
      nonneg.pass = false;
      nonneg.witness = "negative coefficient";
      return;
    }
    for (auto [f, e] : {std::make_pair(p.q, p.qe), std::make_pair(p.r, p.re)}) {
      if (!seen.insert({static_cast<int>(f), e}).second) continue;
      for (std::size_t z = 0; z <= la.M; ++z)
        if (factor_value(f, e, M, Int(z)) < 0) {
          nonneg.pass = false;
          nonneg.witness = "z=" + std::to_string(z);
          return;
        }
    }
  });
  rep.add(nonneg);

  // Product identity and sandwich on the full grid.
  auto S = local_product_sums(la, la.M, la.M);
  CheckResult ident{"sum_i Q_i(x) R_i(y) = P(x+y)", true, "", ""};
  CheckResult sand{"(1-eps) C(l,a+x+y) <= C(l,a) ((1-alpha)/alpha)^{x+y} P(x+y) <= C(l,a+x+y)",
                   true, "", ""};
  std::vector<std::optional<Rat>> mid_cache(2 * la.M + 1);
  const Int Ca = binomial(la.l, la.a);
  const Rat rho(Int(la.l - la.a), Int(la.a));
  Rat worst = 0;
  for (std::size_t x = 0; x <= la.M; ++x)
    for (std::size_t y = 0; y <= la.M; ++y) {
      std::size_t t = x + y;
      const Int& s = S[x * (la.M + 1) + y];
      if (ident.pass && s != la.P_scaled(Int(t))) {
        ident.pass = false;
        ident.witness = pt(static_cast<long>(x), static_cast<long>(y));
      }
      if (!mid_cache[t]) {
        Rat rp = 1;
        for (std::size_t i = 0; i < t; ++i) rp *= rho;
        mid_cache[t] = Rat(Ca) * rp * Rat(s, 2 * la.p_den);
      }
      const Rat& mid = *mid_cache[t];
      Rat target(binomial(la.l, la.a + t));
      bool ok = (1 - la.epsilon) * target <= mid && mid <= target;
      Rat dev = (target - mid) / target;
      if (dev > worst) worst = dev;
      if (!ok && sand.pass) {
        sand.pass = false;
        sand.witness = pt(static_cast<long>(x), static_cast<long>(y));
      }
    }
  sand.detail = "max relative deviation " + std::to_string(rat_to_double(worst));
  rep.add(ident);
  rep.add(sand);
  rep.max_slack = worst / la.epsilon;
  rep.runtime_ms = ms_since(t0);
  return rep;
}

CertReport verify_decomp(const RectDecomp& rd) {
  auto t0 = Clock::now();
  CertReport rep;
  rep.lemma = "rectangle decomposition";
  rep.params = {{"l", rd.l}, {"M_x", rd.Mx}, {"M_y", rd.My}, {"eps", rat_str(rd.eps)},
                {"d", rd.d}, {"side", rd.side}, {"rects", rd.rects.size()}};
  rep.r = rd.r;

  const std::size_t gx = static_cast<std::size_t>(2 * rd.Mx + 1);
  const std::size_t gy = static_cast<std::size_t>(2 * rd.My + 1);

  // Rectangles partition the grid.
  std::vector<std::uint8_t> cover(gx * gy, 0);
  for (const auto& R : rd.rects)
    for (int x = R.ax; x <= R.bx; ++x)
      for (int y = R.ay; y <= R.by; ++y) {
        if (x < -rd.Mx || x > rd.Mx || y < -rd.My || y > rd.My) continue;
        auto& c = cover[static_cast<std::size_t>(x + rd.Mx) * gy + static_cast<std::size_t>(y + rd.My)];
        if (c < 2) ++c;
      }
  {
    CheckResult c{"rectangles partition the grid", true, "", ""};
    for (std::size_t i = 0; i < cover.size() && c.pass; ++i)
      if (cover[i] != 1) {
        c.pass = false;
        c.witness = pt(static_cast<long>(i / gy) - rd.Mx, static_cast<long>(i % gy) - rd.My);
      }
    rep.add(c);
  }

  // Binomial row cache for the oracle side.
  std::vector<Int> row(rd.l + 1);
  row[0] = 1;
  for (std::size_t k = 1; k <= rd.l; ++k) row[k] = row[k - 1] * (rd.l - k + 1) / k;
  const Int two_l = pow2(rd.l);

  CheckResult ident{"per-rectangle product sums match P", true, "", ""};
  CheckResult enn{"E(x,y) >= 0", true, "", ""};
  CheckResult fac{"0 <= Q~, R~ <= 1", true, "", ""};
  CheckResult cnt{"products per rectangle <= d^4 + d^2 + 1", true, "", ""};
  std::vector<Rat> rowsum(gx, Rat(0));

  for (std::size_t k = 0; k < rd.rects.size(); ++k) {
    const Rect& R = rd.rects[k];
    RectEval ev(rd, k);
    const LocalApprox& la = *R.approx;
    if (Int(la.product_count()) > la.product_bound() && cnt.pass) {
      cnt.pass = false;
      cnt.witness = "rect " + std::to_string(k);
    }
    // Factor bounds. R~ and the x-tables depend on the factor shape only; Q~ <= 1
    // reduces to coef <= floor(1 / (C scale max g_q)) per shape pair.
    if (fac.pass) {
      std::map<std::size_t, bool> r_ok, q_ok;
      std::map<std::pair<std::size_t, std::size_t>, Int> coef_cap;
      la.for_each_product([&](const ProductTerm& p) {
        if (!fac.pass || ev.vanishes(p)) return;
        if (p.coef < 0) {
          fac.pass = false;
          fac.witness = "rect " + std::to_string(k) + " negative coefficient";
          return;
        }
        std::size_t rs = shape_slot(p.r, p.re), qs = shape_slot(p.q, p.qe);
        auto [ri, rfresh] = r_ok.try_emplace(rs, true);
        if (rfresh)
          for (int y = R.ay; y <= R.by; ++y) {
            Rat v = ev.r_tilde(p, y);
            if (v < 0 || v > 1) {
              ri->second = false;
              fac.witness = "rect " + std::to_string(k) + " R~ at y=" + std::to_string(y);
            }
          }
        auto [qi, qfresh] = q_ok.try_emplace(qs, true);
        if (qfresh) {
          ProductTerm unit = p;
          unit.coef = 1;
          for (int x = R.ax; x <= R.bx; ++x)
            if (ev.q_tilde(unit, x) < 0) {
              qi->second = false;
              fac.witness = "rect " + std::to_string(k) + " Q~ < 0 at x=" + std::to_string(x);
            }
        }
        if (!ri->second || !qi->second) {
          fac.pass = false;
          return;
        }
        auto [ci, cfresh] = coef_cap.try_emplace({rs, qs}, Int(0));
        if (cfresh) {
          ProductTerm unit = p;
          unit.coef = 1;
          Rat qm = ev.q_tilde_max(unit);
          ci->second = denominator(qm) / numerator(qm);
        }
        if (p.coef > ci->second) {
          fac.pass = false;
          fac.witness = "rect " + std::to_string(k) + " Q~ > 1";
        }
      });
    }
    // Residual.
    auto S = ev.product_sums();
    const std::size_t ny = ev.sy() + 1;
    for (int x = R.ax; x <= R.bx; ++x)
      for (int y = R.ay; y <= R.by; ++y) {
        std::size_t xo = static_cast<std::size_t>(R.x_off(x)), yo = static_cast<std::size_t>(R.y_off(y));
        const Int& s = S[xo * ny + yo];
        if (ident.pass && s != la.P_scaled(Int(xo + yo))) {
          ident.pass = false;
          ident.witness = pt(x, y);
        }
        Rat W = ev.W_from_sum(s, x, y);
        long sidx = static_cast<long>(rd.l / 2) + x + y;
        Rat target = (sidx < 0 || sidx > static_cast<long>(rd.l))
                         ? Rat(0)
                         : Rat(row[static_cast<std::size_t>(sidx)], two_l);
        Rat E = target - W;
        if (E < 0 && enn.pass) {
          enn.pass = false;
          enn.witness = pt(x, y);
        }
        rowsum[static_cast<std::size_t>(x + rd.Mx)] += E;
      }
  }
  rep.add(cnt);
  rep.add(fac);
  rep.add(ident);
  rep.add(enn);

  CheckResult rowc{"sum_y E(x,y) <= eps for every x", true, "", ""};
  Rat worst = 0;
  for (std::size_t i = 0; i < gx; ++i) {
    Rat ratio = rowsum[i] / rd.eps;
    if (ratio > worst) worst = ratio;
    if (rowsum[i] > rd.eps && rowc.pass) {
      rowc.pass = false;
      rowc.witness = "x=" + std::to_string(static_cast<long>(i) - rd.Mx);
    }
  }
  rowc.detail = "max row mass / eps = " + std::to_string(rat_to_double(worst));
  rep.add(rowc);
  rep.max_slack = worst;

  // r <= r_multiple (1 + Mx My / l) (L + 8)^4, L = ceil(log2(1/eps)) >= 1; the
  // degree needed for eps is L + 8, which is O(L).
  std::size_t L = std::max<std::size_t>(1, ceil_log2(ceil_div(denominator(rd.eps), numerator(rd.eps))));
  Rat bound = rd.r_multiple * (1 + Rat(Int(rd.Mx) * rd.My, Int(rd.l))) * Rat(pow(Int(L + 8), 4u));
  rep.add({"r <= r_multiple (1 + MxMy/l) (log(1/eps) + 8)^4", Rat(Int(rd.r)) <= bound,
           std::to_string(rd.r), "bound " + std::to_string(rat_to_double(bound))});
  rep.runtime_ms = ms_since(t0);
  return rep;
}

CertReport verify_decomp(const IntegerDecomp& id) {
  auto t0 = Clock::now();
  CertReport rep;
  rep.lemma = "integer terms";
  rep.params = {{"l", id.l}, {"w", id.w}, {"M_x", id.Mx}, {"M_y", id.My},
                {"eps", rat_str(id.eps)}, {"mode", id.mode == TermMode::dyadic ? "dyadic" : "direct"},
                {"r_rect", id.r_rect}};
  rep.r = id.r();
  const std::size_t gx = static_cast<std::size_t>(2 * id.Mx + 1);
  const std::size_t gy = static_cast<std::size_t>(2 * id.My + 1);

  std::vector<Int> V(gx * gy, Int(0));
  CheckResult inside{"term sets inside the grid, weights >= 0", true, "", ""};
  for (std::size_t j = 0; j < id.terms.size(); ++j) {
    const auto& t = id.terms[j];
    if (t.weight < 0 && inside.pass) {
      inside.pass = false;
      inside.witness = "term " + std::to_string(j);
    }
    auto xs = t.X.elements();
    auto ys = t.Y.elements();
    for (int x : xs)
      for (int y : ys) {
        if (x < -id.Mx || x > id.Mx || y < -id.My || y > id.My) {
          if (inside.pass) {
            inside.pass = false;
            inside.witness = "term " + std::to_string(j) + " " + pt(x, y);
          }
          continue;
        }
        V[static_cast<std::size_t>(x + id.Mx) * gy + static_cast<std::size_t>(y + id.My)] += t.weight;
      }
  }
  rep.add(inside);

  std::vector<Int> row(id.l + 1);
  row[0] = 1;
  for (std::size_t k = 1; k <= id.l; ++k) row[k] = row[k - 1] * (id.l - k + 1) / k;

  // E(x,y) = C(l, l/2+x+y) 2^{w-l} - V(x,y); compared as C 2^w - V 2^l.
  CheckResult enn{"E(x,y) >= 0", true, "", ""};
  CheckResult rowc{"sum_y E(x,y) <= eps 2^w + 4 r_rect M_y 2^{w/2}", true, "", ""};
  const Int two_w = pow2(id.w), two_l = pow2(id.l);
  const Rat row_bound = id.eps * Rat(two_w) + Rat(4 * Int(id.r_rect) * id.My * pow2(id.w / 2));
  Rat worst = 0;
  for (std::size_t xi = 0; xi < gx; ++xi) {
    Int rs = 0;  // in units of 2^{-l}
    for (std::size_t yi = 0; yi < gy; ++yi) {
      long s = static_cast<long>(id.l / 2) + (static_cast<long>(xi) - id.Mx) + (static_cast<long>(yi) - id.My);
      Int c = (s < 0 || s > static_cast<long>(id.l)) ? Int(0) : row[static_cast<std::size_t>(s)];
      Int e = c * two_w - V[xi * gy + yi] * two_l;
      if (e < 0 && enn.pass) {
        enn.pass = false;
        enn.witness = pt(static_cast<long>(xi) - id.Mx, static_cast<long>(yi) - id.My);
      }
      rs += e;
    }
    Rat mass(rs, two_l);
    Rat ratio = row_bound > 0 ? mass / row_bound : Rat(0);
    if (ratio > worst) worst = ratio;
    if (mass > row_bound && rowc.pass) {
      rowc.pass = false;
      rowc.witness = "x=" + std::to_string(static_cast<long>(xi) - id.Mx);
    }
  }
  rowc.detail = "max row mass / bound = " + std::to_string(rat_to_double(worst));
  rep.add(enn);
  rep.add(rowc);
  rep.max_slack = worst;

  if (id.mode == TermMode::dyadic) {
    CheckResult pw{"dyadic weights are powers of two", true, "", ""};
    for (std::size_t j = 0; j < id.terms.size() && pw.pass; ++j) {
      const Int& v = id.terms[j].weight;
      if (v <= 0 || (v & (v - 1)) != 0) {
        pw.pass = false;
        pw.witness = "term " + std::to_string(j);
      }
    }
    rep.add(pw);
    std::size_t half = id.w / 2;
    rep.add({"r <= r_rect (w/2)^2", id.r() <= id.r_rect * half * half, std::to_string(id.r()),
             "r_rect=" + std::to_string(id.r_rect)});
  }
  rep.runtime_ms = ms_since(t0);
  return rep;
}

}  // namespace srank
