#include "srank/binom_approx.hpp"

#include <algorithm>
#include <map>

namespace srank {

namespace bmp = boost::multiprecision;

// ---------------------------------------------------------------- polynomials

void RationalPoly::trim() {
  while (!c.empty() && c.back() == 0) c.pop_back();
}

Rat RationalPoly::operator()(const Rat& t) const {
  Rat acc = 0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k];
  return acc;
}

RationalPoly operator+(const RationalPoly& p, const RationalPoly& q) {
  std::vector<Rat> r(std::max(p.c.size(), q.c.size()), Rat(0));
  for (std::size_t i = 0; i < p.c.size(); ++i) r[i] += p.c[i];
  for (std::size_t i = 0; i < q.c.size(); ++i) r[i] += q.c[i];
  return RationalPoly(std::move(r));
}

RationalPoly operator*(const RationalPoly& p, const RationalPoly& q) {
  if (p.is_zero() || q.is_zero()) return {};
  std::vector<Rat> r(p.c.size() + q.c.size() - 1, Rat(0));
  for (std::size_t i = 0; i < p.c.size(); ++i)
    for (std::size_t j = 0; j < q.c.size(); ++j) r[i + j] += p.c[i] * q.c[j];
  return RationalPoly(std::move(r));
}

RationalPoly scale(const RationalPoly& p, const Rat& s) {
  std::vector<Rat> r = p.c;
  for (auto& v : r) v *= s;
  return RationalPoly(std::move(r));
}

RationalPoly shift(const RationalPoly& p, const Rat& delta) {
  RationalPoly lin(std::vector<Rat>{delta, Rat(1)});
  RationalPoly acc;
  for (std::size_t k = p.c.size(); k-- > 0;) acc = acc * lin + RationalPoly(std::vector<Rat>{p.c[k]});
  return acc;
}

// ---------------------------------------------------------------- Bernoulli / Faulhaber

std::vector<Rat> bernoulli_table(std::size_t kmax) {
  // sum_{j=0}^{k} C(k+1, j) B_j = k + 1 fixes B_1 = +1/2.
  std::vector<Rat> b(kmax + 1);
  b[0] = 1;
  for (std::size_t k = 1; k <= kmax; ++k) {
    Rat s = 0;
    for (std::size_t j = 0; j < k; ++j) s += Rat(binomial(k + 1, j)) * b[j];
    b[k] = (Rat(Int(k + 1)) - s) / Rat(Int(k + 1));
  }
  return b;
}

Rat bernoulli(std::size_t k) { return bernoulli_table(k)[k]; }

RationalPoly faulhaber_poly(std::size_t j) {
  if (j == 0) throw ParameterError("faulhaber_poly: exponent must be >= 1");
  auto b = bernoulli_table(j);
  std::vector<Rat> c(j + 2, Rat(0));
  for (std::size_t k = 0; k <= j; ++k)
    c[j - k + 1] += Rat(binomial(j + 1, k)) * b[k] / Rat(Int(j + 1));
  return RationalPoly(std::move(c));
}

// ---------------------------------------------------------------- local approximation

Int factor_value(Factor f, std::uint32_t e, const Int& M, const Int& z) {
  switch (f) {
    case Factor::power: return bmp::pow(z, e);
    case Factor::minus: return bmp::pow(M, e) - bmp::pow(z, e);
    case Factor::plus: return bmp::pow(M, e) + bmp::pow(z, e);
    case Factor::one: return 1;
  }
  return 0;
}

namespace {

Int lcm_int(const Int& a, const Int& b) { return a / gcd(a, b) * b; }

std::vector<Int> int_poly_mul(const std::vector<Int>& p, const std::vector<Int>& q) {
  std::vector<Int> r(p.size() + q.size() - 1, Int(0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

Int pow_int(const Int& b, std::size_t e) { return bmp::pow(b, static_cast<unsigned>(e)); }

Int factorial(std::size_t n) {
  Int r = 1;
  for (std::size_t i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

RationalPoly LocalApprox::P() const {
  std::vector<Rat> c;
  for (const auto& v : p_num) c.emplace_back(v, p_den);
  return RationalPoly(std::move(c));
}

Rat LocalApprox::P_at(const Int& t) const { return Rat(P_scaled(t), 2 * p_den); }

Int LocalApprox::P_scaled(const Int& t) const {
  Int acc = 0;
  for (std::size_t k = p_num.size(); k-- > 0;) acc = acc * t + p_num[k];
  return 2 * acc;
}

Int LocalApprox::product_bound() const {
  Int dd(d);
  return dd * dd * dd * dd + dd * dd + 1;
}

std::size_t LocalApprox::product_count() const {
  std::size_t n = 1;
  if (M == 0) return n;
  for (std::size_t k = 1; k < p_num.size(); ++k) {
    if (p_num[k] > 0) n += k + 1;
    else if (p_num[k] < 0) n += 2 * k;
  }
  return n;
}

void LocalApprox::for_each_product(const std::function<void(const ProductTerm&)>& f) const {
  ProductTerm t;
  t.coef = constant_coef;
  t.q = Factor::one;
  t.r = Factor::one;
  f(t);
  if (M == 0) return;
  for (std::size_t k = 1; k < p_num.size(); ++k) {
    const Int& pk = p_num[k];
    if (pk == 0) continue;
    Int mag = abs(pk);
    Int binom = 1;  // C(k, a)
    for (std::uint32_t a = 0; a <= k; ++a) {
      std::uint32_t b = static_cast<std::uint32_t>(k) - a;
      Int c = mag * binom;
      if (pk > 0) {
        f(ProductTerm{2 * c, Factor::power, a, Factor::power, b});
      } else if (a == 0) {
        f(ProductTerm{2 * c, Factor::one, 0, Factor::minus, b});
      } else if (b == 0) {
        f(ProductTerm{2 * c, Factor::minus, a, Factor::one, 0});
      } else {
        f(ProductTerm{c, Factor::minus, a, Factor::plus, b});
        f(ProductTerm{c, Factor::plus, a, Factor::minus, b});
      }
      binom = binom * (k - a) / (a + 1);
    }
  }
}

std::vector<ProductTerm> LocalApprox::products() const {
  std::vector<ProductTerm> v;
  for_each_product([&](const ProductTerm& p) { v.push_back(p); });
  return v;
}

LocalApprox local_approx_window(std::size_t l, std::size_t a, std::size_t d, std::size_t M,
                                bool require_budget) {
  if (a == 0 || 2 * a > l) throw ParameterError("local_approx: need 0 < alpha <= 1/2");
  if (d < 8) throw ParameterError("local_approx: d must be >= 8 so that P(0) = 1 - 2^{-d+7} > 0");
  if (a + 2 * M > l) throw ParameterError("local_approx: window leaves [0, l]");

  LocalApprox la;
  la.l = l;
  la.a = a;
  la.d = d;
  la.M = M;
  la.alpha = Rat(Int(a), Int(l));
  la.epsilon = Rat(Int(1), pow2(d - 8));
  // P = (1 - eps/2) P_2 with eps/2 = 2^{-(d-7)}.
  const Int keep = pow2(d - 7) - 1, keep_den = pow2(d - 7);

  if (M == 0) {
    // Only P(0) = 1 - eps/2 is ever evaluated.
    la.p_num = {keep};
    la.p_den = keep_den;
  } else {
    // P_1(t) = sum_{j<d} (1/j) (-S_j(t-1) (l-a)^{-j} + S_j(t) (-a)^{-j})
    RationalPoly P1;
    for (std::size_t j = 1; j < d; ++j) {
      RationalPoly S = faulhaber_poly(j);
      Rat inv_hi = Rat(Int(1), pow_int(Int(l - a), j));
      Rat inv_lo = Rat(Int(1), pow_int(Int(a), j));
      if (j % 2 == 1) inv_lo = -inv_lo;
      RationalPoly term = scale(shift(S, Rat(-1)), -inv_hi) + scale(S, inv_lo);
      P1 = P1 + scale(term, Rat(Int(1), Int(j)));
    }
    // Integer form N1 / D1, then P_2 = sum_{i<=d} N1^i D1^{d-i} (d!/i!) / (D1^d d!).
    Int D1 = 1;
    for (const auto& c : P1.c) D1 = lcm_int(D1, denominator(c));
    std::vector<Int> N1;
    for (const auto& c : P1.c) N1.push_back(numerator(c) * (D1 / denominator(c)));
    if (N1.empty()) N1.push_back(0);

    const Int dfact = factorial(d);
    std::vector<Int> N2(d * (N1.size() - 1) + 1, Int(0));
    std::vector<Int> power{Int(1)};
    Int ifact = 1;
    for (std::size_t i = 0; i <= d; ++i) {
      if (i > 0) {
        power = int_poly_mul(power, N1);
        ifact *= i;
      }
      Int mult = pow_int(D1, d - i) * (dfact / ifact);
      for (std::size_t k = 0; k < power.size(); ++k) N2[k] += power[k] * mult;
    }
    Int den = pow_int(D1, d) * dfact * keep_den;
    for (auto& v : N2) v *= keep;
    Int g = den;
    for (const auto& v : N2) g = gcd(g, v);
    for (auto& v : N2) v /= g;
    den /= g;
    while (N2.size() > 1 && N2.back() == 0) N2.pop_back();
    la.p_num = std::move(N2);
    la.p_den = den;
  }

  // Budget: beta_00 >= sum_{(a,b)!=0} |beta_ab| M^{a+b} = sum_{k>=1} |p_k| (2M)^k.
  Int rhs = 0, neg = 0;
  Int twoM = 2 * Int(M);
  Int pw = 1;
  for (std::size_t k = 1; k < la.p_num.size(); ++k) {
    pw *= twoM;
    Int v = abs(la.p_num[k]) * pw;
    rhs += v;
    if (la.p_num[k] < 0) neg += v;
  }
  la.budget_lhs = Rat(la.p_num[0], la.p_den);
  la.budget_rhs = Rat(rhs, la.p_den);
  la.constant_coef = 2 * (la.p_num[0] - neg);
  if (la.constant_coef < 0 || (require_budget && !la.budget_ok()))
    throw BudgetError("local_approx: constant-term budget fails (l=" + std::to_string(l) +
                      ", alpha*l=" + std::to_string(a) + ", d=" + std::to_string(d) +
                      ", M=" + std::to_string(M) + "): beta_00=" +
                      std::to_string(rat_to_double(la.budget_lhs)) +
                      " < " + std::to_string(rat_to_double(la.budget_rhs)) +
                      "; shrink the window");
  return la;
}

LocalApprox local_approx(std::size_t l, const Rat& alpha, std::size_t d, const Rat& c) {
  if (alpha <= 0 || alpha > Rat(1, 2)) throw ParameterError("local_approx: need 0 < alpha <= 1/2");
  Rat al = alpha * Rat(Int(l));
  if (denominator(al) != 1) throw ParameterError("local_approx: alpha * l must be an integer");
  Int a = numerator(al);
  if (c <= 0) throw ParameterError("local_approx: window scale must be positive");
  // floor(c sqrt(a)) = isqrt(floor(c^2 a))
  Rat c2a = c * c * Rat(a);
  Int M = bmp::sqrt(Int(numerator(c2a) / denominator(c2a)));
  if (M < 1) throw ParameterError("local_approx: window c*sqrt(alpha*l) < 1");
  return local_approx_window(l, a.convert_to<std::size_t>(), d, M.convert_to<std::size_t>());
}

// ---------------------------------------------------------------- rectangles

Rat scaled_binomial(std::size_t l, int x, int y) {
  long s = static_cast<long>(l / 2) + x + y;
  if (s < 0 || s > static_cast<long>(l)) return 0;
  return Rat(binomial(l, static_cast<std::size_t>(s)), pow2(l));
}

std::size_t RectDecomp::rect_of(int x, int y) const {
  if (x < -Mx || x > Mx || y < -My || y > My) throw RangeError("rect_of: point outside the grid");
  std::size_t ix = static_cast<std::size_t>(x + Mx) / side;
  std::size_t iy = static_cast<std::size_t>(y + My) / side;
  std::size_t ny = (static_cast<std::size_t>(2 * My) + side) / side;
  return ix * ny + iy;
}

namespace {

std::size_t factor_slot(Factor f, std::uint32_t e) { return static_cast<std::size_t>(e) * 4 + static_cast<std::size_t>(f); }

}  // namespace

RectEval::RectEval(const RectDecomp& rd, std::size_t k) : rd_(&rd), rect_(&rd.rects.at(k)) {
  sx_ = static_cast<std::size_t>(rect_->bx - rect_->ax);
  sy_ = static_cast<std::size_t>(rect_->by - rect_->ay);
  const std::size_t a = rect_->base;
  rho_ = Rat(Int(rd.l - a), Int(a));
  scale_ = Rat(binomial(rd.l, a), pow2(rd.l) * 2 * rect_->approx->p_den);
}

RectEval::Table RectEval::make_table(Factor f, std::uint32_t e, std::size_t s) const {
  Table t;
  const Int M(rect_->approx->M);
  Rat rp = 1;
  for (std::size_t z = 0; z <= s; ++z) {
    Rat v = rp * Rat(factor_value(f, e, M, Int(z)));
    if (z == 0 || v > t.max) t.max = v;
    t.g.push_back(std::move(v));
    rp *= rho_;
  }
  return t;
}

const RectEval::Table& RectEval::q_table(Factor f, std::uint32_t e) const {
  std::size_t slot = factor_slot(f, e);
  if (q_cache_.size() <= slot) q_cache_.resize(slot + 1);
  if (!q_cache_[slot]) q_cache_[slot] = make_table(f, e, sx_);
  return *q_cache_[slot];
}

const RectEval::Table& RectEval::r_table(Factor f, std::uint32_t e) const {
  std::size_t slot = factor_slot(f, e);
  if (r_cache_.size() <= slot) r_cache_.resize(slot + 1);
  if (!r_cache_[slot]) r_cache_[slot] = make_table(f, e, sy_);
  return *r_cache_[slot];
}

Rat RectEval::C(const ProductTerm& p) const { return r_table(p.r, p.re).max; }

Rat RectEval::q_tilde(const ProductTerm& p, int x) const {
  int xo = rect_->x_off(x);
  if (x < rect_->ax || x > rect_->bx) return 0;
  return C(p) * scale_ * Rat(p.coef) * q_table(p.q, p.qe).g[static_cast<std::size_t>(xo)];
}

bool RectEval::vanishes(const ProductTerm& p) const {
  return p.coef == 0 || r_table(p.r, p.re).max == 0 || q_table(p.q, p.qe).max == 0;
}

Rat RectEval::q_tilde_max(const ProductTerm& p) const {
  return C(p) * scale_ * Rat(p.coef) * q_table(p.q, p.qe).max;
}

Rat RectEval::r_tilde(const ProductTerm& p, int y) const {
  if (y < rect_->ay || y > rect_->by) return 0;
  Rat c = C(p);
  if (c == 0) return 0;
  return r_table(p.r, p.re).g[static_cast<std::size_t>(rect_->y_off(y))] / c;
}

std::vector<Int> RectEval::product_sums() const {
  const LocalApprox& la = *rect_->approx;
  const Int M(la.M);
  const std::size_t nx = sx_ + 1, ny = sy_ + 1;
  // Per R-shape accumulation of sum_i coef_i f_q(x'), then one pass over y'.
  std::map<std::size_t, std::vector<Int>> byR;
  std::vector<std::vector<Int>> qcache;
  auto qvals = [&](Factor f, std::uint32_t e) -> const std::vector<Int>& {
    std::size_t slot = factor_slot(f, e);
    if (qcache.size() <= slot) qcache.resize(slot + 1);
    auto& v = qcache[slot];
    if (v.empty())
      for (std::size_t z = 0; z < nx; ++z) v.push_back(factor_value(f, e, M, Int(z)));
    return v;
  };
  la.for_each_product([&](const ProductTerm& p) {
    auto& acc = byR[factor_slot(p.r, p.re)];
    if (acc.empty()) acc.assign(nx, Int(0));
    const auto& qv = qvals(p.q, p.qe);
    for (std::size_t z = 0; z < nx; ++z)
      if (qv[z] != 0) acc[z] += p.coef * qv[z];
  });
  std::vector<Int> S(nx * ny, Int(0));
  for (const auto& [slot, acc] : byR) {
    Factor f = static_cast<Factor>(slot % 4);
    auto e = static_cast<std::uint32_t>(slot / 4);
    for (std::size_t yz = 0; yz < ny; ++yz) {
      Int rv = factor_value(f, e, M, Int(yz));
      if (rv == 0) continue;
      for (std::size_t xz = 0; xz < nx; ++xz) S[xz * ny + yz] += acc[xz] * rv;
    }
  }
  return S;
}

Rat RectEval::W_from_sum(const Int& S, int x, int y) const {
  int t = rect_->x_off(x) + rect_->y_off(y);
  Rat r = scale_ * Rat(S);
  Rat rp = 1;
  for (int i = 0; i < t; ++i) rp *= rho_;
  return r * rp;
}

namespace {

std::vector<std::pair<int, int>> segments(int M, std::size_t side) {
  std::vector<std::pair<int, int>> seg;
  for (int s = -M; s <= M; s += static_cast<int>(side))
    seg.emplace_back(s, std::min(M, s + static_cast<int>(side) - 1));
  return seg;
}

std::size_t degree_for(const Rat& eps) {
  // smallest d with 2^{-d+8} <= eps
  std::size_t d = 8;
  while (Rat(Int(1), pow2(d - 8)) > eps) ++d;
  return d;
}

bool build_rects(RectDecomp& rd) {
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const LocalApprox>> cache;
  rd.rects.clear();
  const long half = static_cast<long>(rd.l / 2);
  for (auto [ax, bx] : segments(rd.Mx, rd.side)) {
    for (auto [ay, by] : segments(rd.My, rd.side)) {
      Rect r;
      r.ax = ax;
      r.bx = bx;
      r.ay = ay;
      r.by = by;
      r.lower = ax + ay <= 0;
      long base = r.lower ? half + ax + ay : half - bx - by;
      if (base <= 0) throw ParameterError("rect_decompose: grid reaches past the binomial's support");
      r.base = static_cast<std::size_t>(base);
      std::size_t M = static_cast<std::size_t>(std::max(bx - ax, by - ay));
      auto key = std::make_pair(r.base, M);
      auto it = cache.find(key);
      if (it == cache.end()) {
        try {
          auto la = std::make_shared<const LocalApprox>(local_approx_window(rd.l, r.base, rd.d, M));
          it = cache.emplace(key, la).first;
        } catch (const BudgetError&) {
          return false;
        }
      }
      r.approx = it->second;
      rd.rects.push_back(std::move(r));
    }
  }
  return true;
}

}  // namespace

RectDecomp rect_decompose(std::size_t l, int Mx, int My, const Rat& eps, const RectConfig& cfg,
                          bool certify) {
  if (l % 2 != 0) throw ParameterError("rect_decompose: l must be even");
  if (Mx < 0 || My < 0) throw ParameterError("rect_decompose: M_x, M_y must be nonnegative");
  if (eps <= 0) throw ParameterError("rect_decompose: eps must be positive");
  if (!cfg.relaxed && (Int(l) <= 8 * Int(Mx) || Int(l) <= 8 * Int(My)))
    throw ParameterError("rect_decompose: need l > 8 M_x and l > 8 M_y");

  RectDecomp rd;
  rd.l = l;
  rd.Mx = Mx;
  rd.My = My;
  rd.eps = eps;
  rd.d = cfg.degree ? *cfg.degree : degree_for(eps);
  rd.r_multiple = cfg.r_multiple;
  Rat c = cfg.window_scale;
  for (std::size_t attempt = 0;; ++attempt) {
    rd.window_scale = c;
    if (cfg.side) {
      rd.side = *cfg.side;
    } else {
      Rat q = c * c * Rat(Int(l), Int(4));
      rd.side = bmp::sqrt(Int(numerator(q) / denominator(q))).convert_to<std::size_t>() + 1;
    }
    if (rd.side == 0) throw ParameterError("rect_decompose: side must be positive");
    if (build_rects(rd)) break;
    if (cfg.side || attempt >= cfg.max_retries || rd.side == 1)
      throw BudgetError("rect_decompose: constant-term budget fails at side " +
                        std::to_string(rd.side));
    c /= 2;
  }

  rd.r = 0;
  for (std::size_t k = 0; k < rd.rects.size(); ++k) {
    RectEval ev(rd, k);
    rd.rects[k].approx->for_each_product([&](const ProductTerm& p) {
      if (!ev.vanishes(p)) ++rd.r;
    });
  }

  if (certify) {
    CertReport rep = verify_decomp(rd);
    if (!rep.pass) throw CertificationError("rectangle decomposition: " + rep.witness);
  }
  return rd;
}

// ---------------------------------------------------------------- helpers

std::string rat_str(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

}  // namespace srank
