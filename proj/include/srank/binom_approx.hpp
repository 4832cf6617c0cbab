#pragma once
// Nonnegative separable approximations of binomial coefficients, checked with
// exact rationals.
//
// Three layers:
//   LocalApprox    C(l, a+t) ~ C(l, a) ((l-a)/a)^t P(t) for t in [0, 2M], with
//                  P(x+y) split into nonnegative products Q_i(x) R_i(y).
//   RectDecomp     C(l, l/2+x+y) 2^-l on [-Mx,Mx]x[-My,My] as a sum of
//                  rectangle-local products with factors in [0, 1].
//   IntegerDecomp  C(l, l/2+x+y) 2^{w-l} as a sum of weight * 1_X(x) 1_Y(y).

#include "srank/model.hpp"
#include "srank/params.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace srank {

// Window too large for the constant-term budget; retry with a smaller window.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RationalPoly {
  std::vector<Rat> c;  // c[k] is the coefficient of t^k

  RationalPoly() = default;
  explicit RationalPoly(std::vector<Rat> coeffs) : c(std::move(coeffs)) { trim(); }

  bool is_zero() const { return c.empty(); }
  std::size_t degree() const { return c.empty() ? 0 : c.size() - 1; }
  Rat operator()(const Rat& t) const;
  void trim();
};

RationalPoly operator+(const RationalPoly& p, const RationalPoly& q);
RationalPoly operator*(const RationalPoly& p, const RationalPoly& q);
RationalPoly scale(const RationalPoly& p, const Rat& s);
RationalPoly shift(const RationalPoly& p, const Rat& delta);  // t -> p(t + delta)

// B_1 = +1/2, so that S_j sums 1..t.
Rat bernoulli(std::size_t k);
std::vector<Rat> bernoulli_table(std::size_t kmax);

// S_j(t) = 1^j + ... + t^j.
RationalPoly faulhaber_poly(std::size_t j);

// Factor shapes; M is the window bound of the owning approximation.
enum class Factor : std::uint8_t {
  power,  // z^e
  minus,  // M^e - z^e
  plus,   // M^e + z^e
  one,    // 1
};

// Q_i(x) = coef * f(q, qe)(x) / (2 * p_den);  R_i(y) = f(r, re)(y).
struct ProductTerm {
  Int coef;
  Factor q = Factor::one;
  std::uint32_t qe = 0;
  Factor r = Factor::one;
  std::uint32_t re = 0;
};

Int factor_value(Factor f, std::uint32_t e, const Int& M, const Int& z);

struct LocalApprox {
  std::size_t l = 0;
  std::size_t a = 0;  // alpha * l
  std::size_t d = 0;
  std::size_t M = 0;  // window: x, y in [0, M]
  Rat alpha;
  Rat epsilon;  // 2^{-d+8}
  std::vector<Int> p_num;  // P(t) = sum_k p_num[k] t^k / p_den
  Int p_den = 1;
  Int constant_coef;  // coef of the constant product
  Rat budget_lhs;     // beta_00
  Rat budget_rhs;     // sum over (a,b) != 0 of |beta_ab| M^{a+b}

  bool budget_ok() const { return budget_lhs >= budget_rhs; }
  RationalPoly P() const;
  Rat P_at(const Int& t) const;
  // 2 * p_den * P(t) as an integer.
  Int P_scaled(const Int& t) const;

  std::size_t product_count() const;
  // Constant product first, then monomials by total degree and x-degree.
  void for_each_product(const std::function<void(const ProductTerm&)>& f) const;
  std::vector<ProductTerm> products() const;
  // d^4 + d^2 + 1
  Int product_bound() const;
};

// Window M = floor(c * sqrt(alpha * l)). Throws ParameterError for alpha*l not
// integral, alpha outside (0, 1/2], d < 8 or an empty window, BudgetError when
// the constant-term budget fails.
LocalApprox local_approx(std::size_t l, const Rat& alpha, std::size_t d, const Rat& c);
// Same with an explicit base a = alpha * l and window M.
LocalApprox local_approx_window(std::size_t l, std::size_t a, std::size_t d, std::size_t M,
                                bool require_budget = true);

struct RectConfig {
  std::optional<std::size_t> degree;  // default ceil(log2(2^8 / eps))
  std::optional<std::size_t> side;    // points per rectangle side
  Rat window_scale{1, 2};             // side - 1 <= c * sqrt(l / 4) when side is unset
  std::size_t max_retries = 3;
  Rat r_multiple{4096};               // r <= r_multiple * (1 + Mx My / l) * (log2(1/eps) + 8)^4
  bool relaxed = false;               // waive l > 8 Mx, l > 8 My
};

struct Rect {
  int ax = 0, bx = 0, ay = 0, by = 0;
  bool lower = true;  // anchored at (ax, ay); otherwise at (bx, by) on the mirrored binomial
  std::size_t base = 0;  // alpha * l of the local approximation
  std::shared_ptr<const LocalApprox> approx;

  int x_off(int x) const { return lower ? x - ax : bx - x; }
  int y_off(int y) const { return lower ? y - ay : by - y; }
};

struct RectDecomp {
  std::size_t l = 0;
  int Mx = 0, My = 0;
  Rat eps;
  std::size_t d = 0;
  std::size_t side = 0;
  Rat window_scale;
  Rat r_multiple;
  std::vector<Rect> rects;
  std::size_t r = 0;  // nonzero products over all rectangles

  std::size_t rect_of(int x, int y) const;
};

// C(l, l/2 + x + y) 2^-l.
Rat scaled_binomial(std::size_t l, int x, int y);

// Exact per-rectangle evaluation of the factors.
class RectEval {
 public:
  RectEval(const RectDecomp& rd, std::size_t k);

  const Rect& rect() const { return *rect_; }
  // C_i: max over the y side of ((l-a)/a)^{y'} R_i(y'); zero means the product vanishes.
  Rat C(const ProductTerm& p) const;
  Rat q_tilde(const ProductTerm& p, int x) const;
  Rat r_tilde(const ProductTerm& p, int y) const;
  // True when the product is zero on the whole rectangle.
  bool vanishes(const ProductTerm& p) const;
  // Max of q_tilde over the x side.
  Rat q_tilde_max(const ProductTerm& p) const;
  // S(x', y') = sum_i coef_i f_q(x') f_r(y'), accumulated product by product;
  // row-major over x' in [0, sx], y' in [0, sy].
  std::vector<Int> product_sums() const;
  // W from a product sum value at absolute (x, y).
  Rat W_from_sum(const Int& S, int x, int y) const;
  std::size_t sx() const { return sx_; }
  std::size_t sy() const { return sy_; }

 private:
  struct Table {
    std::vector<Rat> g;  // ((l-a)/a)^z f(z) for z on the side
    Rat max;
  };
  const Table& q_table(Factor f, std::uint32_t e) const;
  const Table& r_table(Factor f, std::uint32_t e) const;
  Table make_table(Factor f, std::uint32_t e, std::size_t s) const;

  const RectDecomp* rd_;
  const Rect* rect_;
  std::size_t sx_, sy_;
  Rat rho_;
  Rat scale_;  // C(l, a) 2^-l / (2 p_den)
  mutable std::vector<std::optional<Table>> q_cache_, r_cache_;
};

RectDecomp rect_decompose(std::size_t l, int Mx, int My, const Rat& eps, const RectConfig& cfg,
                          bool certify = true);

// Integer sets over a window, stored as a bitmask from `lo`.
struct IntSet {
  int lo = 0;
  std::vector<std::uint64_t> bits;

  IntSet() = default;
  IntSet(int lo_, int hi_);  // empty set able to hold [lo_, hi_]
  static IntSet singleton(int v);
  void insert(int v);
  bool contains(int v) const;
  bool empty() const;
  std::size_t size() const;
  std::vector<int> elements() const;
  int hi() const { return lo + static_cast<int>(bits.size() * 64) - 1; }
};

struct IntTerm {
  Int weight;
  IntSet X, Y;
};

struct IntegerDecomp {
  std::size_t l = 0;
  std::size_t w = 0;
  int Mx = 0, My = 0;
  Rat eps;
  TermMode mode = TermMode::direct;
  std::vector<IntTerm> terms;
  std::size_t r_rect = 0;  // product count of the source decomposition

  std::size_t r() const { return terms.size(); }
  // Sum of weights of terms containing (x, y), by direct scan.
  Int value_at(int x, int y) const;
};

IntegerDecomp integer_terms(const RectDecomp& rd, std::size_t w, TermMode mode,
                            bool certify = true);

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string witness;
  std::string detail;
};

struct CertReport {
  std::string lemma;
  nlohmann::json params;
  bool pass = true;
  std::vector<CheckResult> checks;
  std::string witness;  // first failing check's witness
  Rat max_slack;        // worst observed ratio of a bounded quantity to its bound
  std::size_t r = 0;
  double runtime_ms = 0;

  void add(CheckResult c);
  nlohmann::json to_json() const;
};

CertReport verify_decomp(const LocalApprox& la);
CertReport verify_decomp(const RectDecomp& rd);
CertReport verify_decomp(const IntegerDecomp& id);

std::string rat_str(const Rat& r);
double rat_to_double(const Rat& r);

}  // namespace srank
