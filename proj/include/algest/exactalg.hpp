#pragma once

// Exact arithmetic in Q, Q[s] and Q(s).
//
// Rationals are GMP's mpq_class. Polynomials keep ascending coefficient
// vectors with no trailing zeros; rational functions are kept coprime with a
// monic denominator so that structural equality is mathematical equality.

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "algest/error.hpp"

namespace algest {

using Integer = mpz_class;
using Rational = mpq_class;

/// Exact conversion; every finite double is a dyadic rational.
inline Rational to_rational(double v) { return Rational(v); }

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw invalid_input("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

class Poly {
 public:
  Poly() = default;
  Poly(const Rational& c) {  // NOLINT(google-explicit-constructor)
    if (sgn(c) != 0) coeffs_.push_back(c);
  }
  explicit Poly(std::vector<Rational> coeffs) : coeffs_(std::move(coeffs)) { trim(); }
  Poly(std::initializer_list<Rational> coeffs) : coeffs_(coeffs) { trim(); }

  static Poly monomial(const Rational& c, std::size_t degree) {
    if (sgn(c) == 0) return {};
    std::vector<Rational> v(degree + 1);
    v[degree] = c;
    return Poly(std::move(v));
  }
  static Poly s() { return monomial(1, 1); }

  bool is_zero() const { return coeffs_.empty(); }
  bool is_constant() const { return coeffs_.size() <= 1; }
  /// Degree; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<Rational>& coeffs() const { return coeffs_; }
  Rational coeff(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : Rational(0); }
  Rational leading() const { return coeffs_.empty() ? Rational(0) : coeffs_.back(); }

  Rational operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  double eval(double x) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + it->get_d();
    return acc;
  }

  Poly derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<Rational> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = coeffs_[i] * static_cast<long>(i);
    return Poly(std::move(d));
  }

  Poly monic() const {
    if (is_zero()) return {};
    Poly r = *this;
    const Rational lc = leading();
    for (auto& c : r.coeffs_) c /= lc;
    return r;
  }

  Poly operator-() const {
    Poly r = *this;
    for (auto& c : r.coeffs_) c = -c;
    return r;
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<Rational> r(std::max(a.coeffs_.size(), b.coeffs_.size()));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) r[i] += a.coeffs_[i];
    for (std::size_t i = 0; i < b.coeffs_.size(); ++i) r[i] += b.coeffs_[i];
    return Poly(std::move(r));
  }
  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> r(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) r[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Poly(std::move(r));
  }
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator-=(const Poly& o) { return *this = *this - o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  /// Euclidean division over Q: a = q*b + r with deg r < deg b.
  friend std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw invalid_input("polynomial division by zero");
    if (a.degree() < b.degree()) return {Poly{}, a};
    std::vector<Rational> rem = a.coeffs_;
    std::vector<Rational> quo(a.coeffs_.size() - b.coeffs_.size() + 1);
    const Rational lc = b.leading();
    const std::size_t db = b.coeffs_.size() - 1;
    for (std::size_t k = quo.size(); k-- > 0;) {
      const Rational q = rem[k + db] / lc;
      quo[k] = q;
      if (sgn(q) == 0) continue;
      for (std::size_t j = 0; j <= db; ++j) rem[k + j] -= q * b.coeffs_[j];
    }
    rem.resize(db);
    return {Poly(std::move(quo)), Poly(std::move(rem))};
  }

  friend bool operator==(const Poly& a, const Poly& b) { return a.coeffs_ == b.coeffs_; }

  std::string to_string(const std::string& var = "s") const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = coeffs_.size(); i-- > 0;) {
      const Rational& c = coeffs_[i];
      if (sgn(c) == 0) continue;
      Rational mag = abs(c);
      if (first) {
        if (sgn(c) < 0) os << "-";
      } else {
        os << (sgn(c) < 0 ? " - " : " + ");
      }
      first = false;
      const bool unit = (mag == 1);
      if (i == 0 || !unit) os << mag.get_str();
      if (i > 0) {
        if (!unit) os << "*";
        os << var;
        if (i > 1) os << "^" << i;
      }
    }
    return os.str();
  }

 private:
  void trim() {
    while (!coeffs_.empty() && sgn(coeffs_.back()) == 0) coeffs_.pop_back();
  }
  std::vector<Rational> coeffs_;
};

namespace detail {

using IntPoly = std::vector<Integer>;  // ascending, no trailing zeros

inline void trim(IntPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline Integer content(const IntPoly& p) {
  Integer g = 0;
  for (const auto& c : p) g = gcd(g, c);
  return g;
}

inline IntPoly primitive_part(IntPoly p) {
  if (p.empty()) return p;
  Integer g = content(p);
  if (p.back() < 0) g = -g;
  for (auto& c : p) c /= g;
  return p;
}

/// Scale a rational polynomial to an integer polynomial with unit content.
inline IntPoly to_primitive(const Poly& p) {
  Integer l = 1;
  for (const auto& c : p.coeffs()) l = lcm(l, c.get_den());
  IntPoly r;
  r.reserve(p.coeffs().size());
  for (const auto& c : p.coeffs()) r.emplace_back(Integer(c.get_num() * (l / c.get_den())));
  return primitive_part(std::move(r));
}

/// lc(b)^(deg a - deg b + 1) * a mod b, exactly over Z.
inline IntPoly pseudo_remainder(const IntPoly& a, const IntPoly& b) {
  IntPoly r = a;
  const int db = static_cast<int>(b.size()) - 1;
  int e = static_cast<int>(a.size()) - static_cast<int>(b.size()) + 1;
  const Integer& lb = b.back();
  while (!r.empty() && static_cast<int>(r.size()) - 1 >= db) {
    const int shift = static_cast<int>(r.size()) - 1 - db;
    const Integer lr = r.back();
    for (auto& c : r) c *= lb;
    for (int j = 0; j <= db; ++j) r[shift + j] -= lr * b[j];
    trim(r);
    --e;
  }
  if (e > 0) {
    Integer f;
    mpz_pow_ui(f.get_mpz_t(), lb.get_mpz_t(), static_cast<unsigned long>(e));
    for (auto& c : r) c *= f;
  }
  return r;
}

inline Integer ipow(const Integer& b, unsigned long e) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
  return r;
}

/// Subresultant polynomial remainder sequence; returns a primitive gcd.
inline IntPoly subresultant_gcd(IntPoly a, IntPoly b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return primitive_part(std::move(a));
  a = primitive_part(std::move(a));
  b = primitive_part(std::move(b));
  Integer g = 1;
  Integer h = 1;
  for (;;) {
    const unsigned long delta = a.size() - b.size();
    IntPoly r = pseudo_remainder(a, b);
    if (r.empty()) break;
    if (r.size() == 1) return IntPoly{Integer(1)};
    a = std::move(b);
    const Integer div = g * ipow(h, delta);
    for (auto& c : r) c /= div;
    b = std::move(r);
    g = a.back();
    if (delta == 0) {
      // h unchanged
    } else {
      h = ipow(g, delta) / ipow(h, delta - 1);
    }
  }
  return primitive_part(std::move(b));
}

}  // namespace detail

/// Monic gcd over Q (zero only when both inputs are zero).
inline Poly gcd(const Poly& a, const Poly& b) {
  if (a.is_zero()) return b.monic();
  if (b.is_zero()) return a.monic();
  if (a.is_constant() || b.is_constant()) return Poly(Rational(1));
  const detail::IntPoly g = detail::subresultant_gcd(detail::to_primitive(a), detail::to_primitive(b));
  std::vector<Rational> c;
  c.reserve(g.size());
  for (const auto& v : g) c.emplace_back(v);
  return Poly(std::move(c)).monic();
}

/// Element of Q(s): num/den with gcd(num, den) = 1 and den monic.
class RatFunc {
 public:
  RatFunc() : den_(Rational(1)) {}
  RatFunc(const Rational& c) : num_(c), den_(Rational(1)) {}  // NOLINT(google-explicit-constructor)
  RatFunc(long c) : RatFunc(Rational(c)) {}                  // NOLINT(google-explicit-constructor)
  RatFunc(const Poly& p) : num_(p), den_(Rational(1)) {}      // NOLINT(google-explicit-constructor)
  RatFunc(const Poly& num, const Poly& den) : num_(num), den_(den) { normalize(); }

  static RatFunc s_power(int k) {
    if (k >= 0) return RatFunc(Poly::monomial(1, static_cast<std::size_t>(k)));
    RatFunc r;
    r.den_ = Poly::monomial(1, static_cast<std::size_t>(-k));
    r.num_ = Poly(Rational(1));
    return r;
  }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.degree() == 0; }
  /// Order at infinity: deg num - deg den (meaningless for zero).
  int s_degree() const { return num_.degree() - den_.degree(); }

  /// Exponent L if den == s^L, otherwise -1.
  int s_power_denominator() const {
    const auto& c = den_.coeffs();
    for (std::size_t i = 0; i + 1 < c.size(); ++i)
      if (sgn(c[i]) != 0) return -1;
    return den_.degree();
  }

  Rational operator()(const Rational& x) const {
    const Rational d = den_(x);
    if (sgn(d) == 0) throw pole_error("rational function has a pole at s = " + x.get_str());
    return num_(x) / d;
  }
  double eval(double x) const { return num_.eval(x) / den_.eval(x); }

  RatFunc derivative() const {
    if (is_polynomial()) return RatFunc(num_.derivative());
    return RatFunc(num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_);
  }

  RatFunc operator-() const {
    RatFunc r = *this;
    r.num_ = -r.num_;
    return r;
  }
  // Sums and products cancel against the small gcds first (Henrici), so the
  // full-size gcd of the naive formulas is never formed.
  friend RatFunc operator+(const RatFunc& a, const RatFunc& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_polynomial() && b.is_polynomial()) return RatFunc(a.num_ + b.num_);
    if (a.den_ == b.den_) return RatFunc(a.num_ + b.num_, a.den_);
    const Poly g = gcd(a.den_, b.den_);
    if (g.degree() == 0) return reduced(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    const Poly ad = divmod(a.den_, g).first;
    const Poly bd = divmod(b.den_, g).first;
    Poly num = a.num_ * bd + b.num_ * ad;
    if (num.is_zero()) return {};
    Poly den = ad * b.den_;
    const Poly h = gcd(num, g);
    if (h.degree() > 0) {
      num = divmod(num, h).first;
      den = divmod(den, h).first;
    }
    return reduced(std::move(num), std::move(den));
  }
  friend RatFunc operator-(const RatFunc& a, const RatFunc& b) { return a + (-b); }
  friend RatFunc operator*(const RatFunc& a, const RatFunc& b) {
    if (a.is_zero() || b.is_zero()) return {};
    if (a.is_polynomial() && b.is_polynomial()) return RatFunc(a.num_ * b.num_);
    Poly an = a.num_;
    Poly ad = a.den_;
    Poly bn = b.num_;
    Poly bd = b.den_;
    cancel(an, bd);
    cancel(bn, ad);
    return reduced(an * bn, ad * bd);
  }
  friend RatFunc operator/(const RatFunc& a, const RatFunc& b) {
    if (b.is_zero()) throw invalid_input("division by the zero rational function");
    return a * RatFunc::reduced(b.den_, b.num_);
  }
  RatFunc& operator+=(const RatFunc& o) { return *this = *this + o; }
  RatFunc& operator-=(const RatFunc& o) { return *this = *this - o; }
  RatFunc& operator*=(const RatFunc& o) { return *this = *this * o; }
  RatFunc& operator/=(const RatFunc& o) { return *this = *this / o; }

  friend bool operator==(const RatFunc& a, const RatFunc& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  std::string to_string(const std::string& var = "s") const {
    if (is_polynomial() && den_.leading() == 1) return num_.to_string(var);
    const std::string n = num_.to_string(var);
    const std::string d = den_.to_string(var);
    const bool wrap_n = num_.coeffs().size() > 1 && n.find_first_of("+-", 1) != std::string::npos;
    const bool wrap_d = den_.coeffs().size() > 1 || d.find('*') != std::string::npos;
    return (wrap_n ? "(" + n + ")" : n) + "/" + (wrap_d ? "(" + d + ")" : d);
  }

 private:
  /// num/den already coprime; only the denominator is made monic.
  static RatFunc reduced(Poly num, Poly den) {
    RatFunc r;
    r.num_ = std::move(num);
    r.den_ = std::move(den);
    if (r.num_.is_zero()) {
      r.den_ = Poly(Rational(1));
      return r;
    }
    const Rational lc = r.den_.leading();
    if (lc != 1) {
      const Poly inv(Rational(1) / lc);
      r.num_ *= inv;
      r.den_ *= inv;
    }
    return r;
  }

  static void cancel(Poly& n, Poly& d) {
    if (n.degree() <= 0 || d.degree() <= 0) return;
    const Poly g = gcd(n, d);
    if (g.degree() > 0) {
      n = divmod(n, g).first;
      d = divmod(d, g).first;
    }
  }

  void normalize() {
    if (den_.is_zero()) throw invalid_input("rational function with zero denominator");
    if (num_.is_zero()) {
      den_ = Poly(Rational(1));
      return;
    }
    if (den_.degree() > 0 && num_.degree() >= 0) {
      const Poly g = gcd(num_, den_);
      if (g.degree() > 0) {
        num_ = divmod(num_, g).first;
        den_ = divmod(den_, g).first;
      }
    }
    const Rational lc = den_.leading();
    if (lc != 1) {
      const Poly inv(Rational(1) / lc);
      num_ *= inv;
      den_ *= inv;
    }
  }

  Poly num_;
  Poly den_;
};

/// Canonical representative of num/den.
inline RatFunc ratfunc_normalize(const Poly& num, const Poly& den) { return RatFunc(num, den); }

inline RatFunc nth_derivative(RatFunc f, int order) {
  for (int i = 0; i < order && !f.is_zero(); ++i) f = f.derivative();
  return f;
}

}  // namespace algest
