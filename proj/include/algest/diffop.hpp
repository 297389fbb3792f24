#pragma once

// The Weyl-type ring Q(s)[d/ds] and its two actions: on rational functions,
// and on formal expressions built from the unknown image X(s) and 1.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "algest/exactalg.hpp"

namespace algest {

namespace detail {
inline Rational binomial(int n, int k) {
  Integer r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(r);
}

inline std::string derivative_symbol(int nu) {
  switch (nu) {
    case 0: return "X";
    case 1: return "X'";
    case 2: return "X''";
    default: return "X^(" + std::to_string(nu) + ")";
  }
}

inline void prune(std::map<int, RatFunc>& terms) {
  for (auto it = terms.begin(); it != terms.end();) {
    if (it->second.is_zero()) {
      it = terms.erase(it);
    } else {
      ++it;
    }
  }
}
}  // namespace detail

/// Linear differential operator sum_a c_a(s) (d/ds)^a, coefficients on the left.
class DiffOp {
 public:
  DiffOp() = default;
  explicit DiffOp(std::map<int, RatFunc> terms) : terms_(std::move(terms)) { detail::prune(terms_); }

  static DiffOp identity() { return multiply(RatFunc(1)); }
  static DiffOp d(int order = 1) { return DiffOp({{order, RatFunc(1)}}); }
  static DiffOp multiply(const RatFunc& c) { return DiffOp({{0, c}}); }

  const std::map<int, RatFunc>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int order() const { return terms_.empty() ? -1 : terms_.rbegin()->first; }
  RatFunc coeff(int order) const {
    auto it = terms_.find(order);
    return it == terms_.end() ? RatFunc() : it->second;
  }

  friend DiffOp operator+(const DiffOp& p, const DiffOp& q) {
    std::map<int, RatFunc> r = p.terms_;
    for (const auto& [a, c] : q.terms_) r[a] += c;
    return DiffOp(std::move(r));
  }
  DiffOp operator-() const { return scale(RatFunc(-1)); }
  friend DiffOp operator-(const DiffOp& p, const DiffOp& q) { return p + (-q); }

  /// Left multiplication by a coefficient.
  DiffOp scale(const RatFunc& c) const {
    std::map<int, RatFunc> r;
    if (c.is_zero()) return {};
    for (const auto& [a, t] : terms_) r[a] = c * t;
    return DiffOp(std::move(r));
  }

  /// P∘Q via D^a∘q = sum_i C(a,i) q^(i) D^(a-i).
  friend DiffOp compose(const DiffOp& p, const DiffOp& q) {
    std::map<int, RatFunc> r;
    for (const auto& [b, qc] : q.terms_) {
      std::vector<RatFunc> qd{qc};
      for (const auto& [a, pc] : p.terms_) {
        while (static_cast<int>(qd.size()) <= a) qd.push_back(qd.back().derivative());
        for (int i = 0; i <= a; ++i) {
          if (qd[i].is_zero()) continue;
          r[a - i + b] += pc * qd[i] * RatFunc(detail::binomial(a, i));
        }
      }
    }
    return DiffOp(std::move(r));
  }

  friend bool operator==(const DiffOp& p, const DiffOp& q) { return p.terms_ == q.terms_; }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [a, c] : terms_) {
      if (!out.empty()) out += " + ";
      std::string cs = "(" + c.to_string() + ")";
      if (a == 0) {
        out += cs;
      } else {
        out += cs + "*D" + (a > 1 ? "^" + std::to_string(a) : "");
      }
    }
    return out;
  }

 private:
  std::map<int, RatFunc> terms_;
};

inline DiffOp op_compose(const DiffOp& p, const DiffOp& q) { return compose(p, q); }

/// sum_a c_a f^(a).
inline RatFunc op_apply_rat(const DiffOp& p, const RatFunc& f) {
  RatFunc acc;
  RatFunc df = f;
  int at = 0;
  for (const auto& [a, c] : p.terms()) {
    while (at < a) {
      df = df.derivative();
      ++at;
    }
    acc += c * df;
  }
  return acc;
}

/// Formal expression sum_nu c_nu(s) X^(nu) + k(s), an element of span(1, X).
class SExpr {
 public:
  SExpr() = default;
  SExpr(std::map<int, RatFunc> signal, RatFunc known) : signal_(std::move(signal)), known_(std::move(known)) {
    detail::prune(signal_);
  }

  static SExpr signal(int nu, const RatFunc& c = RatFunc(1)) { return SExpr({{nu, c}}, RatFunc()); }
  static SExpr known(const RatFunc& c) { return SExpr({}, c); }

  const std::map<int, RatFunc>& signal_terms() const { return signal_; }
  const RatFunc& known_term() const { return known_; }
  RatFunc signal_coeff(int nu) const {
    auto it = signal_.find(nu);
    return it == signal_.end() ? RatFunc() : it->second;
  }
  bool is_zero() const { return signal_.empty() && known_.is_zero(); }
  bool has_signal() const { return !signal_.empty(); }
  int max_order() const { return signal_.empty() ? -1 : signal_.rbegin()->first; }

  friend SExpr operator+(const SExpr& a, const SExpr& b) {
    std::map<int, RatFunc> r = a.signal_;
    for (const auto& [nu, c] : b.signal_) r[nu] += c;
    return SExpr(std::move(r), a.known_ + b.known_);
  }
  SExpr operator-() const { return scale(RatFunc(-1)); }
  friend SExpr operator-(const SExpr& a, const SExpr& b) { return a + (-b); }
  SExpr& operator+=(const SExpr& o) { return *this = *this + o; }

  SExpr scale(const RatFunc& c) const {
    if (c.is_zero()) return {};
    std::map<int, RatFunc> r;
    for (const auto& [nu, t] : signal_) r[nu] = c * t;
    return SExpr(std::move(r), c * known_);
  }

  /// d/ds with the product rule on c*X^(nu).
  SExpr derivative() const {
    std::map<int, RatFunc> r;
    for (const auto& [nu, c] : signal_) {
      r[nu] += c.derivative();
      r[nu + 1] += c;
    }
    return SExpr(std::move(r), known_.derivative());
  }

  /// Replace X by a concrete rational function.
  RatFunc substitute(const RatFunc& image) const {
    RatFunc acc = known_;
    RatFunc d = image;
    int at = 0;
    for (const auto& [nu, c] : signal_) {
      while (at < nu) {
        d = d.derivative();
        ++at;
      }
      acc += c * d;
    }
    return acc;
  }

  /// Value at s = point given X^(nu)(point) = derivs[nu].
  Rational evaluate(const Rational& point, std::span<const Rational> derivs) const {
    Rational acc = known_(point);
    for (const auto& [nu, c] : signal_) {
      if (static_cast<std::size_t>(nu) >= derivs.size())
        throw invalid_input("missing derivative value of order " + std::to_string(nu));
      acc += c(point) * derivs[static_cast<std::size_t>(nu)];
    }
    return acc;
  }

  friend bool operator==(const SExpr& a, const SExpr& b) {
    return a.signal_ == b.signal_ && a.known_ == b.known_;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [nu, c] : signal_) {
      if (!out.empty()) out += " + ";
      out += (c == RatFunc(1) ? "" : "(" + c.to_string() + ")*") + detail::derivative_symbol(nu);
    }
    if (!known_.is_zero() || out.empty()) {
      if (!out.empty()) out += " + ";
      out += "(" + known_.to_string() + ")";
    }
    return out;
  }

 private:
  std::map<int, RatFunc> signal_;
  RatFunc known_;
};

/// sum_a c_a D^a(e), distributing derivatives over the formal symbol.
inline SExpr op_apply_formal(const DiffOp& p, const SExpr& e) {
  SExpr acc;
  SExpr de = e;
  int at = 0;
  for (const auto& [a, c] : p.terms()) {
    while (at < a) {
      de = de.derivative();
      ++at;
    }
    acc += de.scale(c);
  }
  return acc;
}

inline SExpr nth_derivative(SExpr e, int order) {
  for (int i = 0; i < order && !e.is_zero(); ++i) e = e.derivative();
  return e;
}

}  // namespace algest
