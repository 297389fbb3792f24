#pragma once

// Identifiability: the derivative matrix of the identity's monomials, its
// rank by specialization at random points, and extraction of the linear
// system A(s) theta = B(s) for the unknown slot parameters.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "algest/diffop.hpp"
#include "algest/error.hpp"
#include "algest/exactalg.hpp"
#include "algest/sigmodel.hpp"

namespace algest {

using SExprMatrix = std::vector<std::vector<SExpr>>;
using RationalMatrix = std::vector<std::vector<Rational>>;

/// Row xi is d^xi/ds^xi of (..., s^mu X^(nu), ..., s^kappa, ...), xi = 0..N+M.
inline SExprMatrix build_M(const SignalModel& model) {
  std::vector<SExpr> row;
  for (const auto& t : model.a_terms)
    row.push_back(SExpr::signal(t.nu, RatFunc::s_power(t.mu)));
  for (const auto& t : model.b_terms) row.push_back(SExpr::known(RatFunc::s_power(t.kappa)));
  const std::size_t order = model.slot_count();
  SExprMatrix m;
  m.reserve(order);
  for (std::size_t xi = 0; xi < order; ++xi) {
    m.push_back(row);
    for (auto& e : row) e = e.derivative();
  }
  return m;
}

/// X^(nu)(s0), nu = 0..max_nu, for the model's solution. Orders below the
/// identity's order come from the closed-form image; higher ones are solved
/// from the differentiated identity, so every row relation holds exactly.
/// Returns nullopt when s0 is a pole of anything involved.
inline std::optional<std::vector<Rational>> witness_derivatives(const SignalModel& model, const Rational& s0,
                                                               int max_nu) {
  try {
    const int n = std::max(model.order(), 0);
    std::vector<Rational> v;
    const ImageOracle oracle(model);
    for (int nu = 0; nu < n && nu <= max_nu; ++nu) v.push_back(oracle.value(s0, nu));
    if (max_nu < n) return v;
    SExpr row = model.identity();
    const Rational lead = row.signal_coeff(n)(s0);
    if (sgn(lead) == 0) return std::nullopt;
    for (int j = 0; n + j <= max_nu; ++j) {
      Rational rest = row.known_term()(s0);
      for (const auto& [nu, c] : row.signal_terms())
        if (nu < n + j) rest += c(s0) * v[static_cast<std::size_t>(nu)];
      v.push_back(-rest / lead);
      row = row.derivative();
    }
    return v;
  } catch (const pole_error&) {
    return std::nullopt;
  }
}

/// Rational matrix rank by fraction-free (Bareiss) elimination over Z.
inline int exact_rank(const RationalMatrix& in) {
  if (in.empty()) return 0;
  const std::size_t rows = in.size();
  const std::size_t cols = in.front().size();
  std::vector<std::vector<Integer>> m(rows, std::vector<Integer>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    Integer l = 1;
    for (const auto& x : in[i]) l = lcm(l, x.get_den());
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = in[i][j].get_num() * (l / in[i][j].get_den());
  }
  Integer prev = 1;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t piv = rank;
    while (piv < rows && m[piv][col] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      for (std::size_t j = col + 1; j < cols; ++j) {
        Integer t = m[rank][col] * m[i][j] - m[i][col] * m[rank][j];
        mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
        m[i][j] = t;
      }
      m[i][col] = 0;
    }
    prev = m[rank][col];
    ++rank;
  }
  return static_cast<int>(rank);
}

inline int max_signal_order(const SExprMatrix& m) {
  int n = 0;
  for (const auto& row : m)
    for (const auto& e : row) n = std::max(n, e.max_order());
  return n;
}

inline std::optional<RationalMatrix> evaluate_at(const SExprMatrix& m, const SignalModel& witness,
                                                 const Rational& s0) {
  const auto v = witness_derivatives(witness, s0, max_signal_order(m));
  if (!v) return std::nullopt;
  try {
    RationalMatrix out;
    for (const auto& row : m) {
      std::vector<Rational> r;
      for (const auto& e : row) r.push_back(e.evaluate(s0, *v));
      out.push_back(std::move(r));
    }
    return out;
  } catch (const pole_error&) {
    return std::nullopt;
  }
}

/// Max exact rank over `points` random specializations of s.
inline int rank_M(const SExprMatrix& m, const SignalModel& witness, Rng& rng, int points = 3) {
  int best = -1;
  int done = 0;
  for (int attempt = 0; done < points && attempt < 10 * points; ++attempt) {
    const auto vals = evaluate_at(m, witness, random_point(rng));
    if (!vals) continue;
    best = std::max(best, exact_rank(*vals));
    ++done;
  }
  if (done == 0) throw numerical_failure("rank check: every evaluation point hit a pole");
  return best;
}

/// A(s) theta = B(s), theta = unknown slot parameters.
struct SLinearSystem {
  SExprMatrix A;
  std::vector<SExpr> B;
  std::vector<std::string> theta_names;
  std::vector<int> row_orders;    // derivative order xi of each equation
  std::vector<int> strict_shift;  // power L in the factor s^-L applied per row
  int annihilation_order = 0;

  std::size_t size() const { return theta_names.size(); }

  std::string equation_string(std::size_t r) const {
    std::string lhs;
    for (std::size_t i = 0; i < A[r].size(); ++i) {
      if (A[r][i].is_zero()) continue;
      if (!lhs.empty()) lhs += " + ";
      lhs += theta_names[i] + "*[" + A[r][i].to_string() + "]";
    }
    return (lhs.empty() ? "0" : lhs) + " = " + B[r].to_string();
  }
};

/// Smallest L such that d^L/ds^L kills every b-slot carrying a nuisance parameter.
inline int annihilation_order(const SignalModel& model) {
  int l = 0;
  const std::set<std::string> nuis(model.nuisances.begin(), model.nuisances.end());
  for (const auto& t : model.a_terms)
    for (const auto& [n, f] : t.coeff.terms)
      if (nuis.count(n)) throw not_identifiable("nuisance parameter '" + n + "' multiplies the signal");
  for (const auto& t : model.b_terms)
    for (const auto& [n, f] : t.coeff.terms)
      if (nuis.count(n)) l = std::max(l, t.kappa + 1);
  return l;
}

/// Derivative rows, in ascending order, until rho rows with a nonvanishing
/// determinant are found. `extra_rows` bounds the search past rho.
inline SLinearSystem derive_linear_system(const SignalModel& model, Rng& rng, int extra_rows = 4) {
  const std::size_t rho = model.unknowns.size();
  SLinearSystem sys;
  sys.theta_names = model.unknowns;
  sys.annihilation_order = annihilation_order(model);

  // Identity split as  sum_i theta_i U_i = K + (nuisance part).
  std::vector<SExpr> u(rho);
  SExpr k;
  for (const auto& t : model.a_terms) {
    const SExpr mono = SExpr::signal(t.nu, RatFunc::s_power(t.mu));
    for (std::size_t i = 0; i < rho; ++i) {
      const Rational f = t.coeff.factor(model.unknowns[i]);
      if (sgn(f) != 0) u[i] = u[i] - mono.scale(RatFunc(f));
    }
    if (sgn(t.coeff.constant) != 0) k += mono.scale(RatFunc(t.coeff.constant));
  }
  for (const auto& t : model.b_terms) {
    const SExpr mono = SExpr::known(RatFunc::s_power(t.kappa));
    for (std::size_t i = 0; i < rho; ++i) {
      const Rational f = t.coeff.factor(model.unknowns[i]);
      if (sgn(f) != 0) u[i] += mono.scale(RatFunc(f));
    }
    if (sgn(t.coeff.constant) != 0) k = k - mono.scale(RatFunc(t.coeff.constant));
  }
  for (int j = 0; j < sys.annihilation_order; ++j) {
    for (auto& e : u) e = e.derivative();
    k = k.derivative();
  }

  const int last = sys.annihilation_order + static_cast<int>(rho) - 1 + extra_rows;
  std::vector<std::vector<SExpr>> cand_a;
  std::vector<SExpr> cand_b;
  std::vector<int> cand_xi;
  for (int xi = sys.annihilation_order; xi <= last; ++xi) {
    cand_a.push_back(u);
    cand_b.push_back(k);
    cand_xi.push_back(xi);
    for (auto& e : u) e = e.derivative();
    k = k.derivative();
  }

  // Specializations shared by every rank test below.
  const int points = 3;
  std::vector<Rational> s_points;
  std::vector<std::vector<Rational>> derivs;
  int max_nu = 0;
  for (const auto& row : cand_a)
    for (const auto& e : row) max_nu = std::max(max_nu, e.max_order());
  for (int attempt = 0; static_cast<int>(s_points.size()) < points && attempt < 30; ++attempt) {
    const Rational s0 = random_point(rng);
    auto v = witness_derivatives(model, s0, max_nu);
    if (!v) continue;
    try {
      for (const auto& row : cand_a)
        for (const auto& e : row) (void)e.evaluate(s0, *v);
    } catch (const pole_error&) {
      continue;
    }
    s_points.push_back(s0);
    derivs.push_back(std::move(*v));
  }
  if (s_points.empty()) throw numerical_failure("linear system: every evaluation point hit a pole");

  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < cand_a.size() && chosen.size() < rho; ++c) {
    bool independent = false;
    for (std::size_t p = 0; p < s_points.size() && !independent; ++p) {
      RationalMatrix m;
      for (std::size_t r : chosen) {
        std::vector<Rational> row;
        for (const auto& e : cand_a[r]) row.push_back(e.evaluate(s_points[p], derivs[p]));
        m.push_back(std::move(row));
      }
      std::vector<Rational> row;
      for (const auto& e : cand_a[c]) row.push_back(e.evaluate(s_points[p], derivs[p]));
      m.push_back(std::move(row));
      independent = exact_rank(m) == static_cast<int>(m.size());
    }
    if (independent) chosen.push_back(c);
  }
  if (chosen.size() < rho)
    throw not_identifiable("no " + std::to_string(rho) + " derivative rows up to order " + std::to_string(last) +
                           " give a nonsingular parameter matrix");
  for (std::size_t c : chosen) {
    sys.A.push_back(cand_a[c]);
    sys.B.push_back(cand_b[c]);
    sys.row_orders.push_back(cand_xi[c]);
    sys.strict_shift.push_back(0);
  }
  return sys;
}

/// Max |A(s) theta - B(s)| at random points with the model's true values.
inline double system_residual(const SLinearSystem& sys, const SignalModel& model, Rng& rng, int points = 5) {
  int max_nu = 0;
  for (std::size_t r = 0; r < sys.size(); ++r) {
    max_nu = std::max(max_nu, sys.B[r].max_order());
    for (const auto& e : sys.A[r]) max_nu = std::max(max_nu, e.max_order());
  }
  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < points && attempt < 10 * points; ++attempt) {
    const Rational s0 = random_point(rng);
    const auto v = witness_derivatives(model, s0, max_nu);
    if (!v) continue;
    try {
      for (std::size_t r = 0; r < sys.size(); ++r) {
        Rational acc = -sys.B[r].evaluate(s0, *v);
        for (std::size_t i = 0; i < sys.size(); ++i)
          acc += model.truth.at(sys.theta_names[i]) * sys.A[r][i].evaluate(s0, *v);
        worst = std::max(worst, std::abs(acc.get_d()));
      }
      ++done;
    } catch (const pole_error&) {
    }
  }
  if (done == 0) throw numerical_failure("system residual: every evaluation point hit a pole");
  return worst;
}

}  // namespace algest
