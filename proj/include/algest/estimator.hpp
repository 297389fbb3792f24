#pragma once

// From an s-domain linear system to a time-domain estimator.
//
// Rows are multiplied by s^-L until every monomial has a negative power of
// s. Then each monomial maps to an integral over the window [0, t]:
//
//     s^-k X^(nu)  ->  int_0^t (t - tau)^(k-1)/(k-1)! (-tau)^nu y(tau) dtau
//     s^-k         ->  t^(k-1)/(k-1)!
//
// which is the Cauchy form of the k-fold iterated integral.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "algest/diffop.hpp"
#include "algest/error.hpp"
#include "algest/exactalg.hpp"
#include "algest/identify.hpp"
#include "algest/sigmodel.hpp"

namespace algest {

namespace detail {

/// Largest power of s in a coefficient whose denominator is a power of s.
inline int max_s_power(const RatFunc& c) {
  if (c.is_zero()) return std::numeric_limits<int>::min();
  const int l = c.s_power_denominator();
  if (l < 0) throw invalid_input("coefficient " + c.to_string() + " is not a Laurent polynomial in s");
  return c.num().degree() - l;
}

inline int max_s_power(const SExpr& e) {
  int p = max_s_power(e.known_term());
  for (const auto& [nu, c] : e.signal_terms()) p = std::max(p, max_s_power(c));
  return p;
}

}  // namespace detail

/// Multiply each equation by s^-L, L = (largest s power in the row) + 1.
/// Rows that are already strict are left alone.
inline SLinearSystem strictify(const SLinearSystem& sys) {
  SLinearSystem out = sys;
  for (std::size_t r = 0; r < sys.size(); ++r) {
    int top = detail::max_s_power(sys.B[r]);
    for (const auto& e : sys.A[r]) top = std::max(top, detail::max_s_power(e));
    if (top < 0) continue;
    const int shift = top + 1;
    const RatFunc f = RatFunc::s_power(-shift);
    for (auto& e : out.A[r]) e = e.scale(f);
    out.B[r] = out.B[r].scale(f);
    out.strict_shift[r] += shift;
  }
  return out;
}

inline bool is_strict(const SLinearSystem& sys) {
  for (std::size_t r = 0; r < sys.size(); ++r) {
    if (detail::max_s_power(sys.B[r]) >= 0) return false;
    for (const auto& e : sys.A[r])
      if (detail::max_s_power(e) >= 0) return false;
  }
  return true;
}

enum class Applies { signal, one };

/// c * (t - tau)^(k-1)/(k-1)! * (-tau)^nu applied to y, or c * t^(k-1)/(k-1)!.
struct KernelTerm {
  Rational c;
  int k = 1;
  int nu = 0;
  Applies applies_to = Applies::signal;

  double coefficient() const { return c.get_d(); }
  friend bool operator==(const KernelTerm&, const KernelTerm&) = default;
};

using KernelEntry = std::vector<KernelTerm>;

enum class QuadratureRule { trapezoid, simpson };

struct CompiledEstimator {
  std::vector<std::vector<KernelEntry>> A;
  std::vector<KernelEntry> B;
  std::vector<std::string> theta_names;
  /// Relative: a window is ill-conditioned when |det A(t)| < divisor_floor * scale,
  /// scale = prod_i max_j |A_ij| over the full available window.
  double divisor_floor = 1e-9;
  QuadratureRule rule = QuadratureRule::trapezoid;

  std::size_t size() const { return theta_names.size(); }
};

namespace detail {
inline void append_terms(KernelEntry& out, const RatFunc& c, int nu, Applies applies) {
  if (c.is_zero()) return;
  const int l = c.s_power_denominator();
  if (l < 0) throw std::logic_error("compile: coefficient is not a Laurent polynomial in s");
  const auto& coeffs = c.num().coeffs();
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    if (sgn(coeffs[j]) == 0) continue;
    const int k = l - static_cast<int>(j);
    if (k < 1) throw std::logic_error("compile: non-strict monomial s^" + std::to_string(-k));
    out.push_back({coeffs[j], k, nu, applies});
  }
}

inline KernelEntry compile_entry(const SExpr& e) {
  KernelEntry out;
  for (const auto& [nu, c] : e.signal_terms()) append_terms(out, c, nu, Applies::signal);
  append_terms(out, e.known_term(), 0, Applies::one);
  return out;
}
}  // namespace detail

/// Strict s-domain system to kernel lists; each monomial becomes one term.
inline CompiledEstimator compile(const SLinearSystem& sys) {
  CompiledEstimator est;
  est.theta_names = sys.theta_names;
  for (std::size_t r = 0; r < sys.size(); ++r) {
    std::vector<KernelEntry> row;
    for (const auto& e : sys.A[r]) row.push_back(detail::compile_entry(e));
    est.A.push_back(std::move(row));
    est.B.push_back(detail::compile_entry(sys.B[r]));
  }
  return est;
}

/// Quadrature weights on m+1 equispaced nodes with spacing h.
inline std::vector<double> quadrature_weights(std::size_t m, double h, QuadratureRule rule) {
  std::vector<double> w(m + 1, 0.0);
  if (m == 0) return w;
  if (rule == QuadratureRule::trapezoid || m < 2) {
    std::fill(w.begin(), w.end(), h);
    w.front() = w.back() = 0.5 * h;
    return w;
  }
  // Composite Simpson; an odd interval count ends with a 3/8 panel.
  const std::size_t simpson_end = (m % 2 == 0) ? m : m - 3;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (simpson_end != m) {
    const double c = 3.0 * h / 8.0;
    w[m - 3] += c;
    w[m - 2] += 3.0 * c;
    w[m - 1] += 3.0 * c;
    w[m] += c;
  }
  return w;
}

namespace detail {
inline double factorial_d(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

inline double known_part(const KernelEntry& terms, double t) {
  double acc = 0.0;
  for (const auto& term : terms)
    if (term.applies_to == Applies::one)
      acc += term.coefficient() * ipow(t, term.k - 1) / factorial_d(term.k - 1);
  return acc;
}

inline bool has_signal(const KernelEntry& terms) {
  return std::any_of(terms.begin(), terms.end(), [](const KernelTerm& t) { return t.applies_to == Applies::signal; });
}

/// Quadrature-weighted kernel values w_i K(tau_i), tau_i = i h, t = m h.
inline std::vector<double> kernel_weights(const KernelEntry& terms, std::size_t m, double h, QuadratureRule rule) {
  std::vector<double> w = quadrature_weights(m, h, rule);
  const double t = static_cast<double>(m) * h;
  std::vector<double> k(m + 1, 0.0);
  for (const auto& term : terms) {
    if (term.applies_to != Applies::signal) continue;
    const double c = term.coefficient() / factorial_d(term.k - 1);
    for (std::size_t i = 0; i <= m; ++i) {
      const double tau = static_cast<double>(i) * h;
      k[i] += c * ipow(t - tau, term.k - 1) * ipow(-tau, term.nu);
    }
  }
  for (std::size_t i = 0; i <= m; ++i) k[i] *= w[i];
  return k;
}

inline std::size_t snap_window(double t, double h, std::size_t n) {
  if (!(h > 0.0)) throw invalid_input("signal grid has nonpositive spacing");
  const double idx = t / h;
  if (!(idx > -1e-6) || idx > static_cast<double>(n - 1) + 1e-6)
    throw invalid_input("window width " + std::to_string(t) + " is outside the sampled range");
  return static_cast<std::size_t>(std::llround(std::max(0.0, idx)));
}
}  // namespace detail

/// Sum over terms of the kernel integral on [0, t] (time origin at y.t0),
/// plus the known polynomial parts.
inline double kernel_eval(const KernelEntry& terms, const SampledSignal& y, double t,
                          QuadratureRule rule = QuadratureRule::trapezoid) {
  const std::size_t m = detail::snap_window(t, y.step(), y.size());
  const double h = y.step();
  double acc = detail::known_part(terms, static_cast<double>(m) * h);
  if (!detail::has_signal(terms)) return acc;
  const auto k = detail::kernel_weights(terms, m, h, rule);
  for (std::size_t i = 0; i <= m; ++i) acc += k[i] * y.values[i];
  return acc;
}

enum class EstimateStatus { ok, ill_conditioned };

inline std::string_view to_string(EstimateStatus s) { return s == EstimateStatus::ok ? "ok" : "ill_conditioned"; }

struct EstimateResult {
  double t = 0.0;
  std::vector<double> theta_hat;
  double divisor = 0.0;  // det A(t)
  double condition = 0.0;
  double floor = 0.0;  // effective divisor floor used for the status
  EstimateStatus status = EstimateStatus::ok;
};

struct AssembledSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
};

/// Kernel weights precomputed for one window length; reused across windows
/// and noise trials on grids of the same spacing.
class EstimatorPlan {
 public:
  EstimatorPlan(const CompiledEstimator& est, std::size_t m, double h) : est_(&est), m_(m), h_(h) {
    const std::size_t rho = est.size();
    const double t = static_cast<double>(m) * h;
    a_known_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rho), static_cast<Eigen::Index>(rho));
    b_known_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho));
    a_w_.resize(rho);
    b_w_.resize(rho);
    for (std::size_t r = 0; r < rho; ++r) {
      a_w_[r].resize(rho);
      for (std::size_t c = 0; c < rho; ++c) {
        const auto& e = est.A[r][c];
        a_known_(r, c) = detail::known_part(e, t);
        if (detail::has_signal(e)) a_w_[r][c] = detail::kernel_weights(e, m, h, est.rule);
      }
      b_known_(r) = detail::known_part(est.B[r], t);
      if (detail::has_signal(est.B[r])) b_w_[r] = detail::kernel_weights(est.B[r], m, h, est.rule);
    }
  }

  std::size_t window_intervals() const { return m_; }
  double window() const { return static_cast<double>(m_) * h_; }

  /// A(t), B(t) from samples y[0..m] (time origin at y[0]).
  AssembledSystem assemble(std::span<const double> y) const {
    if (y.size() < m_ + 1) throw invalid_input("window exceeds the available samples");
    AssembledSystem s{a_known_, b_known_};
    const std::size_t rho = est_->size();
    for (std::size_t r = 0; r < rho; ++r) {
      for (std::size_t c = 0; c < rho; ++c)
        if (!a_w_[r][c].empty()) s.A(r, c) += dot(a_w_[r][c], y);
      if (!b_w_[r].empty()) s.B(r) += dot(b_w_[r], y);
    }
    return s;
  }

 private:
  static double dot(const std::vector<double>& w, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * y[i];
    return acc;
  }

  const CompiledEstimator* est_;
  std::size_t m_;
  double h_;
  Eigen::MatrixXd a_known_;
  Eigen::VectorXd b_known_;
  std::vector<std::vector<std::vector<double>>> a_w_;
  std::vector<std::vector<double>> b_w_;
};

inline double row_scale(const Eigen::MatrixXd& a) {
  double scale = 1.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) scale *= a.row(r).cwiseAbs().maxCoeff();
  return scale;
}

/// Solve A theta = B with partial pivoting and classify the divisor.
inline EstimateResult solve_assembled(const AssembledSystem& s, double t, double floor) {
  EstimateResult res;
  res.t = t;
  res.floor = floor;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(s.A);
  res.divisor = s.A.size() == 0 ? 0.0 : lu.determinant();
  const auto rho = s.A.rows();
  if (res.divisor == 0.0 || !std::isfinite(res.divisor)) {
    res.theta_hat.assign(static_cast<std::size_t>(rho), std::numeric_limits<double>::quiet_NaN());
    res.condition = std::numeric_limits<double>::infinity();
  } else {
    const Eigen::VectorXd th = lu.solve(s.B);
    res.theta_hat.assign(th.data(), th.data() + th.size());
    const Eigen::MatrixXd inv = lu.inverse();
    res.condition = s.A.cwiseAbs().rowwise().sum().maxCoeff() * inv.cwiseAbs().rowwise().sum().maxCoeff();
  }
  res.status = std::abs(res.divisor) < floor ? EstimateStatus::ill_conditioned : EstimateStatus::ok;
  return res;
}

/// Estimate on the window [0, t] measured from y.t0.
inline EstimateResult estimate(const CompiledEstimator& est, const SampledSignal& y, double t) {
  const double h = y.step();
  const std::size_t m = detail::snap_window(t, h, y.size());
  const EstimatorPlan plan(est, m, h);
  const AssembledSystem s = plan.assemble(y.values);
  double scale = row_scale(s.A);
  if (m != y.size() - 1) {
    const EstimatorPlan full(est, y.size() - 1, h);
    scale = row_scale(full.assemble(y.values).A);
  }
  return solve_assembled(s, plan.window(), est.divisor_floor * scale);
}

/// Sub-signal y[first .. first+m], time re-zeroed at its first sample.
inline SampledSignal window_of(const SampledSignal& y, std::size_t first, std::size_t m) {
  if (first + m > y.size() - 1) throw invalid_input("window past the end of the signal");
  const double h = y.step();
  std::vector<double> v(y.values.begin() + static_cast<std::ptrdiff_t>(first),
                        y.values.begin() + static_cast<std::ptrdiff_t>(first + m + 1));
  return SampledSignal(0.0, static_cast<double>(m) * h, std::move(v));
}

/// One estimate per window [k*stride, k*stride + window], each with its own
/// time origin, for every window that fits in the signal.
inline std::vector<EstimateResult> sliding_estimate(const CompiledEstimator& est, const SampledSignal& y,
                                                    double window, double stride) {
  if (!(stride > 0.0)) throw invalid_input("stride must be positive");
  if (!(window > 0.0)) throw invalid_input("window must be positive");
  const double h = y.step();
  if (window > y.span() + 0.5 * h) throw invalid_input("window longer than the signal");
  const std::size_t m = detail::snap_window(window, h, y.size());
  const auto step = static_cast<std::size_t>(std::llround(stride / h));
  if (m == 0 || step == 0) throw invalid_input("window or stride shorter than the sampling step");
  const EstimatorPlan plan(est, m, h);
  std::vector<EstimateResult> out;
  for (std::size_t first = 0; first + m <= y.size() - 1; first += step) {
    const auto s = plan.assemble(std::span<const double>(y.values).subspan(first, m + 1));
    out.push_back(solve_assembled(s, plan.window(), est.divisor_floor * row_scale(s.A)));
  }
  if (out.empty()) throw invalid_input("no complete window fits in the signal");
  return out;
}

/// Everything from a model to a compiled estimator.
struct Derivation {
  SExprMatrix matrix;
  int rank = 0;
  SLinearSystem system;
  SLinearSystem strict;
  CompiledEstimator estimator;
};

inline Derivation derive(const SignalModel& model, Rng& rng) {
  Derivation d;
  d.matrix = build_M(model);
  d.rank = rank_M(d.matrix, model, rng);
  d.system = derive_linear_system(model, rng);
  d.strict = strictify(d.system);
  d.estimator = compile(d.strict);
  return d;
}

}  // namespace algest
