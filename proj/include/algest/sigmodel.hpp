#pragma once

// Signal families and their operational identities
//
//     sum a_{mu,nu} s^mu X^(nu)(s) - sum b_kappa s^kappa = 0,
//
// where X is the image of the time signal under the convention
// s^-(k+1) <-> t^k/k!, d/ds <-> multiplication by -t.
//
// Every coefficient slot holds an affine form in named slot parameters.
// Slot parameters are either unknown (to be estimated), nuisance (only in
// b-slots, removed by annihilation) or folded into the constant part.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "algest/diffop.hpp"
#include "algest/error.hpp"
#include "algest/exactalg.hpp"

namespace algest {

using Rng = std::mt19937_64;
using ParamValues = std::map<std::string, double>;

enum class ModelKind { constant, polynomial, trig_sum, sinc, raised_cosine, rational };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::constant: return "constant";
    case ModelKind::polynomial: return "polynomial";
    case ModelKind::trig_sum: return "trig_sum";
    case ModelKind::sinc: return "sinc";
    case ModelKind::raised_cosine: return "raised_cosine";
    case ModelKind::rational: return "rational";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "constant") return ModelKind::constant;
  if (s == "polynomial") return ModelKind::polynomial;
  if (s == "trig_sum" || s == "tone") return ModelKind::trig_sum;
  if (s == "sinc") return ModelKind::sinc;
  if (s == "raised_cosine") return ModelKind::raised_cosine;
  if (s == "rational") return ModelKind::rational;
  throw config_error("unknown model kind '" + std::string(s) + "'");
}

/// Everything needed to build a model and to sample its ground truth.
struct ModelSpec {
  ModelKind kind = ModelKind::constant;
  int tones = 1;                   // trig_sum
  bool unknown_frequency = false;  // trig_sum with one tone
  bool known_phase = false;        // trig_sum: amplitudes are the only unknowns
  int degree = 0;                  // polynomial
  int num_degree = 0;              // rational
  int den_degree = 1;              // rational
  ParamValues params;
  std::optional<std::vector<std::string>> unknowns;  // overrides the kind's default mask
};

/// constant + sum_i factor_i * theta_i over slot parameter names.
struct AffineForm {
  Rational constant;
  std::map<std::string, Rational> terms;

  static AffineForm known(const Rational& c) { return {c, {}}; }
  static AffineForm param(const std::string& name, const Rational& factor = 1) {
    AffineForm f;
    if (sgn(factor) != 0) f.terms[name] = factor;
    return f;
  }
  bool is_zero() const { return sgn(constant) == 0 && terms.empty(); }
  bool is_pure_constant() const { return terms.empty(); }
  Rational factor(const std::string& name) const {
    auto it = terms.find(name);
    return it == terms.end() ? Rational(0) : it->second;
  }
  Rational value(const std::map<std::string, Rational>& truth) const {
    Rational v = constant;
    for (const auto& [n, f] : terms) v += f * truth.at(n);
    return v;
  }
  std::string to_string() const {
    std::string out;
    if (sgn(constant) != 0 || terms.empty()) out = constant.get_str();
    for (const auto& [n, f] : terms) {
      if (!out.empty()) out += sgn(f) < 0 ? " - " : " + ";
      else if (sgn(f) < 0) out += "-";
      const Rational mag = abs(f);
      out += (mag == 1 ? "" : mag.get_str() + "*") + n;
    }
    return out;
  }
};

struct ATerm {
  int mu = 0;  // power of s
  int nu = 0;  // derivative order of X
  AffineForm coeff;
};

struct BTerm {
  int kappa = 0;
  AffineForm coeff;
};

struct SignalModel {
  ModelSpec spec;
  std::vector<ATerm> a_terms;
  std::vector<BTerm> b_terms;
  std::vector<std::string> unknowns;   // Theta, in estimator order
  std::vector<std::string> nuisances;  // annihilated before extraction
  std::map<std::string, Rational> truth;  // slot parameter values (witness)

  int N() const { return static_cast<int>(a_terms.size()) - 1; }
  int M() const { return static_cast<int>(b_terms.size()); }
  std::size_t slot_count() const { return a_terms.size() + b_terms.size(); }

  /// Highest derivative order of X in the identity.
  int order() const {
    int n = -1;
    for (const auto& t : a_terms) n = std::max(n, t.nu);
    return n;
  }

  /// The identity with every slot evaluated at the truth values.
  SExpr identity() const {
    SExpr e;
    for (const auto& t : a_terms)
      e += SExpr::signal(t.nu, RatFunc(Poly::monomial(t.coeff.value(truth), static_cast<std::size_t>(t.mu))));
    for (const auto& t : b_terms)
      e += SExpr::known(RatFunc(Poly::monomial(-t.coeff.value(truth), static_cast<std::size_t>(t.kappa))));
    return e;
  }

  double truth_value(const std::string& name) const { return truth.at(name).get_d(); }
  std::vector<double> true_unknowns() const {
    std::vector<double> v;
    for (const auto& n : unknowns) v.push_back(truth_value(n));
    return v;
  }

  std::string identity_string() const {
    std::string lhs;
    for (const auto& t : a_terms) {
      if (!lhs.empty()) lhs += " + ";
      std::string s = t.mu == 0 ? "" : (t.mu == 1 ? "s*" : "s^" + std::to_string(t.mu) + "*");
      lhs += "(" + t.coeff.to_string() + ")*" + s + detail::derivative_symbol(t.nu);
    }
    std::string rhs;
    for (const auto& t : b_terms) {
      if (!rhs.empty()) rhs += " + ";
      std::string s = t.kappa == 0 ? "" : (t.kappa == 1 ? "*s" : "*s^" + std::to_string(t.kappa));
      rhs += "(" + t.coeff.to_string() + ")" + s;
    }
    return lhs + " = " + (rhs.empty() ? "0" : rhs);
  }
};

namespace detail {

inline double param_or(const ParamValues& p, const std::string& name, std::optional<double> fallback) {
  auto it = p.find(name);
  if (it != p.end()) return it->second;
  if (fallback) return *fallback;
  throw config_error("missing parameter '" + name + "'");
}

inline std::string tone_key(const std::string& base, int i, int tones) {
  return tones == 1 ? base : base + std::to_string(i + 1);
}

inline Rational factorial(int n) {
  Integer r;
  mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(r);
}

// Witness values used when a parameter only feeds unknown or nuisance slots.
constexpr double kDefaultAmplitude = 1.0;
constexpr double kDefaultPhase = 0.7;
constexpr double kDefaultOmega = 1.0;

struct Draft {
  std::vector<ATerm> a;
  std::vector<BTerm> b;
  std::map<std::string, Rational> truth;
  std::vector<std::string> default_unknowns;
};

inline Draft draft_constant(const ModelSpec& spec) {
  Draft d;
  d.truth["theta"] = to_rational(param_or(spec.params, "theta", 1.0));
  d.a.push_back({1, 0, AffineForm::known(1)});
  d.b.push_back({0, AffineForm::param("theta")});
  d.default_unknowns = {"theta"};
  return d;
}

inline Draft draft_polynomial(const ModelSpec& spec) {
  if (spec.degree < 0) throw config_error("polynomial degree must be nonnegative");
  Draft d;
  const int deg = spec.degree;
  d.a.push_back({deg + 1, 0, AffineForm::known(1)});
  for (int j = 0; j <= deg; ++j) {
    const std::string name = "c" + std::to_string(j);
    d.truth[name] = to_rational(param_or(spec.params, name, 1.0));
    d.default_unknowns.push_back(name);
  }
  // X = sum_j c_j j!/s^(j+1)  =>  s^(deg+1) X = sum_kappa (deg-kappa)! c_(deg-kappa) s^kappa
  for (int kappa = deg; kappa >= 0; --kappa)
    d.b.push_back({kappa, AffineForm::param("c" + std::to_string(deg - kappa), factorial(deg - kappa))});
  return d;
}

inline Draft draft_trig(const ModelSpec& spec) {
  const int n = spec.tones;
  if (n < 1) throw config_error("trig_sum needs at least one tone");
  if (spec.unknown_frequency && n != 1)
    throw config_error("unknown frequency is supported for a single tone only");
  if (spec.unknown_frequency && spec.known_phase)
    throw config_error("known_phase and unknown_frequency are exclusive");
  Draft d;
  std::vector<Rational> omega(n);
  std::vector<Rational> p1(n);
  std::vector<Rational> p2(n);
  std::vector<Rational> sin_phi(n);
  std::vector<Rational> cos_phi(n);
  for (int i = 0; i < n; ++i) {
    const double w = param_or(spec.params, tone_key("omega", i, n),
                              spec.unknown_frequency ? std::optional<double>(kDefaultOmega) : std::nullopt);
    if (!(w > 0.0)) throw config_error("tone frequency must be positive");
    const bool phase_needed = spec.known_phase;
    const double a = param_or(spec.params, tone_key("A", i, n), kDefaultAmplitude);
    const double phi = param_or(spec.params, tone_key("phi", i, n),
                                phase_needed ? std::nullopt : std::optional<double>(kDefaultPhase));
    omega[i] = to_rational(w);
    sin_phi[i] = to_rational(std::sin(phi));
    cos_phi[i] = to_rational(std::cos(phi));
    p1[i] = to_rational(a * std::sin(phi));
    p2[i] = to_rational(a * std::cos(phi));
    if (spec.known_phase) d.truth[tone_key("A", i, n)] = to_rational(a);
  }

  if (spec.unknown_frequency) {
    // (s^2 + w2) X = b1 s + b0
    d.truth["w2"] = omega[0] * omega[0];
    d.truth["b1"] = p1[0];
    d.truth["b0"] = omega[0] * p2[0];
    d.a.push_back({2, 0, AffineForm::known(1)});
    d.a.push_back({0, 0, AffineForm::param("w2")});
    d.b.push_back({1, AffineForm::param("b1")});
    d.b.push_back({0, AffineForm::param("b0")});
    d.default_unknowns = {"w2"};
    return d;
  }

  // Q = prod (s^2 + w_i^2), Q_i = Q / (s^2 + w_i^2)
  Poly q(Rational(1));
  std::vector<Poly> q_except(n, Poly(Rational(1)));
  for (int i = 0; i < n; ++i) {
    const Poly f{omega[i] * omega[i], Rational(0), Rational(1)};
    q *= f;
    for (int j = 0; j < n; ++j)
      if (j != i) q_except[j] *= f;
  }
  for (int mu = q.degree(); mu >= 0; --mu)
    if (sgn(q.coeff(static_cast<std::size_t>(mu))) != 0)
      d.a.push_back({mu, 0, AffineForm::known(q.coeff(static_cast<std::size_t>(mu)))});

  // P = sum_i (p1_i s + p2_i w_i) Q_i
  for (int kappa = 2 * n - 1; kappa >= 0; --kappa) {
    AffineForm f;
    for (int i = 0; i < n; ++i) {
      const Rational from_p1 = kappa >= 1 ? q_except[i].coeff(static_cast<std::size_t>(kappa - 1)) : Rational(0);
      const Rational from_p2 = omega[i] * q_except[i].coeff(static_cast<std::size_t>(kappa));
      if (spec.known_phase) {
        const Rational fac = from_p1 * sin_phi[i] + from_p2 * cos_phi[i];
        if (sgn(fac) != 0) f.terms[tone_key("A", i, n)] += fac;
      } else {
        const std::string k1 = n == 1 ? "p1" : "p1_" + std::to_string(i + 1);
        const std::string k2 = n == 1 ? "p2" : "p2_" + std::to_string(i + 1);
        if (sgn(from_p1) != 0) f.terms[k1] += from_p1;
        if (sgn(from_p2) != 0) f.terms[k2] += from_p2;
      }
    }
    d.b.push_back({kappa, f});
  }
  for (int i = 0; i < n; ++i) {
    if (spec.known_phase) {
      d.default_unknowns.push_back(tone_key("A", i, n));
    } else {
      const std::string k1 = n == 1 ? "p1" : "p1_" + std::to_string(i + 1);
      const std::string k2 = n == 1 ? "p2" : "p2_" + std::to_string(i + 1);
      d.truth[k1] = p1[i];
      d.truth[k2] = p2[i];
      d.default_unknowns.push_back(k1);
      d.default_unknowns.push_back(k2);
    }
  }
  return d;
}

inline Draft draft_sinc(const ModelSpec& spec) {
  // x = sin(w t)/t:  (s^2 + w^2) X' + w = 0
  Draft d;
  const Rational w = to_rational(param_or(spec.params, "omega", kDefaultOmega));
  if (sgn(w) <= 0) throw config_error("sinc frequency must be positive");
  d.truth["w2"] = w * w;
  d.truth["b0"] = -w;
  d.a.push_back({2, 1, AffineForm::known(1)});
  d.a.push_back({0, 1, AffineForm::param("w2")});
  d.b.push_back({0, AffineForm::param("b0")});
  d.default_unknowns = {"w2"};
  return d;
}

inline Draft draft_raised_cosine(const ModelSpec& spec) {
  // x = cos(w t)/(1 + t^2):  (s^2 + w^2)(X + X'') - s = 0
  Draft d;
  const Rational w = to_rational(param_or(spec.params, "omega", kDefaultOmega));
  if (sgn(w) <= 0) throw config_error("raised cosine frequency must be positive");
  d.truth["w2"] = w * w;
  d.a.push_back({2, 0, AffineForm::known(1)});
  d.a.push_back({0, 0, AffineForm::param("w2")});
  d.a.push_back({2, 2, AffineForm::known(1)});
  d.a.push_back({0, 2, AffineForm::param("w2")});
  d.b.push_back({1, AffineForm::known(1)});
  d.default_unknowns = {"w2"};
  return d;
}

inline Draft draft_rational(const ModelSpec& spec) {
  // x_hat = p/q, normalized by the leading coefficient of q.
  const int dp = spec.num_degree;
  const int dq = spec.den_degree;
  if (dq < 1 || dp < 0 || dp >= dq) throw config_error("rational model needs 0 <= num_degree < den_degree");
  Draft d;
  const Rational lead = to_rational(param_or(spec.params, "q" + std::to_string(dq), std::nullopt));
  if (sgn(lead) == 0) throw config_error("leading denominator coefficient must be nonzero");
  for (int mu = dq; mu >= 0; --mu) {
    const std::string name = "q" + std::to_string(mu);
    if (mu == dq) {
      d.a.push_back({mu, 0, AffineForm::known(1)});
      continue;
    }
    d.truth[name] = to_rational(param_or(spec.params, name, std::nullopt)) / lead;
    d.a.push_back({mu, 0, AffineForm::param(name)});
    d.default_unknowns.push_back(name);
  }
  for (int kappa = dp; kappa >= 0; --kappa) {
    const std::string name = "p" + std::to_string(kappa);
    d.truth[name] = to_rational(param_or(spec.params, name, std::nullopt)) / lead;
    d.b.push_back({kappa, AffineForm::param(name)});
    d.default_unknowns.push_back(name);
  }
  return d;
}

inline AffineForm fold(const AffineForm& f, const std::set<std::string>& keep,
                       const std::map<std::string, Rational>& truth) {
  AffineForm r;
  r.constant = f.constant;
  for (const auto& [n, c] : f.terms) {
    if (keep.count(n)) {
      r.terms[n] += c;
    } else {
      r.constant += c * truth.at(n);
    }
  }
  for (auto it = r.terms.begin(); it != r.terms.end();) it = sgn(it->second) == 0 ? r.terms.erase(it) : std::next(it);
  return r;
}

}  // namespace detail

/// Operational identity, parameter mask and witness values for a family.
inline SignalModel build_model(const ModelSpec& spec) {
  detail::Draft d;
  switch (spec.kind) {
    case ModelKind::constant: d = detail::draft_constant(spec); break;
    case ModelKind::polynomial: d = detail::draft_polynomial(spec); break;
    case ModelKind::trig_sum: d = detail::draft_trig(spec); break;
    case ModelKind::sinc: d = detail::draft_sinc(spec); break;
    case ModelKind::raised_cosine: d = detail::draft_raised_cosine(spec); break;
    case ModelKind::rational: d = detail::draft_rational(spec); break;
  }

  SignalModel m;
  m.spec = spec;
  m.truth = d.truth;
  m.unknowns = spec.unknowns.value_or(d.default_unknowns);
  if (m.unknowns.empty()) throw config_error("the unknown parameter set is empty");
  std::set<std::string> unknown_set(m.unknowns.begin(), m.unknowns.end());
  if (unknown_set.size() != m.unknowns.size()) throw config_error("duplicate unknown parameter");
  for (const auto& u : m.unknowns)
    if (!d.truth.count(u)) throw config_error("'" + u + "' is not a parameter of this model");

  // Parameters left out of the mask: nuisance if confined to b-slots, known otherwise.
  std::set<std::string> in_a;
  std::set<std::string> in_b;
  for (const auto& t : d.a)
    for (const auto& [n, c] : t.coeff.terms) in_a.insert(n);
  for (const auto& t : d.b)
    for (const auto& [n, c] : t.coeff.terms) in_b.insert(n);
  std::set<std::string> keep = unknown_set;
  for (const auto& n : in_b)
    if (!unknown_set.count(n) && !in_a.count(n)) {
      m.nuisances.push_back(n);
      keep.insert(n);
    }

  for (const auto& t : d.a) {
    ATerm f{t.mu, t.nu, detail::fold(t.coeff, keep, d.truth)};
    if (!f.coeff.is_zero()) m.a_terms.push_back(f);
  }
  for (const auto& t : d.b) {
    BTerm f{t.kappa, detail::fold(t.coeff, keep, d.truth)};
    if (!f.coeff.is_zero()) m.b_terms.push_back(f);
  }

  const bool has_normalizer =
      std::any_of(m.a_terms.begin(), m.a_terms.end(), [](const ATerm& t) { return t.coeff.is_pure_constant(); }) ||
      std::any_of(m.b_terms.begin(), m.b_terms.end(), [](const BTerm& t) { return t.coeff.is_pure_constant(); });
  if (!has_normalizer) throw config_error("the unknown set must leave one known nonzero coefficient");
  return m;
}

/// Uniform grid on [t0, t1] with both endpoints.
struct Grid {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t n = 2;

  void validate() const {
    if (!(t1 > t0)) throw invalid_input("grid needs t1 > t0");
    if (n < 2) throw invalid_input("grid needs at least two samples");
  }
  double step() const { return (t1 - t0) / static_cast<double>(n - 1); }
  double time(std::size_t i) const { return t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1); }
};

struct SampledSignal {
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<double> values;

  SampledSignal() = default;
  SampledSignal(double a, double b, std::vector<double> v) : t0(a), t1(b), values(std::move(v)) {}
  SampledSignal(const Grid& g, std::vector<double> v) : t0(g.t0), t1(g.t1), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  Grid grid() const { return {t0, t1, values.size()}; }
  double step() const { return grid().step(); }
  double span() const { return t1 - t0; }
  double time(std::size_t i) const { return grid().time(i); }
};

namespace detail {
inline std::vector<double> sample_rational(const ModelSpec& spec, const Grid& grid) {
  const int dp = spec.num_degree;
  const int dq = spec.den_degree;
  const double lead = param_or(spec.params, "q" + std::to_string(dq), std::nullopt);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dq, dq);
  for (int i = 0; i + 1 < dq; ++i) a(i, i + 1) = 1.0;
  for (int j = 0; j < dq; ++j) a(dq - 1, j) = -param_or(spec.params, "q" + std::to_string(j), std::nullopt) / lead;
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(dq);
  for (int k = 0; k <= dp; ++k) c(k) = param_or(spec.params, "p" + std::to_string(k), std::nullopt) / lead;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dq);
  b(dq - 1) = 1.0;

  std::vector<double> out(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const Eigen::MatrixXd e = (a * grid.time(i)).exp();
    out[i] = c * e * b;
  }
  return out;
}
}  // namespace detail

/// Closed-form time signal on the grid.
inline SampledSignal sample_solution(const ModelSpec& spec, const Grid& grid) {
  grid.validate();
  const auto& p = spec.params;
  std::vector<double> v(grid.n);
  switch (spec.kind) {
    case ModelKind::constant: {
      const double th = detail::param_or(p, "theta", 1.0);
      std::fill(v.begin(), v.end(), th);
      break;
    }
    case ModelKind::polynomial: {
      std::vector<double> c(static_cast<std::size_t>(spec.degree) + 1);
      for (int j = 0; j <= spec.degree; ++j) c[j] = detail::param_or(p, "c" + std::to_string(j), 1.0);
      for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i);
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
        v[i] = acc;
      }
      break;
    }
    case ModelKind::trig_sum: {
      const int n = spec.tones;
      for (int k = 0; k < n; ++k) {
        const double a = detail::param_or(p, detail::tone_key("A", k, n), detail::kDefaultAmplitude);
        const double w = detail::param_or(p, detail::tone_key("omega", k, n),
                                          spec.unknown_frequency ? std::optional<double>(detail::kDefaultOmega)
                                                                 : std::nullopt);
        const double phi = detail::param_or(p, detail::tone_key("phi", k, n), detail::kDefaultPhase);
        for (std::size_t i = 0; i < grid.n; ++i) v[i] += a * std::sin(w * grid.time(i) + phi);
      }
      break;
    }
    case ModelKind::sinc: {
      const double w = detail::param_or(p, "omega", detail::kDefaultOmega);
      for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i);
        v[i] = t == 0.0 ? w : std::sin(w * t) / t;
      }
      break;
    }
    case ModelKind::raised_cosine: {
      const double w = detail::param_or(p, "omega", detail::kDefaultOmega);
      for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i);
        v[i] = std::cos(w * t) / (1.0 + t * t);
      }
      break;
    }
    case ModelKind::rational: v = detail::sample_rational(spec, grid); break;
  }
  return SampledSignal(grid, std::move(v));
}

/// Random evaluation point in [1/2, 10] with a small denominator.
inline Rational random_point(Rng& rng) {
  std::uniform_int_distribution<long> num(50, 1000);
  std::uniform_int_distribution<long> den(50, 100);
  return make_rational(num(rng), den(rng));
}

/// Values of X^(nu)(s) for the family's closed-form image. Exact for every
/// family whose image is rational; the sinc image itself and the raised
/// cosine image are obtained numerically and converted exactly.
class ImageOracle {
 public:
  explicit ImageOracle(const SignalModel& model) : spec_(model.spec) {
    const auto& p = spec_.params;
    switch (spec_.kind) {
      case ModelKind::constant:
        rational_ = RatFunc(Poly(to_rational(detail::param_or(p, "theta", 1.0))), Poly::monomial(1, 1));
        break;
      case ModelKind::polynomial: {
        RatFunc acc;
        for (int j = 0; j <= spec_.degree; ++j)
          acc += RatFunc(to_rational(detail::param_or(p, "c" + std::to_string(j), 1.0)) * detail::factorial(j)) *
                 RatFunc::s_power(-(j + 1));
        rational_ = acc;
        break;
      }
      case ModelKind::trig_sum: {
        // Built from the same exact slot values the model uses.
        const SignalModel full = build_model(full_mask(spec_));
        Poly num;
        Poly den;
        for (const auto& t : full.a_terms)
          den = den + Poly::monomial(t.coeff.value(full.truth), static_cast<std::size_t>(t.mu));
        for (const auto& t : full.b_terms)
          num = num + Poly::monomial(t.coeff.value(full.truth), static_cast<std::size_t>(t.kappa));
        rational_ = RatFunc(num, den);
        break;
      }
      case ModelKind::sinc: {
        const Rational w = to_rational(detail::param_or(p, "omega", detail::kDefaultOmega));
        omega_ = w.get_d();
        derivative_image_ = RatFunc(Poly(Rational(-w)), Poly{w * w, Rational(0), Rational(1)});
        break;
      }
      case ModelKind::raised_cosine: omega_ = detail::param_or(p, "omega", detail::kDefaultOmega); break;
      case ModelKind::rational: {
        Poly num;
        Poly den;
        for (int k = 0; k <= spec_.num_degree; ++k)
          num = num + Poly::monomial(to_rational(detail::param_or(p, "p" + std::to_string(k), std::nullopt)),
                                     static_cast<std::size_t>(k));
        for (int k = 0; k <= spec_.den_degree; ++k)
          den = den + Poly::monomial(to_rational(detail::param_or(p, "q" + std::to_string(k), std::nullopt)),
                                     static_cast<std::size_t>(k));
        rational_ = RatFunc(num, den);
        break;
      }
    }
  }

  /// X^(nu)(s). Throws pole_error at a pole.
  Rational value(const Rational& s, int nu) const {
    if (rational_) return nth_derivative(*rational_, nu)(s);
    if (spec_.kind == ModelKind::sinc) {
      if (nu >= 1) return nth_derivative(*derivative_image_, nu - 1)(s);
      return to_rational(std::atan(omega_ / s.get_d()));
    }
    return to_rational(raised_cosine_laplace(s.get_d(), nu));
  }

  bool exact(int nu) const {
    return rational_.has_value() || (spec_.kind == ModelKind::sinc && nu >= 1);
  }

  /// int_0^inf (-t)^nu cos(w t)/(1+t^2) e^(-s t) dt
  double raised_cosine_laplace(double s, int nu) const {
    if (!(s > 0.0)) throw pole_error("Laplace integral needs s > 0");
    boost::math::quadrature::exp_sinh<long double> integrator;
    const long double w = omega_;
    const long double sl = s;
    auto f = [&](long double t) {
      const long double e = std::exp(-sl * t);
      if (e == 0.0L) return 0.0L;
      return std::pow(-t, nu) * std::cos(w * t) / (1.0L + t * t) * e;
    };
    return static_cast<double>(integrator.integrate(f, std::numeric_limits<long double>::epsilon()));
  }

 private:
  static ModelSpec full_mask(ModelSpec s) {
    s.unknowns.reset();
    return s;
  }

  ModelSpec spec_;
  std::optional<RatFunc> rational_;
  std::optional<RatFunc> derivative_image_;
  double omega_ = 0.0;
};

/// Max |identity residual| over random points, using the closed-form image.
inline double residual_check(const SignalModel& model, Rng& rng, int points = 10) {
  const ImageOracle oracle(model);
  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < points && attempt < 20 * points; ++attempt) {
    const Rational s = random_point(rng);
    try {
      Rational r = 0;
      for (const auto& t : model.a_terms) {
        Rational sm = 1;
        for (int i = 0; i < t.mu; ++i) sm *= s;
        r += t.coeff.value(model.truth) * sm * oracle.value(s, t.nu);
      }
      for (const auto& t : model.b_terms) {
        Rational sm = 1;
        for (int i = 0; i < t.kappa; ++i) sm *= s;
        r -= t.coeff.value(model.truth) * sm;
      }
      worst = std::max(worst, std::abs(r.get_d()));
      ++done;
    } catch (const pole_error&) {
    }
  }
  if (done < points) throw numerical_failure("residual check: too many poles");
  return worst;
}

}  // namespace algest
