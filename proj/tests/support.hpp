#pragma once

// Seeded generators for property tests.

#include <random>

#include "algest/diffop.hpp"
#include "algest/exactalg.hpp"

namespace algest::testing {

inline Rational random_rational(std::mt19937_64& rng, long range = 9) {
  std::uniform_int_distribution<long> num(-range, range);
  std::uniform_int_distribution<long> den(1, range);
  return make_rational(num(rng), den(rng));
}

inline Poly random_poly(std::mt19937_64& rng, int max_degree = 3) {
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::vector<Rational> c(static_cast<std::size_t>(deg(rng)) + 1);
  for (auto& x : c) x = random_rational(rng);
  return Poly(std::move(c));
}

inline Poly random_nonzero_poly(std::mt19937_64& rng, int max_degree = 3) {
  Poly p;
  while (p.is_zero()) p = random_poly(rng, max_degree);
  return p;
}

inline RatFunc random_ratfunc(std::mt19937_64& rng, int max_degree = 3) {
  return RatFunc(random_poly(rng, max_degree), random_nonzero_poly(rng, max_degree));
}

inline RatFunc random_nonzero_ratfunc(std::mt19937_64& rng, int max_degree = 3) {
  return RatFunc(random_nonzero_poly(rng, max_degree), random_nonzero_poly(rng, max_degree));
}

inline DiffOp random_op(std::mt19937_64& rng, int max_order = 2, int max_degree = 2) {
  std::uniform_int_distribution<int> ord(0, max_order);
  std::map<int, RatFunc> terms;
  const int top = ord(rng);
  for (int a = 0; a <= top; ++a) terms[a] = random_ratfunc(rng, max_degree);
  return DiffOp(std::move(terms));
}

inline SExpr random_sexpr(std::mt19937_64& rng, int max_nu = 2) {
  std::uniform_int_distribution<int> ord(0, max_nu);
  std::map<int, RatFunc> sig;
  const int top = ord(rng);
  for (int nu = 0; nu <= top; ++nu) sig[nu] = random_ratfunc(rng, 2);
  return SExpr(std::move(sig), random_ratfunc(rng, 2));
}

}  // namespace algest::testing
