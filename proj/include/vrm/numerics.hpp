// Scalar special functions and stable primitives backing the closed-form
// expressions used elsewhere (Dirichlet KL, Gamma CDF, preference
// likelihoods). All pure, all double precision, domain violations throw
// std::domain_error.

#pragma once

#include <span>
#include <vector>

namespace vrm::num {

// ln Gamma(x), x > 0. Lanczos approximation, ~1e-14 relative accuracy.
double log_gamma(double x);

// Psi(x) = d/dx ln Gamma(x), x > 0. Recurrence shift + asymptotic series.
double digamma(double x);

// d/dx Psi(x) via central difference of digamma at h = 1e-6.
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
// Series for x < a+1, Lentz continued fraction otherwise.
double reg_incomplete_gamma(double a, double x);

// d/dx P(a, x) = the Gamma(a, 1) density at x.
double gamma_pdf(double a, double x);

// Inverse of P(a, .) at probability p, refined by safeguarded Newton.
// `hint`, when positive, seeds the iteration (used to make replay of a
// recorded draw bit-exact).
double inv_reg_incomplete_gamma(double a, double p, double hint = -1.0);

// sigma(t) = 1/(1 + e^-t), overflow-free for any finite t.
double stable_sigmoid(double t);

// ln sigma(t), finite for any finite t (e.g. log_sigmoid(-745) ~ -745).
double log_sigmoid(double t);

// ln(1 + e^t) without overflow.
double softplus(double t);

// Max-subtracted softmax; entries positive, sum 1. Throws
// std::invalid_argument on an empty input.
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

}  // namespace vrm::num
