// Variational families: Dirichlet over objective weights and diagonal
// Gaussian over semantic features. Closed-form KL divergences, and
// reparameterized sampling whose gradients flow through the tape --
// pathwise for the Gaussian, implicit (via the Gamma CDF) for the
// Dirichlet.

#pragma once

#include <vector>

#include "vrm/rng.hpp"
#include "vrm/tape.hpp"

namespace vrm::dist {

struct DirichletParams {
    std::vector<double> alpha;  // K >= 2, all positive
};

struct GaussianParams {
    std::vector<double> mu;
    std::vector<double> sigma;  // standard deviations, all positive
};

void validate(const DirichletParams& p);
void validate(const GaussianParams& p);

// One accepted Gamma(alpha, 1) draw plus its CDF quantile. Replaying the
// record at the draw's alpha reproduces the value bitwise; replaying at a
// perturbed alpha moves the draw along the fixed-quantile (implicit
// reparameterization) path, which is what frozen-noise finite differences
// must see.
struct GammaNoise {
    double value = 0.0;
    double quantile = 0.0;
};

struct LatentNoise {
    std::vector<GammaNoise> gamma;  // K entries for the shared w draw
    std::vector<double> eps_pos;    // J entries
    std::vector<double> eps_neg;    // J entries
};

// KL[Dir(q) || Dir(p)], closed form.
double dirichlet_kl(const DirichletParams& q, const DirichletParams& p);

// KL[N(mu, diag(sigma^2)) || N(0, I)], closed form.
double gaussian_kl(const GaussianParams& q);

// Tape versions, differentiable w.r.t. the parameter nodes. The Dirichlet
// prior is a constant.
Tape::Id dirichlet_kl_node(Tape& t, Tape::Id alpha_q, const std::vector<double>& alpha_p);
Tape::Id gaussian_kl_node(Tape& t, Tape::Id mu, Tape::Id sigma);

// --- sampling ------------------------------------------------------------

GammaNoise draw_gamma_noise(double alpha, Rng& rng);
// Move a recorded draw to the given alpha along its quantile.
double gamma_replay(double alpha, const GammaNoise& noise);
// Implicit gradient d g / d alpha = -(dF/dalpha) / (dF/dg) at the draw;
// dF/dalpha by central difference of the regularized CDF at
// h = 1e-4 * max(1, alpha), dF/dg the Gamma density.
double gamma_dalpha(double alpha, double g);

// z = mu + sigma (*) eps, eps ~ N(0, I); returns the node and appends the
// noise to `eps_out`.
Tape::Id sample_gaussian_node(Tape& t, Tape::Id mu, Tape::Id sigma, Rng& rng,
                              std::vector<double>& eps_out);
Tape::Id replay_gaussian_node(Tape& t, Tape::Id mu, Tape::Id sigma,
                              const std::vector<double>& eps);

// w = g / sum(g) with g_k ~ Gamma(alpha_k, 1); returns the simplex node
// and appends the per-component noise records.
Tape::Id sample_dirichlet_node(Tape& t, Tape::Id alpha, Rng& rng,
                               std::vector<GammaNoise>& noise_out);
Tape::Id replay_dirichlet_node(Tape& t, Tape::Id alpha, const std::vector<GammaNoise>& noise);

// Plain (non-tape) draws for evaluation and Monte Carlo estimators.
std::vector<double> sample_dirichlet(const DirichletParams& q, Rng& rng);
std::vector<double> sample_gaussian(const GaussianParams& q, Rng& rng);

}  // namespace vrm::dist
