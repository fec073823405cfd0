#include "vrm/distributions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vrm/numerics.hpp"

namespace vrm::dist {

void validate(const DirichletParams& p) {
    if (p.alpha.size() < 2) {
        throw std::invalid_argument("Dirichlet needs K >= 2, got K = " +
                                    std::to_string(p.alpha.size()));
    }
    for (double a : p.alpha) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw std::invalid_argument("Dirichlet concentration must be positive, got " +
                                        std::to_string(a));
        }
    }
}

void validate(const GaussianParams& p) {
    if (p.mu.size() != p.sigma.size()) {
        throw std::invalid_argument("Gaussian mu/sigma length mismatch: " +
                                    std::to_string(p.mu.size()) + " vs " +
                                    std::to_string(p.sigma.size()));
    }
    for (double s : p.sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("Gaussian sigma must be positive, got " +
                                        std::to_string(s));
        }
    }
    for (double m : p.mu) {
        if (!std::isfinite(m)) {
            throw std::invalid_argument("Gaussian mu must be finite");
        }
    }
}

double dirichlet_kl(const DirichletParams& q, const DirichletParams& p) {
    validate(q);
    validate(p);
    if (q.alpha.size() != p.alpha.size()) {
        throw std::invalid_argument("dirichlet_kl dimension mismatch: K = " +
                                    std::to_string(q.alpha.size()) + " vs " +
                                    std::to_string(p.alpha.size()));
    }
    double sq = 0.0;
    double sp = 0.0;
    for (std::size_t k = 0; k < q.alpha.size(); ++k) {
        sq += q.alpha[k];
        sp += p.alpha[k];
    }
    double kl = num::log_gamma(sq) - num::log_gamma(sp);
    const double dig_sq = num::digamma(sq);
    for (std::size_t k = 0; k < q.alpha.size(); ++k) {
        kl -= num::log_gamma(q.alpha[k]);
        kl += num::log_gamma(p.alpha[k]);
        kl += (q.alpha[k] - p.alpha[k]) * (num::digamma(q.alpha[k]) - dig_sq);
    }
    return kl;
}

double gaussian_kl(const GaussianParams& q) {
    validate(q);
    double kl = 0.0;
    for (std::size_t j = 0; j < q.mu.size(); ++j) {
        const double m = q.mu[j];
        const double s = q.sigma[j];
        kl += m * m + s * s - 2.0 * std::log(s) - 1.0;
    }
    return 0.5 * kl;
}

Tape::Id dirichlet_kl_node(Tape& t, Tape::Id alpha_q, const std::vector<double>& alpha_p) {
    const std::size_t kq = t.value(alpha_q).size();
    if (kq != alpha_p.size()) {
        throw std::invalid_argument("dirichlet_kl dimension mismatch: K = " + std::to_string(kq) +
                                    " vs " + std::to_string(alpha_p.size()));
    }
    DirichletParams prior{alpha_p};
    validate(prior);

    double sp = 0.0;
    double prior_const = 0.0;
    for (double a : alpha_p) {
        sp += a;
        prior_const += num::log_gamma(a);
    }
    prior_const -= num::log_gamma(sp);

    auto s = t.sum(alpha_q);
    auto kl = t.sub(t.log_gamma(s), t.sum(t.log_gamma(alpha_q)));
    auto diff = t.sub(alpha_q, t.leaf(alpha_p));
    auto dig = t.sub(t.digamma(alpha_q), t.digamma(s));
    kl = t.add(kl, t.dot(diff, dig));
    return t.add_const(kl, prior_const);
}

Tape::Id gaussian_kl_node(Tape& t, Tape::Id mu, Tape::Id sigma) {
    auto terms = t.add(t.mul(mu, mu), t.mul(sigma, sigma));
    terms = t.add(terms, t.scale(t.log(sigma), -2.0));
    return t.scale(t.sum(t.add_const(terms, -1.0)), 0.5);
}

GammaNoise draw_gamma_noise(double alpha, Rng& rng) {
    GammaNoise n;
    n.value = rng.gamma(alpha);
    n.quantile = num::reg_incomplete_gamma(alpha, n.value);
    return n;
}

double gamma_replay(double alpha, const GammaNoise& noise) {
    // same alpha as the draw: residual is exactly zero, value reproduced
    if (num::reg_incomplete_gamma(alpha, noise.value) == noise.quantile) {
        return noise.value;
    }
    double p = noise.quantile;
    const double lo = 1e-300;
    const double hi = 1.0 - 1e-16;
    if (p < lo) p = lo;
    if (p > hi) p = hi;
    return num::inv_reg_incomplete_gamma(alpha, p, noise.value);
}

double gamma_dalpha(double alpha, double g) {
    const double h = 1e-4 * std::max(1.0, alpha);
    const double a_lo = std::max(alpha - h, 1e-12);
    const double dFda =
        (num::reg_incomplete_gamma(alpha + h, g) - num::reg_incomplete_gamma(a_lo, g)) /
        (alpha + h - a_lo);
    const double pdf = num::gamma_pdf(alpha, g);
    if (!(pdf > 1e-300)) {
        return 0.0;
    }
    return -dFda / pdf;
}

Tape::Id sample_gaussian_node(Tape& t, Tape::Id mu, Tape::Id sigma, Rng& rng,
                              std::vector<double>& eps_out) {
    const std::size_t n = t.value(mu).size();
    std::vector<double> eps(n);
    for (double& e : eps) e = rng.normal();
    auto id = t.gaussian_sample(mu, sigma, eps);
    eps_out.insert(eps_out.end(), eps.begin(), eps.end());
    return id;
}

Tape::Id replay_gaussian_node(Tape& t, Tape::Id mu, Tape::Id sigma,
                              const std::vector<double>& eps) {
    return t.gaussian_sample(mu, sigma, eps);
}

Tape::Id replay_dirichlet_node(Tape& t, Tape::Id alpha, const std::vector<GammaNoise>& noise) {
    const std::size_t k = t.value(alpha).size();
    if (noise.size() != k) {
        throw std::invalid_argument("dirichlet replay: noise length " +
                                    std::to_string(noise.size()) + " vs K = " + std::to_string(k));
    }
    std::vector<double> g(k);
    std::vector<double> dgd(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double a = t.value(alpha).data[i];
        g[i] = gamma_replay(a, noise[i]);
        dgd[i] = gamma_dalpha(a, g[i]);
    }
    auto gnode = t.gamma_implicit(alpha, g, dgd);
    return t.div(gnode, t.sum(gnode));
}

Tape::Id sample_dirichlet_node(Tape& t, Tape::Id alpha, Rng& rng,
                               std::vector<GammaNoise>& noise_out) {
    const std::size_t k = t.value(alpha).size();
    std::vector<GammaNoise> noise(k);
    for (std::size_t i = 0; i < k; ++i) {
        noise[i] = draw_gamma_noise(t.value(alpha).data[i], rng);
    }
    auto id = replay_dirichlet_node(t, alpha, noise);
    noise_out.insert(noise_out.end(), noise.begin(), noise.end());
    return id;
}

std::vector<double> sample_dirichlet(const DirichletParams& q, Rng& rng) {
    validate(q);
    std::vector<double> w(q.alpha.size());
    double total = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = rng.gamma(q.alpha[k]);
        total += w[k];
    }
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> sample_gaussian(const GaussianParams& q, Rng& rng) {
    validate(q);
    std::vector<double> z(q.mu.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        z[j] = q.mu[j] + q.sigma[j] * rng.normal();
    }
    return z;
}

}  // namespace vrm::dist
