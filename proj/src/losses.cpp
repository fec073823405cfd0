#include "vrm/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vrm/numerics.hpp"

namespace vrm {

SupVariant sup_variant_from_string(const std::string& s) {
    if (s == "kl") return SupVariant::Kl;
    if (s == "mae") return SupVariant::Mae;
    if (s == "rank") return SupVariant::Rank;
    throw std::invalid_argument("unknown supervision variant: " + s + " (use kl|mae|rank)");
}

const char* sup_variant_name(SupVariant v) {
    switch (v) {
        case SupVariant::Kl: return "kl";
        case SupVariant::Mae: return "mae";
        case SupVariant::Rank: return "rank";
    }
    return "?";
}

double bt_preference_prob(double r_pos, double r_neg) {
    return num::stable_sigmoid(r_pos - r_neg);
}

double bt_preference_logprob(double r_pos, double r_neg) {
    return num::log_sigmoid(r_pos - r_neg);
}

NormalizedScores normalize_scores(std::span<const PreferenceExample> examples) {
    NormalizedScores out;
    out.s_tilde.resize(examples.size());

    std::size_t k = 0;
    std::size_t n_scored = 0;
    for (const auto& ex : examples) {
        if (ex.scores_pos) {
            if (k == 0) {
                k = ex.scores_pos->size();
            } else if (ex.scores_pos->size() != k) {
                throw std::invalid_argument("normalize_scores: inconsistent score dimension " +
                                            std::to_string(ex.scores_pos->size()) + " vs " +
                                            std::to_string(k));
            }
            ++n_scored;
        }
    }
    if (n_scored == 0) {
        return out;
    }
    if (n_scored < 2) {
        throw std::invalid_argument("normalize_scores needs at least 2 scored examples, got " +
                                    std::to_string(n_scored));
    }

    out.col_mean.assign(k, 0.0);
    out.col_std.assign(k, 0.0);
    for (const auto& ex : examples) {
        if (!ex.scores_pos) continue;
        for (std::size_t c = 0; c < k; ++c) out.col_mean[c] += (*ex.scores_pos)[c];
    }
    for (double& m : out.col_mean) m /= static_cast<double>(n_scored);
    for (const auto& ex : examples) {
        if (!ex.scores_pos) continue;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = (*ex.scores_pos)[c] - out.col_mean[c];
            out.col_std[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        out.col_std[c] = std::sqrt(out.col_std[c] / static_cast<double>(n_scored));
        if (out.col_std[c] == 0.0) {
            out.degenerate.push_back(c);
        }
    }

    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!examples[i].scores_pos) continue;
        std::vector<double> z(k);
        for (std::size_t c = 0; c < k; ++c) {
            z[c] = out.col_std[c] == 0.0
                       ? 0.0
                       : ((*examples[i].scores_pos)[c] - out.col_mean[c]) / out.col_std[c];
        }
        num::softmax_inplace(z);
        out.s_tilde[i] = std::move(z);
    }
    return out;
}

namespace {

void check_s_tilde(std::span<const double> s, SupVariant variant) {
    double total = 0.0;
    for (double v : s) {
        if (variant == SupVariant::Kl && !(v > 0.0)) {
            throw std::invalid_argument("KL supervision target entries must be positive, got " +
                                        std::to_string(v));
        }
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("supervision target off the simplex, sum = " +
                                    std::to_string(total));
    }
}

}  // namespace

double supervision_loss(const dist::DirichletParams& q, std::span<const double> s_tilde,
                        SupVariant variant) {
    dist::validate(q);
    if (q.alpha.size() != s_tilde.size()) {
        throw std::invalid_argument("supervision dimension mismatch: K = " +
                                    std::to_string(q.alpha.size()) + " vs " +
                                    std::to_string(s_tilde.size()));
    }
    check_s_tilde(s_tilde, variant);

    const std::size_t k = q.alpha.size();
    double s = 0.0;
    for (double a : q.alpha) s += a;
    std::vector<double> wbar(k);
    for (std::size_t i = 0; i < k; ++i) wbar[i] = q.alpha[i] / s;

    switch (variant) {
        case SupVariant::Kl: {
            double kl = 0.0;
            for (std::size_t i = 0; i < k; ++i) kl += wbar[i] * std::log(wbar[i] / s_tilde[i]);
            return kl;
        }
        case SupVariant::Mae: {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += std::fabs(wbar[i] - s_tilde[i]);
            return acc / static_cast<double>(k);
        }
        case SupVariant::Rank: {
            double acc = 0.0;
            std::size_t pairs = 0;
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    if (s_tilde[a] > s_tilde[b]) {
                        acc += std::max(0.0, kRankMargin - (wbar[a] - wbar[b]));
                        ++pairs;
                    }
                }
            }
            return pairs == 0 ? 0.0 : acc / static_cast<double>(pairs);
        }
    }
    return 0.0;
}

Tape::Id supervision_loss_node(Tape& t, Tape::Id alpha, std::span<const double> s_tilde,
                               SupVariant variant) {
    const std::size_t k = t.value(alpha).size();
    if (k != s_tilde.size()) {
        throw std::invalid_argument("supervision dimension mismatch: K = " + std::to_string(k) +
                                    " vs " + std::to_string(s_tilde.size()));
    }
    check_s_tilde(s_tilde, variant);

    auto wbar = t.div(alpha, t.sum(alpha));
    switch (variant) {
        case SupVariant::Kl: {
            auto ratio = t.div(wbar, t.leaf(s_tilde));
            return t.dot(wbar, t.log(ratio));
        }
        case SupVariant::Mae:
            return t.mean(t.abs(t.sub(wbar, t.leaf(s_tilde))));
        case SupVariant::Rank: {
            Tape::Id acc = Tape::npos;
            std::size_t pairs = 0;
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    if (s_tilde[a] > s_tilde[b]) {
                        auto gap = t.sub(t.slice(wbar, a, 1), t.slice(wbar, b, 1));
                        auto hinge = t.clamp_min(t.sub(t.leaf_scalar(kRankMargin), gap), 0.0);
                        auto h = t.sum(hinge);
                        acc = (pairs == 0) ? h : t.add(acc, h);
                        ++pairs;
                    }
                }
            }
            if (pairs == 0) return t.leaf_scalar(0.0);
            return t.scale(acc, 1.0 / static_cast<double>(pairs));
        }
    }
    return t.leaf_scalar(0.0);
}

ExampleElbo elbo_example(Tape& t, const VrmModel& model, const std::vector<Tape::Id>& ids,
                         const PreferenceExample& ex, const NoiseSource& noise,
                         std::span<const double> alpha0) {
    if ((noise.rng == nullptr) == (noise.replay == nullptr)) {
        throw std::invalid_argument("elbo_example: exactly one of rng/replay must be set");
    }
    const std::size_t j = model.config().j;

    auto alpha = model.encode_weights(t, ids, ex.x_feat);
    auto fpos = model.encode_features(t, ids, ex.x_feat, ex.y_pos_feat);
    auto fneg = model.encode_features(t, ids, ex.x_feat, ex.y_neg_feat);

    ExampleElbo out;
    out.alpha = alpha;
    if (noise.rng != nullptr) {
        dist::LatentNoise rec;
        out.w = dist::sample_dirichlet_node(t, alpha, *noise.rng, rec.gamma);
        out.z_pos = dist::sample_gaussian_node(t, fpos.mu, fpos.sigma, *noise.rng, rec.eps_pos);
        out.z_neg = dist::sample_gaussian_node(t, fneg.mu, fneg.sigma, *noise.rng, rec.eps_neg);
        if (noise.record != nullptr) {
            *noise.record = std::move(rec);
        }
    } else {
        const dist::LatentNoise& rec = *noise.replay;
        if (rec.eps_pos.size() != j || rec.eps_neg.size() != j) {
            throw std::invalid_argument("elbo_example: replay noise has wrong J");
        }
        out.w = dist::replay_dirichlet_node(t, alpha, rec.gamma);
        out.z_pos = dist::replay_gaussian_node(t, fpos.mu, fpos.sigma, rec.eps_pos);
        out.z_neg = dist::replay_gaussian_node(t, fneg.mu, fneg.sigma, rec.eps_neg);
        if (noise.record != nullptr) {
            *noise.record = rec;
        }
    }

    auto r_pos = model.decode_reward(t, ids, out.w, out.z_pos);
    auto r_neg = model.decode_reward(t, ids, out.w, out.z_neg);
    out.bt = t.log_sigmoid(t.sub(r_pos, r_neg));
    out.kl_w = dist::dirichlet_kl_node(t, alpha, std::vector<double>(alpha0.begin(), alpha0.end()));
    out.kl_z_pos = dist::gaussian_kl_node(t, fpos.mu, fpos.sigma);
    out.kl_z_neg = dist::gaussian_kl_node(t, fneg.mu, fneg.sigma);
    return out;
}

BatchLoss total_loss(Tape& t, const VrmModel& model, const std::vector<Tape::Id>& ids,
                     std::span<const PreferenceExample> batch,
                     std::span<const std::optional<std::vector<double>>> s_tilde,
                     const BatchNoise& noise, double lambda, SupVariant variant,
                     std::span<const double> alpha0) {
    if (batch.empty()) {
        throw std::invalid_argument("total_loss on an empty batch");
    }
    if (!s_tilde.empty() && s_tilde.size() != batch.size()) {
        throw std::invalid_argument("total_loss: s_tilde not aligned with batch");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("total_loss: lambda must be >= 0");
    }
    if (noise.replay != nullptr && noise.replay->size() != batch.size()) {
        throw std::invalid_argument("total_loss: replay noise not aligned with batch");
    }
    if (noise.record != nullptr) {
        noise.record->assign(batch.size(), {});
    }

    Tape::Id bt = Tape::npos;
    Tape::Id klw = Tape::npos;
    Tape::Id klp = Tape::npos;
    Tape::Id kln = Tape::npos;
    Tape::Id sup = Tape::npos;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        NoiseSource ns;
        ns.rng = noise.rng;
        ns.replay = noise.replay == nullptr ? nullptr : &(*noise.replay)[i];
        ns.record = noise.record == nullptr ? nullptr : &(*noise.record)[i];

        const ExampleElbo e = elbo_example(t, model, ids, batch[i], ns, alpha0);

        bt = (i == 0) ? e.bt : t.add(bt, e.bt);
        klw = (i == 0) ? e.kl_w : t.add(klw, e.kl_w);
        klp = (i == 0) ? e.kl_z_pos : t.add(klp, e.kl_z_pos);
        kln = (i == 0) ? e.kl_z_neg : t.add(kln, e.kl_z_neg);

        if (!s_tilde.empty() && s_tilde[i].has_value()) {
            auto sup_i = supervision_loss_node(t, e.alpha, *s_tilde[i], variant);
            sup = (sup == Tape::npos) ? sup_i : t.add(sup, sup_i);
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    bt = t.scale(bt, inv_b);
    klw = t.scale(klw, inv_b);
    klp = t.scale(klp, inv_b);
    kln = t.scale(kln, inv_b);
    sup = (sup == Tape::npos) ? t.leaf_scalar(0.0) : t.scale(sup, inv_b);

    auto elbo = t.sub(t.sub(t.sub(bt, klw), klp), kln);
    auto total = t.add(t.neg(elbo), t.scale(sup, lambda));

    BatchLoss out;
    out.total = total;
    out.values.bt_loglik = t.scalar_value(bt);
    out.values.kl_w = t.scalar_value(klw);
    out.values.kl_z_pos = t.scalar_value(klp);
    out.values.kl_z_neg = t.scalar_value(kln);
    out.values.sup = t.scalar_value(sup);
    out.values.total = t.scalar_value(total);
    return out;
}

BaselineLoss baseline_bt_loss(Tape& t, const BaselineRm& model, const std::vector<Tape::Id>& ids,
                              std::span<const PreferenceExample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("baseline_bt_loss on an empty batch");
    }
    Tape::Id acc = Tape::npos;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto r_pos = model.reward(t, ids, batch[i].x_feat, batch[i].y_pos_feat);
        auto r_neg = model.reward(t, ids, batch[i].x_feat, batch[i].y_neg_feat);
        auto nll = t.neg(t.log_sigmoid(t.sub(r_pos, r_neg)));
        acc = (i == 0) ? nll : t.add(acc, nll);
    }
    BaselineLoss out;
    out.total = t.scale(acc, 1.0 / static_cast<double>(batch.size()));
    out.value = t.scalar_value(out.total);
    return out;
}

}  // namespace vrm
