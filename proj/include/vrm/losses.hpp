// Training objectives: the latent Bradley-Terry preference likelihood,
// the preference ELBO with its three KL terms (one latent draw per
// example, the w draw shared by both responses), the objective-weight
// supervision loss in its KL / MAE / RANK variants, the combined total,
// and the baseline Bradley-Terry loss.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vrm/data.hpp"
#include "vrm/distributions.hpp"
#include "vrm/model.hpp"
#include "vrm/rng.hpp"
#include "vrm/tape.hpp"

namespace vrm {

struct LossBreakdown {
    double bt_loglik = 0.0;
    double kl_w = 0.0;
    double kl_z_pos = 0.0;
    double kl_z_neg = 0.0;
    double sup = 0.0;
    double total = 0.0;
};

enum class SupVariant { Kl, Mae, Rank };
constexpr double kRankMargin = 0.05;

SupVariant sup_variant_from_string(const std::string& s);
const char* sup_variant_name(SupVariant v);

double bt_preference_prob(double r_pos, double r_neg);
double bt_preference_logprob(double r_pos, double r_neg);

// --- score normalization (dataset-level, preferred responses) -------------

struct NormalizedScores {
    // aligned with the input examples; empty optional where scores are absent
    std::vector<std::optional<std::vector<double>>> s_tilde;
    std::vector<double> col_mean;
    std::vector<double> col_std;           // population std
    std::vector<std::size_t> degenerate;   // zero-variance columns (z set to 0)
};

NormalizedScores normalize_scores(std::span<const PreferenceExample> examples);

// --- supervision -----------------------------------------------------------

double supervision_loss(const dist::DirichletParams& q, std::span<const double> s_tilde,
                        SupVariant variant);
Tape::Id supervision_loss_node(Tape& t, Tape::Id alpha, std::span<const double> s_tilde,
                               SupVariant variant);

// --- ELBO ------------------------------------------------------------------

// Noise handling for one example: exactly one of rng/replay set; record,
// when non-null, captures the draw.
struct NoiseSource {
    Rng* rng = nullptr;
    const dist::LatentNoise* replay = nullptr;
    dist::LatentNoise* record = nullptr;
};

struct ExampleElbo {
    Tape::Id bt;        // log sigma(r+ - r-)
    Tape::Id kl_w;
    Tape::Id kl_z_pos;
    Tape::Id kl_z_neg;
    Tape::Id alpha;     // encoder output, reused by the supervision term
    Tape::Id w;
    Tape::Id z_pos;
    Tape::Id z_neg;
};

ExampleElbo elbo_example(Tape& t, const VrmModel& model, const std::vector<Tape::Id>& ids,
                         const PreferenceExample& ex, const NoiseSource& noise,
                         std::span<const double> alpha0);

// --- batch losses ------------------------------------------------------------

struct BatchLoss {
    Tape::Id total = Tape::npos;  // scalar node to backpropagate
    LossBreakdown values;         // batch means
};

struct BatchNoise {
    Rng* rng = nullptr;
    const std::vector<dist::LatentNoise>* replay = nullptr;  // one per example
    std::vector<dist::LatentNoise>* record = nullptr;
};

// s_tilde must be aligned with `batch` (entry i supervises example i);
// pass an empty span to disable supervision entirely.
BatchLoss total_loss(Tape& t, const VrmModel& model, const std::vector<Tape::Id>& ids,
                     std::span<const PreferenceExample> batch,
                     std::span<const std::optional<std::vector<double>>> s_tilde,
                     const BatchNoise& noise, double lambda, SupVariant variant,
                     std::span<const double> alpha0);

struct BaselineLoss {
    Tape::Id total = Tape::npos;
    double value = 0.0;
};

BaselineLoss baseline_bt_loss(Tape& t, const BaselineRm& model, const std::vector<Tape::Id>& ids,
                              std::span<const PreferenceExample> batch);

}  // namespace vrm
