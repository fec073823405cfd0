// Mini-batch training for both model kinds with a bias-corrected
// adaptive-moment optimizer, deterministic given (seed, config, data).
// Evaluation scores pairs at posterior means (w = alpha/sum(alpha),
// z = mu), never by sampling; ties count as incorrect.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrm/data.hpp"
#include "vrm/losses.hpp"
#include "vrm/model.hpp"

namespace vrm {

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double lambda = 0.1;
    SupVariant variant = SupVariant::Kl;
    double prior_alpha0 = 1.0;  // the Dir(alpha0 * 1) prior, per component
    std::size_t eval_interval = 50;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 10.0;
    bool record_timing = false;  // off: wall_ms column stays 0 so reruns are byte-identical

    void validate() const;
};

struct MetricRow {
    std::size_t step = 0;
    double train_acc = 0.0;
    double eval_acc = 0.0;
    LossBreakdown loss;
    double sup_kl = 0.0;  // mean KL(wbar || s~) over scored train examples
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<MetricRow> metrics;
    std::string checkpoint;  // final model, checkpoint JSON
};

TrainResult train_vrm(VrmModel& model, const Dataset& ds, const TrainConfig& config);
TrainResult train_baseline(BaselineRm& model, const Dataset& ds, const TrainConfig& config);

double pairwise_accuracy(const VrmModel& model, std::span<const PreferenceExample> split);
double pairwise_accuracy(const BaselineRm& model, std::span<const PreferenceExample> split);

// Mean categorical KL from the ground-truth weights to the posterior-mean
// weights; requires truth on every example.
double weight_recovery(const VrmModel& model, std::span<const PreferenceExample> split);

// Mean KL(wbar || s~) over examples whose normalized targets are present.
double mean_sup_kl(const VrmModel& model, std::span<const PreferenceExample> examples,
                   std::span<const std::optional<std::vector<double>>> s_tilde);

// header: step,train_acc,eval_acc,bt_loglik,kl_w,kl_z_pos,kl_z_neg,sup,total,sup_kl,wall_ms
std::string metrics_csv(std::span<const MetricRow> rows);
std::string metrics_jsonl(std::span<const MetricRow> rows);

}  // namespace vrm
