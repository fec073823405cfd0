#include "vrm/training.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "vrm/rng.hpp"

namespace vrm {

void TrainConfig::validate() const {
    if (epochs == 0) throw std::invalid_argument("train: epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
    if (learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");
    if (lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
    if (!(prior_alpha0 > 0.0)) throw std::invalid_argument("train: prior_alpha0 must be > 0");
    if (eval_interval == 0) throw std::invalid_argument("train: eval_interval must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("train: adam decay constants must lie in [0,1)");
    }
    if (!(clip_norm > 0.0)) throw std::invalid_argument("train: clip_norm must be > 0");
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

class AdamState {
public:
    explicit AdamState(const ParamStore& ps) {
        m_.reserve(ps.count());
        v_.reserve(ps.count());
        for (std::size_t i = 0; i < ps.count(); ++i) {
            m_.emplace_back(ps.entry(i).value.rows, ps.entry(i).value.cols);
            v_.emplace_back(ps.entry(i).value.rows, ps.entry(i).value.cols);
        }
    }

    void step(ParamStore& ps, const std::vector<const Tensor*>& grads, const TrainConfig& cfg) {
        // global-norm clip
        double sq = 0.0;
        for (const Tensor* g : grads) {
            for (double v : g->data) sq += v * v;
        }
        const double norm = std::sqrt(sq);
        const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

        ++t_;
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
        for (std::size_t e = 0; e < grads.size(); ++e) {
            Tensor& value = ps.entry(e).value;
            const Tensor& g = *grads[e];
            for (std::size_t i = 0; i < value.size(); ++i) {
                const double gi = scale * g.data[i];
                m_[e].data[i] = cfg.adam_beta1 * m_[e].data[i] + (1.0 - cfg.adam_beta1) * gi;
                v_[e].data[i] = cfg.adam_beta2 * v_[e].data[i] + (1.0 - cfg.adam_beta2) * gi * gi;
                const double mhat = m_[e].data[i] / c1;
                const double vhat = v_[e].data[i] / c2;
                value.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
        }
    }

private:
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t t_ = 0;
};

// per-thread binding state for chunked scoring on a reusable tape;
// rebinding every 64 examples bounds tape memory
struct BindState {
    std::vector<Tape::Id> ids;
    std::size_t uses = 0;
};

template <typename ScoreFn>
std::size_t count_correct(std::span<const PreferenceExample> split, const ScoreFn& score_pair) {
    const std::size_t n = split.size();
    const std::size_t n_threads = n >= 2000 ? 2 : 1;
    std::vector<std::size_t> correct(n_threads, 0);
    auto work = [&](std::size_t shard) {
        const std::size_t lo = shard * n / n_threads;
        const std::size_t hi = (shard + 1) * n / n_threads;
        Tape tape;
        BindState bs;
        std::size_t acc = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto [rp, rn] = score_pair(tape, bs, split[i]);
            if (rp > rn) ++acc;
        }
        correct[shard] = acc;
    };
    if (n_threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t s = 0; s < n_threads; ++s) threads.emplace_back(work, s);
        for (auto& t : threads) t.join();
    }
    return std::accumulate(correct.begin(), correct.end(), std::size_t{0});
}

std::vector<double> posterior_mean_weights(Tape& tape, const VrmModel& model,
                                           const std::vector<Tape::Id>& ids,
                                           std::span<const double> x) {
    auto alpha = model.encode_weights(tape, ids, x);
    auto wbar = tape.div(alpha, tape.sum(alpha));
    return tape.value(wbar).data;
}

}  // namespace

double pairwise_accuracy(const VrmModel& model, std::span<const PreferenceExample> split) {
    if (split.empty()) {
        throw std::invalid_argument("pairwise_accuracy on an empty split");
    }
    auto score = [&model](Tape& tape, BindState& bs, const PreferenceExample& ex) {
        if (bs.uses == 0) {
            tape.reset();
            bs.ids = model.params().bind(tape);
        }
        bs.uses = (bs.uses + 1) % 64;
        auto alpha = model.encode_weights(tape, bs.ids, ex.x_feat);
        auto wbar = tape.div(alpha, tape.sum(alpha));
        auto fp = model.encode_features(tape, bs.ids, ex.x_feat, ex.y_pos_feat);
        auto fn = model.encode_features(tape, bs.ids, ex.x_feat, ex.y_neg_feat);
        const double rp = tape.scalar_value(model.decode_reward(tape, bs.ids, wbar, fp.mu));
        const double rn = tape.scalar_value(model.decode_reward(tape, bs.ids, wbar, fn.mu));
        return std::pair<double, double>{rp, rn};
    };
    const std::size_t correct = count_correct(split, score);
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

double pairwise_accuracy(const BaselineRm& model, std::span<const PreferenceExample> split) {
    if (split.empty()) {
        throw std::invalid_argument("pairwise_accuracy on an empty split");
    }
    auto score = [&model](Tape& tape, BindState& bs, const PreferenceExample& ex) {
        if (bs.uses == 0) {
            tape.reset();
            bs.ids = model.params().bind(tape);
        }
        bs.uses = (bs.uses + 1) % 64;
        const double rp = tape.scalar_value(model.reward(tape, bs.ids, ex.x_feat, ex.y_pos_feat));
        const double rn = tape.scalar_value(model.reward(tape, bs.ids, ex.x_feat, ex.y_neg_feat));
        return std::pair<double, double>{rp, rn};
    };
    const std::size_t correct = count_correct(split, score);
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

double weight_recovery(const VrmModel& model, std::span<const PreferenceExample> split) {
    if (split.empty()) {
        throw std::invalid_argument("weight_recovery on an empty split");
    }
    Tape tape;
    auto ids = model.params().bind(tape);
    double acc = 0.0;
    std::size_t uses = 0;
    for (const auto& ex : split) {
        if (!ex.truth.has_value()) {
            throw std::invalid_argument("weight_recovery requires ground truth on every example");
        }
        if (uses == 64) {
            tape.reset();
            ids = model.params().bind(tape);
            uses = 0;
        }
        ++uses;
        const auto wbar = posterior_mean_weights(tape, model, ids, ex.x_feat);
        const auto& ws = ex.truth->w_star;
        double kl = 0.0;
        for (std::size_t k = 0; k < ws.size(); ++k) {
            if (ws[k] > 0.0) kl += ws[k] * std::log(ws[k] / wbar[k]);
        }
        acc += kl;
    }
    return acc / static_cast<double>(split.size());
}

double mean_sup_kl(const VrmModel& model, std::span<const PreferenceExample> examples,
                   std::span<const std::optional<std::vector<double>>> s_tilde) {
    Tape tape;
    auto ids = model.params().bind(tape);
    double acc = 0.0;
    std::size_t n = 0;
    std::size_t uses = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (s_tilde.size() <= i || !s_tilde[i].has_value()) continue;
        if (uses == 64) {
            tape.reset();
            ids = model.params().bind(tape);
            uses = 0;
        }
        ++uses;
        const auto wbar = posterior_mean_weights(tape, model, ids, examples[i].x_feat);
        const auto& st = *s_tilde[i];
        double kl = 0.0;
        for (std::size_t k = 0; k < st.size(); ++k) {
            kl += wbar[k] * std::log(wbar[k] / st[k]);
        }
        acc += kl;
        ++n;
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

namespace {

template <typename StepFn, typename MetricFn>
TrainResult run_loop(std::size_t n_train, const TrainConfig& cfg, const StepFn& do_step,
                     const MetricFn& metric_row) {
    TrainResult result;
    Rng shuffle_rng(cfg.seed, /*stream=*/0x50FF);

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    const auto t0 = std::chrono::steady_clock::now();
    std::size_t step = 0;
    const std::size_t steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n_train; i > 1; --i) {
            const std::size_t j = shuffle_rng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t b = 0; b < steps_per_epoch; ++b) {
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t hi = std::min(lo + cfg.batch_size, n_train);
            const LossBreakdown loss = do_step(std::span<const std::size_t>(
                order.data() + lo, hi - lo), step, b);
            ++step;
            if (step % cfg.eval_interval == 0 || step == total_steps) {
                MetricRow row = metric_row(step, loss);
                if (cfg.record_timing) {
                    row.wall_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
                }
                result.metrics.push_back(row);
            }
        }
    }
    return result;
}

void check_finite(const LossBreakdown& loss, std::size_t step, std::size_t batch_index) {
    if (std::isfinite(loss.total)) return;
    std::ostringstream os;
    os << "non-finite loss at step " << step << ", batch " << batch_index
       << " (bt=" << loss.bt_loglik << " kl_w=" << loss.kl_w << " kl_z_pos=" << loss.kl_z_pos
       << " kl_z_neg=" << loss.kl_z_neg << " sup=" << loss.sup << " total=" << loss.total << ")";
    throw std::runtime_error(os.str());
}

}  // namespace

TrainResult train_vrm(VrmModel& model, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (ds.train.empty()) {
        throw std::invalid_argument("train: empty train split");
    }
    // supervision needs dataset-level score statistics; with fewer than
    // two scored examples it is disabled (sup contributes 0)
    std::size_t n_scored = 0;
    for (const auto& ex : ds.train) {
        if (ex.scores_pos) ++n_scored;
    }
    const NormalizedScores norm =
        n_scored >= 2 ? normalize_scores(ds.train) : NormalizedScores{};
    const std::vector<double> alpha0(model.config().k, cfg.prior_alpha0);

    Rng noise_rng(cfg.seed, /*stream=*/0x401);
    AdamState opt(model.params());
    Tape tape;

    auto do_step = [&](std::span<const std::size_t> batch_idx, std::size_t step,
                       std::size_t batch_index) {
        std::vector<PreferenceExample> batch;
        std::vector<std::optional<std::vector<double>>> st;
        batch.reserve(batch_idx.size());
        st.reserve(batch_idx.size());
        for (std::size_t i : batch_idx) {
            batch.push_back(ds.train[i]);
            st.push_back(norm.s_tilde.empty() ? std::nullopt : norm.s_tilde[i]);
        }
        tape.reset();
        const auto ids = model.params().bind(tape);
        BatchNoise bn;
        bn.rng = &noise_rng;
        const BatchLoss loss =
            total_loss(tape, model, ids, batch, st, bn, cfg.lambda, cfg.variant, alpha0);
        check_finite(loss.values, step, batch_index);
        tape.backward(loss.total);
        std::vector<const Tensor*> grads;
        grads.reserve(ids.size());
        for (auto id : ids) grads.push_back(&tape.grad(id));
        opt.step(model.params(), grads, cfg);
        return loss.values;
    };

    auto metric_row = [&](std::size_t step, const LossBreakdown& loss) {
        MetricRow row;
        row.step = step;
        row.loss = loss;
        row.train_acc = pairwise_accuracy(model, ds.train);
        row.eval_acc = ds.eval.empty() ? 0.0 : pairwise_accuracy(model, ds.eval);
        row.sup_kl = mean_sup_kl(model, ds.train, norm.s_tilde);
        return row;
    };

    TrainResult result = run_loop(ds.train.size(), cfg, do_step, metric_row);
    result.checkpoint = model.to_json();
    return result;
}

TrainResult train_baseline(BaselineRm& model, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (ds.train.empty()) {
        throw std::invalid_argument("train: empty train split");
    }
    AdamState opt(model.params());
    Tape tape;

    auto do_step = [&](std::span<const std::size_t> batch_idx, std::size_t step,
                       std::size_t batch_index) {
        std::vector<PreferenceExample> batch;
        batch.reserve(batch_idx.size());
        for (std::size_t i : batch_idx) batch.push_back(ds.train[i]);
        tape.reset();
        const auto ids = model.params().bind(tape);
        const BaselineLoss loss = baseline_bt_loss(tape, model, ids, batch);
        LossBreakdown breakdown;
        breakdown.bt_loglik = -loss.value;
        breakdown.total = loss.value;
        check_finite(breakdown, step, batch_index);
        tape.backward(loss.total);
        std::vector<const Tensor*> grads;
        grads.reserve(ids.size());
        for (auto id : ids) grads.push_back(&tape.grad(id));
        opt.step(model.params(), grads, cfg);
        return breakdown;
    };

    auto metric_row = [&](std::size_t step, const LossBreakdown& loss) {
        MetricRow row;
        row.step = step;
        row.loss = loss;
        row.train_acc = pairwise_accuracy(model, ds.train);
        row.eval_acc = ds.eval.empty() ? 0.0 : pairwise_accuracy(model, ds.eval);
        row.sup_kl = 0.0;
        return row;
    };

    TrainResult result = run_loop(ds.train.size(), cfg, do_step, metric_row);
    result.checkpoint = model.to_json();
    return result;
}

std::string metrics_csv(std::span<const MetricRow> rows) {
    std::string out =
        "step,train_acc,eval_acc,bt_loglik,kl_w,kl_z_pos,kl_z_neg,sup,total,sup_kl,wall_ms\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step);
        for (double v : {r.train_acc, r.eval_acc, r.loss.bt_loglik, r.loss.kl_w, r.loss.kl_z_pos,
                         r.loss.kl_z_neg, r.loss.sup, r.loss.total, r.sup_kl, r.wall_ms}) {
            out += ',';
            out += fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

std::string metrics_jsonl(std::span<const MetricRow> rows) {
    std::string out;
    for (const auto& r : rows) {
        nlohmann::json j{{"step", r.step},
                         {"train_acc", r.train_acc},
                         {"eval_acc", r.eval_acc},
                         {"bt_loglik", r.loss.bt_loglik},
                         {"kl_w", r.loss.kl_w},
                         {"kl_z_pos", r.loss.kl_z_pos},
                         {"kl_z_neg", r.loss.kl_z_neg},
                         {"sup", r.loss.sup},
                         {"total", r.loss.total},
                         {"sup_kl", r.sup_kl},
                         {"wall_ms", r.wall_ms}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace vrm
