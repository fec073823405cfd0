#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "vrm/synthdata.hpp"
#include "vrm/training.hpp"

using namespace vrm;

namespace {

ModelConfig small_model(const DatasetSchema& schema, std::size_t k) {
    ModelConfig c;
    c.k = k;
    c.j = 4;
    c.hidden = 16;
    c.head_hidden = 8;
    c.reward_hidden = 8;
    c.d_x = schema.d_x;
    c.d_y = schema.d_y;
    return c;
}

synth::GeneratorConfig small_data(std::uint64_t seed, std::size_t n, double tau) {
    synth::GeneratorConfig g;
    g.seed = seed;
    g.n = n;
    g.d_x = 6;
    g.d_y = 6;
    g.k = 3;
    g.tau = tau;
    return g;
}

TrainConfig fast_train(std::uint64_t seed) {
    TrainConfig t;
    t.seed = seed;
    t.epochs = 6;
    t.batch_size = 32;
    t.learning_rate = 3e-3;
    t.lambda = 0.1;
    t.eval_interval = 25;
    return t;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters and accuracy unchanged") {
    const auto ds = synth::generate(small_data(41, 200, 0.5));
    VrmModel m(small_model(ds.schema, 3), 41);
    const auto before = m.params().flat();
    const double acc0 = pairwise_accuracy(m, ds.train);

    TrainConfig cfg = fast_train(41);
    cfg.learning_rate = 0.0;
    cfg.epochs = 2;
    const auto result = train_vrm(m, ds, cfg);
    const auto after = m.params().flat();
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
    for (const auto& row : result.metrics) {
        CHECK(row.train_acc == acc0);
    }
}

TEST_CASE("a singleton dataset is overfit to perfect accuracy") {
    auto ds = synth::generate(small_data(43, 40, 0.5));
    Dataset single;
    single.schema = ds.schema;
    single.train.push_back(ds.train.front());
    single.eval.push_back(ds.train.front());

    {
        VrmModel m(small_model(ds.schema, 3), 43);
        TrainConfig cfg = fast_train(43);
        cfg.epochs = 200;
        cfg.batch_size = 1;
        cfg.eval_interval = 50;
        cfg.lambda = 0.0;
        const auto result = train_vrm(m, single, cfg);
        CHECK(result.metrics.back().train_acc == 1.0);
    }
    {
        BaselineRm b(small_model(ds.schema, 3), 44);
        TrainConfig cfg = fast_train(44);
        cfg.epochs = 200;
        cfg.batch_size = 1;
        cfg.eval_interval = 50;
        const auto result = train_baseline(b, single, cfg);
        CHECK(result.metrics.back().train_acc == 1.0);
    }
}

TEST_CASE("training is bitwise deterministic given the seed") {
    const auto ds = synth::generate(small_data(47, 300, 0.5));
    TrainConfig cfg = fast_train(47);
    cfg.epochs = 3;

    VrmModel m1(small_model(ds.schema, 3), 47);
    VrmModel m2(small_model(ds.schema, 3), 47);
    const auto r1 = train_vrm(m1, ds, cfg);
    const auto r2 = train_vrm(m2, ds, cfg);
    CHECK(metrics_csv(r1.metrics) == metrics_csv(r2.metrics));
    CHECK(r1.checkpoint == r2.checkpoint);

    BaselineRm b1(small_model(ds.schema, 3), 48);
    BaselineRm b2(small_model(ds.schema, 3), 48);
    const auto rb1 = train_baseline(b1, ds, cfg);
    const auto rb2 = train_baseline(b2, ds, cfg);
    CHECK(metrics_csv(rb1.metrics) == metrics_csv(rb2.metrics));
    CHECK(rb1.checkpoint == rb2.checkpoint);

    // a different seed must actually change the run
    VrmModel m3(small_model(ds.schema, 3), 49);
    TrainConfig cfg3 = cfg;
    cfg3.seed = 49;
    const auto r3 = train_vrm(m3, ds, cfg3);
    CHECK(metrics_csv(r1.metrics) != metrics_csv(r3.metrics));
}

TEST_CASE("loss breakdown identity holds at every logged step") {
    const auto ds = synth::generate(small_data(53, 300, 0.5));
    VrmModel m(small_model(ds.schema, 3), 53);
    TrainConfig cfg = fast_train(53);
    cfg.epochs = 3;
    cfg.lambda = 0.37;
    const auto result = train_vrm(m, ds, cfg);
    REQUIRE(!result.metrics.empty());
    for (const auto& row : result.metrics) {
        const double recomposed = -(row.loss.bt_loglik - row.loss.kl_w - row.loss.kl_z_pos -
                                    row.loss.kl_z_neg) +
                                  cfg.lambda * row.loss.sup;
        CHECK(std::fabs(row.loss.total - recomposed) < 1e-10);
        CHECK(row.train_acc >= 0.0);
        CHECK(row.train_acc <= 1.0);
    }
    // steps strictly increase
    for (std::size_t i = 1; i < result.metrics.size(); ++i) {
        CHECK(result.metrics[i].step > result.metrics[i - 1].step);
    }
}

TEST_CASE("pairwise accuracy conventions") {
    const auto ds = synth::generate(small_data(59, 2000, 1.0));

    // untrained random baseline on balanced data is near chance
    BaselineRm b(small_model(ds.schema, 3), 59);
    const double acc = pairwise_accuracy(b, ds.train);
    const double se = std::sqrt(0.25 / static_cast<double>(ds.train.size()));
    CHECK(std::fabs(acc - 0.5) < 3.0 * se + 0.02);

    // all-equal scorer gets zero (ties count as incorrect)
    BaselineRm zero(small_model(ds.schema, 3), 60);
    for (std::size_t i = 0; i < zero.params().count(); ++i) {
        std::fill(zero.params().entry(i).value.data.begin(),
                  zero.params().entry(i).value.data.end(), 0.0);
    }
    CHECK(pairwise_accuracy(zero, ds.train) == 0.0);

    // the ground-truth scorer at tau -> 0 is perfect: labels equal the
    // true-reward sign exactly
    const auto noiseless = synth::generate(small_data(61, 500, 1e-6));
    std::size_t correct = 0;
    for (const auto& ex : noiseless.train) {
        if (ex.truth->reward_gap > 0.0) ++correct;
    }
    CHECK(correct == noiseless.train.size());

    CHECK_THROWS_AS(pairwise_accuracy(b, std::span<const PreferenceExample>{}),
                    std::invalid_argument);
}

TEST_CASE("weight recovery: perfect match, permutation sensitivity, lambda direction") {
    const auto ds = synth::generate(small_data(67, 800, 0.25));

    // supervision pulls wbar toward the (noisy observation of) w*; higher
    // lambda should recover the weights better
    TrainConfig cfg = fast_train(67);
    cfg.epochs = 16;

    VrmModel low(small_model(ds.schema, 3), 67);
    TrainConfig low_cfg = cfg;
    low_cfg.lambda = 0.0;
    (void)train_vrm(low, ds, low_cfg);
    const double rec_low = weight_recovery(low, ds.eval);

    VrmModel high(small_model(ds.schema, 3), 67);
    TrainConfig high_cfg = cfg;
    high_cfg.lambda = 2.0;
    (void)train_vrm(high, ds, high_cfg);
    const double rec_high = weight_recovery(high, ds.eval);

    CHECK(rec_low > 0.0);
    CHECK(rec_high > 0.0);
    CHECK(rec_high < rec_low);

    // permuting the trained weight head's output dimensions must hurt
    VrmModel permuted = VrmModel::from_json(high.to_json());
    auto& ps = permuted.params();
    const auto w2 = ps.find("weight_head.W2");
    const auto b2 = ps.find("weight_head.b2");
    REQUIRE(w2);
    REQUIRE(b2);
    Tensor& wt = ps.entry(*w2).value;
    Tensor& bt = ps.entry(*b2).value;
    // rotate rows 0 <- 1 <- 2 <- 0
    Tensor wt_new = wt;
    Tensor bt_new = bt;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < wt.cols; ++c) wt_new(k, c) = wt((k + 1) % 3, c);
        bt_new[k] = bt[(k + 1) % 3];
    }
    wt = wt_new;
    bt = bt_new;
    const double rec_perm = weight_recovery(permuted, ds.eval);
    CHECK(rec_perm > rec_high);

    // missing truth is an error
    Dataset no_truth = ds;
    for (auto& ex : no_truth.eval) ex.truth.reset();
    CHECK_THROWS_AS(weight_recovery(high, no_truth.eval), std::invalid_argument);
}

TEST_CASE("metrics CSV has the pinned header and deterministic formatting") {
    MetricRow row;
    row.step = 25;
    row.train_acc = 0.75;
    row.eval_acc = 0.5;
    row.loss.bt_loglik = -0.6931471805599453;
    row.loss.total = 0.6931471805599453;
    row.sup_kl = 0.125;
    const std::string csv = metrics_csv(std::vector<MetricRow>{row});
    CHECK(csv.find("step,train_acc,eval_acc,bt_loglik,kl_w,kl_z_pos,kl_z_neg,sup,total,sup_kl,"
                   "wall_ms\n") == 0);
    CHECK(csv.find("25,0.75,0.5,-0.6931471805599453,0,0,0,0,0.6931471805599453,0.125,0") !=
          std::string::npos);
    const std::string jsonl = metrics_jsonl(std::vector<MetricRow>{row});
    CHECK(jsonl.find("\"step\":25") != std::string::npos);
}

TEST_CASE("training rejects invalid configs and empty splits") {
    const auto ds = synth::generate(small_data(71, 50, 1.0));
    VrmModel m(small_model(ds.schema, 3), 71);
    TrainConfig bad = fast_train(71);
    bad.epochs = 0;
    CHECK_THROWS_AS(train_vrm(m, ds, bad), std::invalid_argument);
    TrainConfig neg = fast_train(71);
    neg.lambda = -1.0;
    CHECK_THROWS_AS(train_vrm(m, ds, neg), std::invalid_argument);
    Dataset empty;
    empty.schema = ds.schema;
    CHECK_THROWS_AS(train_vrm(m, empty, fast_train(71)), std::invalid_argument);
}
