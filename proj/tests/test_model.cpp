#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vrm/gradcheck.hpp"
#include "vrm/model.hpp"
#include "vrm/rng.hpp"

using namespace vrm;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.k = 3;
    c.j = 2;
    c.hidden = 6;
    c.head_hidden = 4;
    c.reward_hidden = 4;
    c.d_x = 3;
    c.d_y = 3;
    return c;
}

void zero_entries_with_prefix(ParamStore& ps, const std::string& prefix) {
    for (std::size_t i = 0; i < ps.count(); ++i) {
        if (ps.entry(i).name.rfind(prefix, 0) == 0) {
            std::fill(ps.entry(i).value.data.begin(), ps.entry(i).value.data.end(), 0.0);
        }
    }
}

std::vector<double> rand_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
    return v;
}

}  // namespace

TEST_CASE("encode_weights: zero heads give alpha = ln 2, deterministic") {
    VrmModel m(tiny_config(), 101);
    zero_entries_with_prefix(m.params(), "weight_head.");
    Rng rng(1);
    const auto x = rand_vec(rng, 3);
    const auto a1 = m.encode_weights(x);
    REQUIRE(a1.alpha.size() == 3);
    for (double a : a1.alpha) {
        CHECK(a == doctest::Approx(0.6931471805599453).epsilon(1e-14));
    }
    const auto a2 = m.encode_weights(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a1.alpha[i] == a2.alpha[i]);
}

TEST_CASE("encode_weights output is positive, clamped, finite") {
    VrmModel m(tiny_config(), 102);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto a = m.encode_weights(rand_vec(rng, 3));
        for (double v : a.alpha) {
            CHECK(v >= 1e-3);
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("encode_weights dimension mismatch") {
    VrmModel m(tiny_config(), 103);
    CHECK_THROWS_AS(m.encode_weights(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("gradient of sum(alpha) w.r.t. backbone weights matches finite differences") {
    VrmModel m(tiny_config(), 104);
    Rng rng(3);
    const auto x = rand_vec(rng, 3);
    auto build = [&m, &x](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(m.encode_weights(t, ids, x));
    };
    CHECK(grad_check(m.params(), build, 1e-5).max_rel_err < 1e-5);
}

TEST_CASE("encode_features: zero heads give mu = 0, sigma = 1") {
    VrmModel m(tiny_config(), 105);
    zero_entries_with_prefix(m.params(), "feature_head.");
    Rng rng(4);
    const auto g = m.encode_features(rand_vec(rng, 3), rand_vec(rng, 3));
    REQUIRE(g.mu.size() == 2);
    for (double v : g.mu) CHECK(v == 0.0);
    for (double s : g.sigma) CHECK(s == 1.0);
}

TEST_CASE("encode_features is a per-example function") {
    VrmModel m(tiny_config(), 106);
    Rng rng(5);
    const auto x = rand_vec(rng, 3);
    const auto y = rand_vec(rng, 3);
    const auto before = m.encode_features(x, y);
    // evaluating other unrelated examples must not change this one
    for (int i = 0; i < 5; ++i) (void)m.encode_features(rand_vec(rng, 3), rand_vec(rng, 3));
    const auto after = m.encode_features(x, y);
    for (std::size_t j = 0; j < before.mu.size(); ++j) {
        CHECK(before.mu[j] == after.mu[j]);
        CHECK(before.sigma[j] == after.sigma[j]);
    }
}

TEST_CASE("gradient of sum(mu) + sum(sigma) matches finite differences") {
    VrmModel m(tiny_config(), 107);
    Rng rng(6);
    const auto x = rand_vec(rng, 3);
    const auto y = rand_vec(rng, 3);
    auto build = [&](Tape& t, const std::vector<Tape::Id>& ids) {
        auto f = m.encode_features(t, ids, x, y);
        return t.add(t.sum(f.mu), t.sum(f.sigma));
    };
    CHECK(grad_check(m.params(), build, 1e-5).max_rel_err < 1e-5);
}

TEST_CASE("decode_reward: one-hot weights select a single head") {
    VrmModel m(tiny_config(), 108);
    Rng rng(7);
    const auto z = rand_vec(rng, 2);
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> w(3, 0.0);
        w[k] = 1.0;
        const double r = m.decode_reward(w, z);
        // evaluate head k alone through the tape
        Tape t;
        const auto ids = m.params().bind(t);
        std::vector<double> ek(3, 0.0);
        ek[k] = 1.0;
        const double rk = t.scalar_value(m.decode_reward(t, ids, t.leaf(ek), t.leaf(z)));
        CHECK(r == doctest::Approx(rk).epsilon(1e-15));
    }
}

TEST_CASE("decode_reward: identical heads make the mixture constant in w") {
    VrmModel m(tiny_config(), 109);
    // copy head 0 into heads 1,2
    auto& ps = m.params();
    for (std::size_t k = 1; k < 3; ++k) {
        for (const char* part : {".W1", ".b1", ".W2", ".b2"}) {
            auto src = ps.find("reward_head_0" + std::string(part));
            auto dst = ps.find("reward_head_" + std::to_string(k) + std::string(part));
            REQUIRE(src);
            REQUIRE(dst);
            ps.entry(*dst).value = ps.entry(*src).value;
        }
    }
    Rng rng(8);
    const auto z = rand_vec(rng, 2);
    const double one_hot = m.decode_reward(std::vector<double>{1.0, 0.0, 0.0}, z);
    const double uniform = m.decode_reward(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, z);
    CHECK(uniform == doctest::Approx(one_hot).epsilon(1e-12));
}

TEST_CASE("decode_reward is linear in w") {
    VrmModel m(tiny_config(), 110);
    Rng rng(9);
    const auto z = rand_vec(rng, 2);
    // convex combination of one-hot evaluations equals the mixed evaluation
    std::vector<double> w{0.2, 0.5, 0.3};
    double combo = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> ek(3, 0.0);
        ek[k] = 1.0;
        combo += w[k] * m.decode_reward(ek, z);
    }
    CHECK(m.decode_reward(w, z) == doctest::Approx(combo).epsilon(1e-10));

    // r(a w1 + (1-a) w2, z) = a r(w1,z) + (1-a) r(w2,z)
    std::vector<double> w1{0.7, 0.1, 0.2};
    std::vector<double> w2{0.1, 0.6, 0.3};
    for (double a : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        std::vector<double> wm(3);
        for (std::size_t k = 0; k < 3; ++k) wm[k] = a * w1[k] + (1.0 - a) * w2[k];
        const double lhs = m.decode_reward(wm, z);
        const double rhs = a * m.decode_reward(w1, z) + (1.0 - a) * m.decode_reward(w2, z);
        CHECK(std::fabs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("decode_reward rejects off-simplex weights") {
    VrmModel m(tiny_config(), 111);
    const std::vector<double> z{0.1, -0.2};
    CHECK_THROWS_AS(m.decode_reward(std::vector<double>{0.5, 0.5, 0.5}, z),
                    std::invalid_argument);
    CHECK_THROWS_AS(m.decode_reward(std::vector<double>{1.2, -0.2, 0.0}, z),
                    std::invalid_argument);
    // within tolerance passes
    CHECK_NOTHROW(m.decode_reward(std::vector<double>{0.3 + 4e-7, 0.3, 0.4}, z));
}

TEST_CASE("baseline: zero parameters give zero reward; deterministic; gradients check") {
    ModelConfig c = tiny_config();
    BaselineRm b(c, 112);
    Rng rng(10);
    const auto x = rand_vec(rng, 3);
    const auto y = rand_vec(rng, 3);

    BaselineRm zeroed(c, 113);
    for (std::size_t i = 0; i < zeroed.params().count(); ++i) {
        std::fill(zeroed.params().entry(i).value.data.begin(),
                  zeroed.params().entry(i).value.data.end(), 0.0);
    }
    CHECK(zeroed.reward(x, y) == 0.0);

    CHECK(b.reward(x, y) == b.reward(x, y));

    auto build = [&](Tape& t, const std::vector<Tape::Id>& ids) {
        return b.reward(t, ids, x, y);
    };
    CHECK(grad_check(b.params(), build, 1e-5).max_rel_err < 1e-5);
}

TEST_CASE("same seed gives bitwise-equal model outputs") {
    VrmModel m1(tiny_config(), 777);
    VrmModel m2(tiny_config(), 777);
    Rng rng(11);
    const auto x = rand_vec(rng, 3);
    const auto y = rand_vec(rng, 3);
    const auto a1 = m1.encode_weights(x);
    const auto a2 = m2.encode_weights(x);
    for (std::size_t i = 0; i < a1.alpha.size(); ++i) CHECK(a1.alpha[i] == a2.alpha[i]);
    const auto f1 = m1.encode_features(x, y);
    const auto f2 = m2.encode_features(x, y);
    for (std::size_t i = 0; i < f1.mu.size(); ++i) {
        CHECK(f1.mu[i] == f2.mu[i]);
        CHECK(f1.sigma[i] == f2.sigma[i]);
    }
}

TEST_CASE("checkpoints round-trip models") {
    VrmModel m(tiny_config(), 909);
    const std::string text = m.to_json();
    CHECK(checkpoint_kind(text) == "vrm");
    VrmModel r = VrmModel::from_json(text);
    Rng rng(12);
    const auto x = rand_vec(rng, 3);
    const auto a = m.encode_weights(x);
    const auto b = r.encode_weights(x);
    for (std::size_t i = 0; i < a.alpha.size(); ++i) CHECK(a.alpha[i] == b.alpha[i]);

    BaselineRm base(tiny_config(), 910);
    BaselineRm rb = BaselineRm::from_json(base.to_json());
    const auto y = rand_vec(rng, 3);
    CHECK(base.reward(x, y) == rb.reward(x, y));
    CHECK_THROWS_AS(VrmModel::from_json(base.to_json()), std::invalid_argument);
}

TEST_CASE("hash embedder: deterministic, l2-normalized, whitespace tokens") {
    const auto a = hash_embed("the quick brown fox", 16);
    const auto b = hash_embed("the quick  brown \t fox", 16);  // extra whitespace
    REQUIRE(a.size() == 16);
    double norm = 0.0;
    for (double v : a) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    const auto empty = hash_embed("", 8);
    for (double v : empty) CHECK(v == 0.0);

    const auto c1 = hash_embed("alpha beta", 32);
    const auto c2 = hash_embed("beta alpha", 32);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);  // bag of tokens
}
