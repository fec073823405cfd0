#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vrm/gradcheck.hpp"
#include "vrm/params.hpp"
#include "vrm/rng.hpp"
#include "vrm/tape.hpp"

using namespace vrm;

namespace {

double fd_rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(1e-8, std::fabs(a) + std::fabs(b));
}

}  // namespace

TEST_CASE("softplus value and gradient at 0") {
    Tape t;
    auto x = t.leaf_scalar(0.0);
    auto y = t.softplus(x);
    CHECK(t.scalar_value(y) == doctest::Approx(0.6931471805599453).epsilon(1e-14));
    t.backward(y);
    CHECK(t.grad(x).data[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("dot value and gradients") {
    Tape t;
    auto a = t.leaf(std::vector<double>{1.0, 2.0});
    auto b = t.leaf(std::vector<double>{3.0, 4.0});
    auto y = t.dot(a, b);
    CHECK(t.scalar_value(y) == 11.0);
    t.backward(y);
    CHECK(t.grad(a).data[0] == 3.0);
    CHECK(t.grad(a).data[1] == 4.0);
    CHECK(t.grad(b).data[0] == 1.0);
    CHECK(t.grad(b).data[1] == 2.0);
}

TEST_CASE("polynomial and fan-out accumulation") {
    {
        Tape t;
        auto x = t.leaf_scalar(3.0);
        auto y = t.mul(x, x);
        t.backward(y);
        CHECK(t.grad(x).data[0] == doctest::Approx(6.0));
    }
    {
        Tape t;
        auto a = t.leaf_scalar(1.0);
        auto y = t.add(a, a);
        t.backward(y);
        CHECK(t.grad(a).data[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("two backward passes double accumulated gradients") {
    Tape t;
    auto x = t.leaf(std::vector<double>{0.4, -0.2, 1.1});
    auto y = t.sum(t.tanh(x));
    t.backward(y);
    const std::vector<double> once = t.grad(x).data;
    t.backward(y);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(t.grad(x).data[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-15));
    }
}

TEST_CASE("constant subgraph has exactly zero gradient") {
    Tape t;
    auto unrelated = t.leaf(std::vector<double>{1.0, 2.0});
    auto x = t.leaf_scalar(2.0);
    auto y = t.mul(x, x);
    (void)t.tanh(unrelated);  // never feeds y
    t.backward(y);
    CHECK(t.grad(unrelated).data[0] == 0.0);
    CHECK(t.grad(unrelated).data[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar roots") {
    Tape t;
    auto x = t.leaf(std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("shape mismatch errors name both shapes") {
    Tape t;
    auto a = t.leaf(std::vector<double>{1.0, 2.0, 3.0});
    auto b = t.leaf(std::vector<double>{1.0, 2.0});
    try {
        (void)t.add(a, b);
        FAIL("expected a shape error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(3x1)") != std::string::npos);
        CHECK(msg.find("(2x1)") != std::string::npos);
    }
}

TEST_CASE("gradient of sum(tanh(W v)) matches finite differences") {
    ParamStore ps(7);
    ps.add_weight("W", 4, 3);
    const std::vector<double> v{0.3, -1.0, 0.8};
    auto loss = [&v](Tape& t, const std::vector<Tape::Id>& ids) {
        auto vin = t.leaf(v);
        return t.sum(t.tanh(t.matvec(ids[0], vin)));
    };
    auto report = grad_check(ps, loss, 1e-5);
    CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("every primitive matches central finite differences at seeded points") {
    // scalar-valued compositions exercising each op's backward rule,
    // checked at 10 seeded random points each
    struct Case {
        const char* name;
        LossBuilder build;
        std::size_t param_len;
    };
    const std::vector<double> aux{0.7, -0.4, 0.9, 0.2};
    const std::vector<double> eps{0.31, -1.2, 0.55, 0.04};

    std::vector<Case> cases;
    cases.push_back({"add", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.add(ids[0], t.leaf(aux)));
    }, 4});
    cases.push_back({"add_scalar_broadcast", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.add(t.leaf(aux), t.mean(ids[0])));
    }, 4});
    cases.push_back({"sub", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.sub(t.leaf(aux), ids[0]));
    }, 4});
    cases.push_back({"mul", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.mul(ids[0], t.leaf(aux)));
    }, 4});
    cases.push_back({"mul_scalar_broadcast", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.mul(t.leaf(aux), t.mean(ids[0])));
    }, 4});
    cases.push_back({"div", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        auto denom = t.add_const(t.mul(ids[0], ids[0]), 1.0);  // keeps sign away from 0
        return t.sum(t.div(t.leaf(aux), denom));
    }, 4});
    cases.push_back({"div_by_scalar", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        auto denom = t.add_const(t.mul(t.mean(ids[0]), t.mean(ids[0])), 1.0);
        return t.sum(t.div(t.leaf(aux), denom));
    }, 4});
    cases.push_back({"tanh", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.tanh(ids[0]));
    }, 4});
    cases.push_back({"softplus", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.softplus(ids[0]));
    }, 4});
    cases.push_back({"exp", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.exp(ids[0]));
    }, 4});
    cases.push_back({"log", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.log(t.add_const(t.mul(ids[0], ids[0]), 0.5)));
    }, 4});
    cases.push_back({"neg", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.neg(ids[0]));
    }, 4});
    cases.push_back({"sigmoid", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.sigmoid(ids[0]));
    }, 4});
    cases.push_back({"log_sigmoid", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.log_sigmoid(ids[0]));
    }, 4});
    cases.push_back({"mean", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.mean(t.mul(ids[0], ids[0]));
    }, 4});
    cases.push_back({"dot", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.dot(ids[0], t.mul(ids[0], t.leaf(aux)));
    }, 4});
    cases.push_back({"concat_slice", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        auto c = t.concat(ids[0], t.leaf(aux));
        return t.sum(t.tanh(t.slice(c, 2, 4)));
    }, 4});
    cases.push_back({"softmax", [aux](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.dot(t.softmax(ids[0]), t.leaf(aux));
    }, 4});
    cases.push_back({"log_gamma", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.log_gamma(t.add_const(t.mul(ids[0], ids[0]), 0.3)));
    }, 4});
    cases.push_back({"digamma", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.digamma(t.add_const(t.mul(ids[0], ids[0]), 0.3)));
    }, 4});
    cases.push_back({"scale_add_const", [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.add_const(t.scale(ids[0], -2.5), 0.7));
    }, 4});
    cases.push_back({"clamp_min", [](Tape& t, const std::vector<Tape::Id>& ids) {
        // points stay away from the clamp threshold so FD is valid
        return t.sum(t.clamp_min(ids[0], -50.0));
    }, 4});
    cases.push_back({"gaussian_sample", [eps](Tape& t, const std::vector<Tape::Id>& ids) {
        auto mu = t.slice(ids[0], 0, 2);
        auto sigma = t.exp(t.slice(ids[0], 2, 2));
        auto z = t.gaussian_sample(mu, sigma, std::span<const double>(eps.data(), 2));
        return t.sum(t.tanh(z));
    }, 4});
    for (const auto& c : cases) {
        CAPTURE(c.name);
        for (int pt = 0; pt < 10; ++pt) {
            ParamStore ps(1000 + pt);
            ps.add_weight("x", c.param_len, 1);
            auto report = grad_check(ps, c.build, 1e-5);
            CAPTURE(pt);
            CHECK(report.max_rel_err < 1e-5);
        }
    }

    // matvec as a proper matrix parameter
    for (int pt = 0; pt < 10; ++pt) {
        ParamStore ps(2000 + pt);
        ps.add_weight("W", 3, 4);
        ps.add_weight("x", 4, 1);
        auto build = [](Tape& t, const std::vector<Tape::Id>& ids) {
            return t.sum(t.tanh(t.matvec(ids[0], ids[1])));
        };
        auto report = grad_check(ps, build, 1e-5);
        CHECK(report.max_rel_err < 1e-5);
    }
}

TEST_CASE("grad_check tiers: linear exact, tanh layer tight") {
    {
        ParamStore ps(5);
        ps.add_weight("w", 6, 1);
        const std::vector<double> c{0.5, -1.0, 2.0, 0.25, -0.75, 1.5};
        auto linear = [&c](Tape& t, const std::vector<Tape::Id>& ids) {
            return t.dot(ids[0], t.leaf(c));
        };
        auto report = grad_check(ps, linear, 1e-5);
        CHECK(report.max_rel_err < 1e-9);
    }
    {
        ParamStore ps(6);
        ps.add_weight("W", 5, 3);
        ps.add_zeros("b", 5, 1);
        const std::vector<double> v{0.2, -0.9, 0.5};
        auto layer = [&v](Tape& t, const std::vector<Tape::Id>& ids) {
            return t.sum(t.tanh(t.affine(ids[0], t.leaf(v), ids[1])));
        };
        auto report = grad_check(ps, layer, 1e-5);
        CHECK(report.max_rel_err < 1e-6);
    }
}

TEST_CASE("derivative fault injection is detected and named") {
    ParamStore ps(9);
    ps.add_weight("x", 4, 1);
    auto build = [](Tape& t, const std::vector<Tape::Id>& ids) {
        return t.sum(t.tanh(ids[0]));
    };
    CHECK(grad_check(ps, build, 1e-5).max_rel_err < 1e-6);
    set_derivative_fault(Op::Tanh);
    auto bad = grad_check(ps, build, 1e-5);
    clear_derivative_fault();
    CHECK(bad.max_rel_err > 1e-2);
    CHECK(std::string(op_name(Op::Tanh)) == "tanh");
    CHECK(grad_check(ps, build, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("param stores with equal seeds are element-wise identical") {
    ParamStore a(42);
    a.add_weight("W", 8, 3);
    a.add_zeros("b", 8, 1);
    ParamStore b(42);
    b.add_weight("W", 8, 3);
    b.add_zeros("b", 8, 1);
    for (std::size_t e = 0; e < a.count(); ++e) {
        REQUIRE(a.entry(e).value.size() == b.entry(e).value.size());
        for (std::size_t i = 0; i < a.entry(e).value.size(); ++i) {
            CHECK(a.entry(e).value.data[i] == b.entry(e).value.data[i]);
        }
    }
    ParamStore c(43);
    c.add_weight("W", 8, 3);
    bool any_diff = false;
    for (std::size_t i = 0; i < c.entry(0).value.size(); ++i) {
        any_diff = any_diff || (c.entry(0).value.data[i] != a.entry(0).value.data[i]);
    }
    CHECK(any_diff);
}

TEST_CASE("checkpoint serialization round-trips") {
    ParamStore a(77);
    a.add_weight("enc.W", 3, 5);
    a.add_zeros("enc.b", 3, 1);
    const std::string text = a.to_json();
    ParamStore b = ParamStore::from_json(text);
    REQUIRE(b.count() == a.count());
    CHECK(b.seed() == a.seed());
    for (std::size_t e = 0; e < a.count(); ++e) {
        CHECK(b.entry(e).name == a.entry(e).name);
        REQUIRE(b.entry(e).value.rows == a.entry(e).value.rows);
        REQUIRE(b.entry(e).value.cols == a.entry(e).value.cols);
        for (std::size_t i = 0; i < a.entry(e).value.size(); ++i) {
            CHECK(b.entry(e).value.data[i] == a.entry(e).value.data[i]);
        }
    }
    CHECK_THROWS_AS(ParamStore::from_json("{\"kind\":\"other\"}"), std::invalid_argument);
}

TEST_CASE("finite-difference helper sanity") {
    CHECK(fd_rel_err(1.0, 1.0) == 0.0);
    CHECK(fd_rel_err(0.0, 0.0) == 0.0);
}
