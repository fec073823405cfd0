#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vrm/numerics.hpp"

using namespace vrm;

TEST_CASE("log_gamma examples") {
    CHECK(std::fabs(num::log_gamma(1.0)) < 1e-12);
    CHECK(num::log_gamma(3.0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    // 0.5 ln pi, frozen from a 40-digit mpmath evaluation
    CHECK(num::log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-12));
    CHECK_THROWS_AS(num::log_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(num::log_gamma(-1.5), std::domain_error);
}

TEST_CASE("log_gamma recurrence ln G(x+1) = ln G(x) + ln x") {
    for (double x : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
        CHECK(std::fabs(num::log_gamma(x + 1.0) - (num::log_gamma(x) + std::log(x))) < 1e-9);
    }
}

TEST_CASE("digamma examples and identities") {
    CHECK(num::digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
    CHECK(num::digamma(2.0) == doctest::Approx(0.42278433509846713).epsilon(1e-12));
    CHECK_THROWS_AS(num::digamma(0.0), std::domain_error);

    // central finite difference of log_gamma on a log-spaced grid
    for (double x : {1e-2, 1e-1, 1.0, 2.0, 10.0, 1e2, 1e3, 1e4}) {
        const double h = 1e-6 * std::max(1.0, x);
        const double fd = (num::log_gamma(x + h) - num::log_gamma(x - h)) / (2.0 * h);
        CHECK(std::fabs(num::digamma(x) - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
    }
    // recurrence Psi(x+1) = Psi(x) + 1/x
    for (double x : {0.05, 0.7, 3.3, 42.0}) {
        CHECK(std::fabs(num::digamma(x + 1.0) - num::digamma(x) - 1.0 / x) < 1e-10);
    }
}

TEST_CASE("reg_incomplete_gamma examples") {
    CHECK(num::reg_incomplete_gamma(1.0, 0.0) == 0.0);
    CHECK(num::reg_incomplete_gamma(1.0, 1.0) == doctest::Approx(0.6321205588285577).epsilon(1e-12));
    // frozen independent evaluation (mpmath regularized gammainc)
    CHECK(num::reg_incomplete_gamma(2.5, 3.0) == doctest::Approx(0.6937810815867216).epsilon(1e-11));
    CHECK_THROWS_AS(num::reg_incomplete_gamma(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(num::reg_incomplete_gamma(1.0, -0.5), std::domain_error);
}

TEST_CASE("reg_incomplete_gamma is nondecreasing in x and tends to 1") {
    for (double a : {0.3, 1.0, 2.5, 10.0, 100.0}) {
        double prev = 0.0;
        for (double x = 0.0; x <= 8.0 * a + 20.0; x += 0.25 * (a + 1.0)) {
            const double p = num::reg_incomplete_gamma(a, x);
            CHECK(p >= prev - 1e-12);
            CHECK(p <= 1.0 + 1e-12);
            prev = p;
        }
        CHECK(num::reg_incomplete_gamma(a, 50.0 * a + 200.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("incomplete gamma inverse round-trips") {
    for (double a : {0.4, 1.0, 2.5, 7.0, 50.0}) {
        for (double p : {0.01, 0.2, 0.5, 0.9, 0.999}) {
            const double x = num::inv_reg_incomplete_gamma(a, p);
            CHECK(num::reg_incomplete_gamma(a, x) == doctest::Approx(p).epsilon(1e-10));
        }
    }
    // a hint equal to the true quantile is returned bitwise
    const double x0 = 2.7183;
    const double p0 = num::reg_incomplete_gamma(3.0, x0);
    CHECK(num::inv_reg_incomplete_gamma(3.0, p0, x0) == x0);
}

TEST_CASE("stable sigmoid and log_sigmoid") {
    CHECK(num::stable_sigmoid(0.0) == 0.5);
    CHECK(num::stable_sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    CHECK(num::stable_sigmoid(-745.0) > 0.0);
    CHECK(std::isfinite(num::log_sigmoid(-745.0)));
    CHECK(num::log_sigmoid(-745.0) == doctest::Approx(-745.0).epsilon(1e-12));
    CHECK(std::isfinite(num::stable_sigmoid(1000.0)));
    CHECK(std::isfinite(num::stable_sigmoid(-1000.0)));

    // sigma(t) + sigma(-t) = 1
    for (double t : {-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 100.0}) {
        CHECK(std::fabs(num::stable_sigmoid(t) + num::stable_sigmoid(-t) - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax examples and properties") {
    auto u = num::softmax(std::vector<double>{0.0, 0.0, 0.0});
    CHECK(u[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    auto s = num::softmax(std::vector<double>{1.0, 0.0, -1.0});
    CHECK(s[0] == doctest::Approx(0.6652409557748219).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
    CHECK(s[2] == doctest::Approx(0.09003057317038046).epsilon(1e-12));

    auto big = num::softmax(std::vector<double>{1000.0, 0.0});
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(num::softmax(std::vector<double>{}), std::invalid_argument);

    // shift invariance and normalization
    std::vector<double> v{0.3, -1.2, 2.0, 0.0};
    auto a = num::softmax(v);
    for (double& t : v) t += 7.5;
    auto b = num::softmax(v);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::fabs(a[i] - b[i]) < 1e-12);
        CHECK(a[i] > 0.0);
        total += a[i];
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
}
