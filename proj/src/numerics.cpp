#include "vrm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vrm::num {

namespace {

void require_positive(double x, const char* what) {
    if (!(x > 0.0)) {
        throw std::domain_error(std::string(what) + " requires a positive argument, got " +
                                std::to_string(x));
    }
}

}  // namespace

double log_gamma(double x) {
    require_positive(x, "log_gamma");
    // Lanczos, g = 607/128, 15 terms.
    static const double coef[14] = {
        57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
        -0.491913816097620199,   0.339946499848118887e-4, 0.465236289270485756e-4,
        -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
        0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
        -0.261908384015814087e-4, 0.368991826595316234e-5};
    double y = x;
    double tmp = x + 5.24218750000000000;  // x + g + 1/2
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (double c : coef) {
        ser += c / ++y;
    }
    return tmp + std::log(2.5066282746310005 * ser / x);
}

double digamma(double x) {
    require_positive(x, "digamma");
    // Shift into the asymptotic regime, Psi(x) = Psi(x+1) - 1/x.
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli series: ln x - 1/(2x) - sum B_2n / (2n x^2n)
    double series = inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                    inv2 * (1.0 / 252.0 -
                    inv2 * (1.0 / 240.0 -
                    inv2 * (1.0 / 132.0 -
                    inv2 * (691.0 / 32760.0 -
                    inv2 * (1.0 / 12.0)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    const double h = 1e-6;
    if (x <= h) {
        // one-sided to stay in the domain near zero
        return (digamma(x + 2.0 * h) - digamma(x)) / (2.0 * h);
    }
    return (digamma(x + h) - digamma(x - h)) / (2.0 * h);
}

namespace {

// Lower incomplete gamma by series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    const double eps = std::numeric_limits<double>::epsilon();
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 10000; ++i) {
        ++ap;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * eps) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Upper incomplete gamma Q(a,x) by modified Lentz continued fraction,
// valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double fpmin = std::numeric_limits<double>::min() / eps;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= eps) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace

double reg_incomplete_gamma(double a, double x) {
    require_positive(a, "reg_incomplete_gamma");
    if (!(x >= 0.0)) {
        throw std::domain_error("reg_incomplete_gamma requires x >= 0, got " + std::to_string(x));
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return gamma_p_series(a, x);
    }
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_pdf(double a, double x) {
    require_positive(a, "gamma_pdf");
    if (x <= 0.0) {
        return 0.0;
    }
    return std::exp((a - 1.0) * std::log(x) - x - log_gamma(a));
}

double inv_reg_incomplete_gamma(double a, double p, double hint) {
    require_positive(a, "inv_reg_incomplete_gamma");
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("inv_reg_incomplete_gamma requires p in (0,1), got " +
                                std::to_string(p));
    }
    double x = hint > 0.0 ? hint : std::max(a, 1e-8);
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double f = reg_incomplete_gamma(a, x) - p;
        if (f == 0.0) {
            return x;
        }
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double dfdx = gamma_pdf(a, x);
        double next = x;
        if (dfdx > 0.0) {
            next = x - f / dfdx;
        }
        if (!(next > lo) || !(next < hi) || !std::isfinite(next)) {
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : (lo > 0.0 ? 2.0 * lo + 1.0 : 1.0);
        }
        if (next == x) {
            return x;
        }
        x = next;
        if (std::isfinite(hi) && hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            return x;
        }
    }
    return x;
}

double stable_sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double log_sigmoid(double t) {
    if (t >= 0.0) {
        return -std::log1p(std::exp(-t));
    }
    return t - std::log1p(std::exp(t));
}

double softplus(double t) {
    if (t > 0.0) {
        return t + std::log1p(std::exp(-t));
    }
    return std::log1p(std::exp(t));
}

void softmax_inplace(std::span<double> v) {
    if (v.empty()) {
        throw std::invalid_argument("softmax of an empty vector");
    }
    const double m = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& t : v) {
        t = std::exp(t - m);
        total += t;
    }
    for (double& t : v) {
        t /= total;
    }
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    softmax_inplace(out);
    return out;
}

}  // namespace vrm::num
