#include "vrm/gradcheck.hpp"

#include <cmath>

namespace vrm {

namespace {

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(1e-8, std::fabs(a) + std::fabs(b));
}

double eval_loss(const ParamStore& params, const LossBuilder& f) {
    Tape tape;
    const std::vector<Tape::Id> ids = params.bind(tape);
    return tape.scalar_value(f(tape, ids));
}

}  // namespace

GradCheckReport grad_check(const ParamStore& params, const LossBuilder& f, double h) {
    // analytic pass
    Tape tape;
    const std::vector<Tape::Id> ids = params.bind(tape);
    tape.backward(f(tape, ids));

    ParamStore work = params;
    GradCheckReport report;
    for (std::size_t e = 0; e < params.count(); ++e) {
        GradCheckReport::PerParam pp;
        pp.name = params.entry(e).name;
        Tensor& value = work.entry(e).value;
        const Tensor& analytic = tape.grad(ids[e]);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double x0 = value.data[i];
            const double step = h * std::max(1.0, std::fabs(x0));
            value.data[i] = x0 + step;
            const double fp = eval_loss(work, f);
            value.data[i] = x0 - step;
            const double fm = eval_loss(work, f);
            value.data[i] = x0;
            const double numeric = (fp - fm) / (2.0 * step);
            pp.max_rel_err = std::max(pp.max_rel_err, rel_err(analytic.data[i], numeric));
        }
        if (pp.max_rel_err > report.max_rel_err) {
            report.max_rel_err = pp.max_rel_err;
            report.worst_param = pp.name;
        }
        report.params.push_back(std::move(pp));
    }
    return report;
}

}  // namespace vrm
