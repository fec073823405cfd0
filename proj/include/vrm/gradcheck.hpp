// Central-difference gradient verification against the tape. The loss
// builder must be deterministic given the parameter values (sampling
// frozen through noise records).

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vrm/params.hpp"
#include "vrm/tape.hpp"

namespace vrm {

// Builds a scalar loss from bound parameter leaves; ids[i] is entry(i).
using LossBuilder = std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)>;

struct GradCheckReport {
    struct PerParam {
        std::string name;
        double max_rel_err = 0.0;
    };
    std::vector<PerParam> params;
    double max_rel_err = 0.0;
    std::string worst_param;

    bool passes(double tol) const { return max_rel_err < tol; }
};

// Relative error |a - b| / max(1e-8, |a| + |b|) between analytic and
// central finite differences; per-element steps are h * max(1, |x|).
GradCheckReport grad_check(const ParamStore& params, const LossBuilder& f, double h);

}  // namespace vrm
