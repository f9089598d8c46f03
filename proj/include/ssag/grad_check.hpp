#pragma once

#include <functional>
#include <string>

#include "ssag/optimizer.hpp"
#include "ssag/tensor.hpp"

namespace ssag {

struct GradCheckReport {
    double max_relative_error = 0.0;
    bool pass = false;
    std::string worst_param;
    std::size_t worst_coord = 0;
};

// Compares reverse-mode gradients of scalar f() against central differences
// (f(x+h) - f(x-h)) / 2h per coordinate. f must be deterministic; the numeric
// evaluations run with no tape active. Relative error per coordinate is
// |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(const std::function<Tensor()>& f, ParamList& params, double h = 1e-4,
                           double tolerance = 1e-4);

} // namespace ssag
