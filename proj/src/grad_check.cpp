#include "ssag/grad_check.hpp"

#include <cmath>
#include <vector>

namespace ssag {

GradCheckReport grad_check(const std::function<Tensor()>& f, ParamList& params, double h, double tolerance) {
    if (h <= 0.0) throw contract_error("grad_check: step h must be positive");

    // analytic pass
    zero_grads(params);
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor loss = f();
        if (!std::isfinite(loss.item())) throw eval_error("grad_check: objective is non-finite");
        backward(loss);
        for (NamedParam& p : params) analytic.push_back(p.tensor.grad());
    }

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = params[pi].tensor;
        double* w = t.data();
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double saved = w[i];
            w[i] = saved + h;
            const double fp = f().item();
            w[i] = saved - h;
            const double fm = f().item();
            w[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw eval_error("grad_check: objective is non-finite near '" + params[pi].name + "'");
            const double numeric = (fp - fm) / (2.0 * h);
            const double rel = std::fabs(analytic[pi][i] - numeric) / std::max(1.0, std::fabs(numeric));
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_param = params[pi].name;
                report.worst_coord = i;
            }
        }
    }
    report.pass = report.max_relative_error < tolerance;
    zero_grads(params);
    return report;
}

} // namespace ssag
