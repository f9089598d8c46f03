#include "ssag/optimizer.hpp"

#include <cmath>

namespace ssag {

std::size_t param_count(const ParamList& params) {
    std::size_t n = 0;
    for (const NamedParam& p : params) n += p.tensor.size();
    return n;
}

void zero_grads(ParamList& params) {
    for (NamedParam& p : params) p.tensor.zero_grad();
}

void AdamState::init(const ParamList& params) {
    m_.clear();
    v_.clear();
    for (const NamedParam& p : params) {
        m_.emplace_back(p.tensor.size(), 0.0);
        v_.emplace_back(p.tensor.size(), 0.0);
    }
    t_ = 0;
}

void AdamState::step(ParamList& params) {
    if (m_.size() != params.size()) throw contract_error("adam: state not initialized for this parameter list");
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = params[pi].tensor;
        if (!t.requires_grad())
            throw contract_error("adam: parameter '" + params[pi].name + "' has no grad accumulator");
        if (m_[pi].size() != t.size())
            throw contract_error("adam: moment shape mismatch for '" + params[pi].name + "'");
        double* w = t.data();
        std::vector<double>& g = t.grad();
        std::vector<double>& m = m_[pi];
        std::vector<double>& v = v_[pi];
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            if (!std::isfinite(w[i])) throw eval_error("adam: parameter '" + params[pi].name + "' became non-finite");
        }
        t.zero_grad();
    }
}

void adam_step(ParamList& params, AdamState& state) {
    if (state.moments1().empty()) state.init(params);
    state.step(params);
}

} // namespace ssag
