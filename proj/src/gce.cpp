#include "ssag/gce.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "ssag/layers.hpp"

namespace ssag {

ContextQueue::ContextQueue(int capacity, int dim) : m_(capacity), d_(dim) {
    if (capacity < 1) throw config_error("context queue: capacity must be positive");
    if (dim < 1) throw config_error("context queue: state dimension must be positive");
    ring_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_), 0.0);
}

void ContextQueue::push(const std::vector<double>& s) {
    if (static_cast<int>(s.size()) != d_)
        throw contract_error("context queue: state dimension " + std::to_string(s.size()) +
                             " does not match queue dimension " + std::to_string(d_));
    head_ = (head_ + 1) % m_;
    std::memcpy(ring_.data() + static_cast<std::size_t>(head_) * d_, s.data(),
                static_cast<std::size_t>(d_) * sizeof(double));
    if (fill_ < m_) ++fill_;
}

void ContextQueue::reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    fill_ = 0;
    head_ = 0;
}

std::vector<double> ContextQueue::entry(int j) const {
    if (j < 1 || j > m_)
        throw contract_error("context queue: position " + std::to_string(j) + " outside 1.." + std::to_string(m_));
    std::vector<double> out(static_cast<std::size_t>(d_), 0.0);
    if (j <= fill_) {
        const int slot = ((head_ - (j - 1)) % m_ + m_) % m_;
        std::memcpy(out.data(), ring_.data() + static_cast<std::size_t>(slot) * d_,
                    static_cast<std::size_t>(d_) * sizeof(double));
    }
    return out;
}

std::vector<double> ContextQueue::concat() const {
    std::vector<double> out(static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_), 0.0);
    for (int j = 1; j <= fill_; ++j) {
        const int slot = ((head_ - (j - 1)) % m_ + m_) % m_;
        // position j lands oldest-first at block m - j
        std::memcpy(out.data() + static_cast<std::size_t>(m_ - j) * d_,
                    ring_.data() + static_cast<std::size_t>(slot) * d_,
                    static_cast<std::size_t>(d_) * sizeof(double));
    }
    return out;
}

ContextQueue::Snapshot ContextQueue::save() const { return Snapshot{ring_, head_, fill_}; }

void ContextQueue::load(const Snapshot& snap) {
    if (snap.ring.size() != ring_.size()) throw contract_error("context queue: snapshot size mismatch");
    ring_ = snap.ring;
    head_ = snap.head;
    fill_ = snap.fill;
}

ParamList GceParams::params(const std::string& prefix) const {
    return {{prefix + ".embed", embed}, {prefix + ".gate", gate_weights}};
}

std::size_t GceParams::parameter_count() const { return embed.size() + gate_weights.size(); }

GceParams init_gce(int m, int d, GateMode mode, Rng& rng) {
    if (m < 1 || d < 1) throw config_error("gce: m and d must be positive");
    GceParams p;
    p.m = m;
    p.d = d;
    p.gate_mode = mode;
    p.embed = xavier_init({d, d}, rng);
    const int gate_rows = (mode == GateMode::Scalar) ? m : m * d;
    p.gate_weights = xavier_init({gate_rows, m * d}, rng);
    return p;
}

Tensor gce_forward_rows(const Tensor& queue_rows, const GceParams& params) {
    const int rows = queue_rows.dim(0);
    const int md = params.m * params.d;
    if (queue_rows.dim(1) != md)
        throw dimension_error("gce: queue rows " + shape_str(queue_rows.shape()) + " expected width " +
                              std::to_string(md));
    // embed every stored state through the shared weights
    Tensor states = reshape(queue_rows, {rows * params.m, params.d});
    Tensor h = tanh(matmul(states, params.embed));
    // one gate per slot, each attending over the entire queue
    Tensor gates = sigmoid(matmul(queue_rows, params.gate_weights, /*transpose_b=*/true));
    Tensor gated;
    if (params.gate_mode == GateMode::Scalar) {
        Tensor expanded = repeat_cols(reshape(gates, {rows * params.m, 1}), params.d);
        gated = mul(h, expanded);
    } else {
        gated = mul(h, reshape(gates, {rows * params.m, params.d}));
    }
    return sum_rows_grouped(gated, params.m);
}

Tensor gce_forward(const ContextQueue& queue, const GceParams& params) {
    if (queue.capacity() != params.m || queue.dim() != params.d)
        throw contract_error("gce: queue " + std::to_string(queue.capacity()) + "x" + std::to_string(queue.dim()) +
                             " does not match params " + std::to_string(params.m) + "x" + std::to_string(params.d));
    Tensor rows = Tensor::from({1, params.m * params.d}, queue.concat());
    return gce_forward_rows(rows, params);
}

Tensor gau_forward(const ContextQueue& queue, const GceParams& params, int j) {
    if (j < 1 || j > params.m)
        throw contract_error("gau: position " + std::to_string(j) + " outside 1.." + std::to_string(params.m));
    Tensor s = Tensor::from({1, params.d}, queue.entry(j));
    Tensor h = tanh(matmul(s, params.embed));
    Tensor all = Tensor::from({1, params.m * params.d}, queue.concat());
    Tensor gates = sigmoid(matmul(all, params.gate_weights, /*transpose_b=*/true));
    // gate rows are stored oldest-first: position j lives at row m - j
    const int row = params.m - j;
    if (params.gate_mode == GateMode::Scalar) {
        Tensor q = slice_cols(gates, row, 1);
        return mul(h, repeat_cols(q, params.d));
    }
    Tensor q = slice_cols(gates, row * params.d, params.d);
    return mul(h, q);
}

ParamList LstmParams::params(const std::string& prefix) const {
    return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

std::size_t LstmParams::parameter_count() const { return weight.size() + bias.size(); }

LstmParams init_lstm(int d, Rng& rng) {
    if (d < 1) throw config_error("lstm: state dimension must be positive");
    LstmParams p;
    p.d = d;
    p.weight = xavier_init({2 * d, 4 * d}, rng);
    p.bias = Tensor::zeros({4 * d}, true);
    return p;
}

Tensor lstm_context_rows(const Tensor& queue_rows, const LstmParams& params, int m) {
    const int rows = queue_rows.dim(0);
    const int d = params.d;
    if (queue_rows.dim(1) != m * d)
        throw dimension_error("lstm: queue rows " + shape_str(queue_rows.shape()) + " expected width " +
                              std::to_string(m * d));
    Tensor h = Tensor::zeros({rows, d});
    Tensor c = Tensor::zeros({rows, d});
    for (int p = 0; p < m; ++p) { // oldest first
        Tensor x = slice_cols(queue_rows, p * d, d);
        Tensor gates = affine(concat_cols({x, h}), params.weight, params.bias);
        Tensor ig = sigmoid(slice_cols(gates, 0, d));
        Tensor fg = sigmoid(slice_cols(gates, d, d));
        Tensor cg = tanh(slice_cols(gates, 2 * d, d));
        Tensor og = sigmoid(slice_cols(gates, 3 * d, d));
        c = add(mul(fg, c), mul(ig, cg));
        h = mul(og, tanh(c));
    }
    return h;
}

Tensor lstm_context(const ContextQueue& queue, const LstmParams& params) {
    if (queue.dim() != params.d)
        throw contract_error("lstm: queue dimension " + std::to_string(queue.dim()) + " does not match cell size " +
                             std::to_string(params.d));
    Tensor rows = Tensor::from({1, queue.capacity() * queue.dim()}, queue.concat());
    return lstm_context_rows(rows, params, queue.capacity());
}

} // namespace ssag
