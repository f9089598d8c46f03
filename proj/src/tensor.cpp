#include "ssag/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ssag {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto d = std::make_shared<detail::TensorData>();
    d->shape = std::move(shape);
    d->data.assign(shape_numel(d->shape), 0.0);
    d->requires_grad = requires_grad;
    if (requires_grad) d->grad.assign(d->data.size(), 0.0);
    return wrap(std::move(d));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = value;
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw dimension_error("tensor data length " + std::to_string(values.size()) +
                              " does not match shape " + shape_str(shape));
    auto d = std::make_shared<detail::TensorData>();
    d->shape = std::move(shape);
    d->data = std::move(values);
    d->requires_grad = requires_grad;
    if (requires_grad) d->grad.assign(d->data.size(), 0.0);
    return wrap(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw contract_error("item() requires a scalar tensor, got shape " + shape_str(shape()));
    return d_->data[0];
}

std::vector<double>& Tensor::grad() {
    if (!d_->requires_grad) throw contract_error("tensor has no grad (requires_grad is false)");
    return d_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!d_->requires_grad) throw contract_error("tensor has no grad (requires_grad is false)");
    return d_->grad;
}

void Tensor::zero_grad() {
    if (d_->requires_grad) d_->grad.assign(d_->data.size(), 0.0);
}

Tensor Tensor::detach() const {
    auto d = std::make_shared<detail::TensorData>();
    d->shape = d_->shape;
    d->data = d_->data;
    d->requires_grad = false;
    d->leaf = true;
    return wrap(std::move(d));
}

void Tensor::check_finite(const char* what) const {
    for (double v : d_->data)
        if (!std::isfinite(v)) throw eval_error(std::string(what) + ": non-finite value encountered");
}

int Tape::record(std::function<void()> back, const std::shared_ptr<detail::TensorData>& result) {
    nodes_.push_back(Node{std::move(back), result});
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::clear() {
    nodes_.clear();
    ++gen_;
}

TapeScope::TapeScope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

NoGradScope::NoGradScope() : prev_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = prev_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw contract_error("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    detail::TensorData* d = loss.raw();
    if (d->tape == nullptr) {
        // leaf scalar: seeding its own grad is the only meaningful action
        if (!d->requires_grad) throw contract_error("backward on a tensor that was not recorded on a tape");
        d->grad[0] += 1.0;
        return;
    }
    Tape* tape = d->tape;
    if (d->tape_gen != tape->generation()) throw contract_error("backward on a tensor from a cleared tape");

    // reset transient (non-leaf) grads so repeated term-by-term backward calls
    // accumulate only into leaves
    const auto& nodes = tape->nodes();
    int last = d->node_index;
    for (int i = 0; i <= last; ++i) {
        auto& r = nodes[static_cast<std::size_t>(i)].result;
        if (r && r->requires_grad) r->grad.assign(r->data.size(), 0.0);
    }
    d->grad[0] = 1.0;
    for (int i = last; i >= 0; --i) nodes[static_cast<std::size_t>(i)].back();
}

} // namespace ssag
