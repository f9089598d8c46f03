#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ssag/errors.hpp"

namespace ssag {

class Tape;

namespace detail {

struct TensorData {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad; // allocated iff requires_grad
    bool requires_grad = false;
    bool leaf = true;
    Tape* tape = nullptr; // tape that recorded the producing op, if any
    int node_index = -1;
    std::uint64_t tape_gen = 0;
};

} // namespace detail

std::string shape_str(const std::vector<int>& shape);
std::size_t shape_numel(const std::vector<int>& shape);

// Dense row-major tensor of doubles. Copying a Tensor aliases the same
// storage; detach()/clone() make independent leaves.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return d_ != nullptr; }
    const std::vector<int>& shape() const { return d_->shape; }
    int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    std::size_t size() const { return d_->data.size(); }

    double* data() { return d_->data.data(); }
    const double* data() const { return d_->data.data(); }
    std::vector<double>& values() { return d_->data; }
    const std::vector<double>& values() const { return d_->data; }

    double at(std::size_t i) const { return d_->data[i]; }
    double at2(int r, int c) const {
        return d_->data[static_cast<std::size_t>(r) * static_cast<std::size_t>(d_->shape[1]) + static_cast<std::size_t>(c)];
    }

    // value of a scalar tensor
    double item() const;

    bool requires_grad() const { return d_->requires_grad; }
    bool is_leaf() const { return d_->leaf; }

    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    // independent leaf copy of the values, no grad
    Tensor detach() const;

    void check_finite(const char* what) const;

    detail::TensorData* raw() const { return d_.get(); }
    std::shared_ptr<detail::TensorData> handle() const { return d_; }
    static Tensor wrap(std::shared_ptr<detail::TensorData> d) {
        Tensor t;
        t.d_ = std::move(d);
        return t;
    }

  private:
    std::shared_ptr<detail::TensorData> d_;
};

// Reverse-mode tape. Ops recorded in execution order, which is a topological
// order; backward() from a loss replays closures in reverse, visiting each
// node once. Leaf gradients accumulate across backward calls; non-leaf
// gradients are reset at the start of each call.
class Tape {
  public:
    struct Node {
        std::function<void()> back;
        std::shared_ptr<detail::TensorData> result;
    };

    int record(std::function<void()> back, const std::shared_ptr<detail::TensorData>& result);
    void clear();

    std::size_t node_count() const { return nodes_.size(); }
    std::uint64_t generation() const { return gen_; }
    const std::vector<Node>& nodes() const { return nodes_; }

  private:
    std::vector<Node> nodes_;
    std::uint64_t gen_ = 1;
};

// RAII scope making a tape the active recorder for the current thread.
class TapeScope {
  public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

  private:
    Tape* prev_;
};

// RAII scope suspending recording, for forwards that must stay constant.
class NoGradScope {
  public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

  private:
    Tape* prev_;
};

Tape* active_tape();

// Run reverse-mode accumulation from a scalar loss over the tape that
// produced it. Leaf grads add across calls; adam_step or zero_grad resets.
void backward(const Tensor& loss);

} // namespace ssag
