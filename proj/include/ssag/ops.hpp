#pragma once

#include <vector>

#include "ssag/rng.hpp"
#include "ssag/tensor.hpp"

namespace ssag {

enum class Mode { Train, Eval };

enum class ActKind { Relu, Tanh, Sigmoid, Softmax };

// Running statistics owned by a batch-norm layer. Updated in train mode,
// read in eval mode. Not part of the differentiable parameter set.
struct BnState {
    std::vector<double> run_mean;
    std::vector<double> run_var;

    explicit BnState(int features = 0)
        : run_mean(static_cast<std::size_t>(features), 0.0),
          run_var(static_cast<std::size_t>(features), 1.0) {}
};

// out = a * b, optionally with b transposed. 2-D only.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// out = x*W + b  (x: n x d_in, W: d_in x d_out, b: d_out)
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

// cross-correlation, zero padding. x: n x c x h x w, kernel: f x c x kh x kw
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding);

// x: n x d (features on axis 1) or n x c x h x w (channels on axis 1)
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BnState& state,
                  Mode mode, double momentum = 0.1, double eps = 1e-5);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x); // over the last axis
Tensor activation(ActKind kind, const Tensor& x);

// train mode: zero a fraction `rate` of elements, scale survivors by 1/(1-rate)
Tensor dropout(const Tensor& x, double rate, Rng& rng, Mode mode);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
Tensor sum(const Tensor& x); // scalar

// all 2-D with equal row counts, joined along axis 1
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, int start, int len);

Tensor reshape(const Tensor& x, std::vector<int> new_shape);
Tensor flatten_rows(const Tensor& x); // n x ... -> n x rest

// x: n x 1 broadcast to n x d
Tensor repeat_cols(const Tensor& x, int d);

// x: (g*m) x d -> g x d, row i = sum of rows i*m .. i*m+m-1
Tensor sum_rows_grouped(const Tensor& x, int m);

// mean of -[t ln p + (1-t) ln(1-p)]; p clamped to [eps_clip, 1-eps_clip]
Tensor bce_loss(const Tensor& p, const std::vector<double>& targets);

// mean of -ln probs[i, labels[i]]; probs: n x k rows on the simplex
Tensor ce_loss(const Tensor& probs, const std::vector<int>& labels);

inline constexpr double kLogClamp = 1e-7;

// test hook: corrupt one backward rule so negative-control gradient checks fail
void debug_inject_backward_fault(bool enabled);

} // namespace ssag
