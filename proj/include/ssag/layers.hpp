#pragma once

#include <string>
#include <vector>

#include "ssag/ops.hpp"
#include "ssag/optimizer.hpp"
#include "ssag/rng.hpp"

namespace ssag {

Tensor xavier_init(std::vector<int> shape, Rng& rng);

struct AffineLayer {
    Tensor W;
    Tensor b;

    Tensor forward(const Tensor& x) const { return affine(x, W, b); }
    void collect(ParamList& out, const std::string& prefix) const;
};

AffineLayer make_affine(int din, int dout, Rng& rng);

struct BatchNormLayer {
    Tensor gamma;
    Tensor beta;
    mutable BnState state;
    double momentum = 0.1;
    double eps = 1e-5;

    Tensor forward(const Tensor& x, Mode mode) const {
        return batch_norm(x, gamma, beta, state, mode, momentum, eps);
    }
    void collect(ParamList& out, const std::string& prefix) const;
};

BatchNormLayer make_batch_norm(int features);

struct ConvBlock {
    Tensor kernel; // f x c x 3 x 3
    BatchNormLayer bn;
    int stride = 2;
    int padding = 1;

    Tensor forward(const Tensor& x, Mode mode) const {
        return relu(bn.forward(conv2d(x, kernel, stride, padding), mode));
    }
    void collect(ParamList& out, const std::string& prefix) const;
};

ConvBlock make_conv_block(int in_channels, int filters, Rng& rng);

// Frame encoder producing the d-dimensional hidden state fed to the fusion
// head and pushed onto the context queue. Vector input runs an
// affine_BN_ReLU stack; image input runs conv_BN_ReLU groups, a flatten and
// a final affine to d.
struct Encoder {
    bool image_input = false;
    std::vector<int> frame_shape; // (features) or (c, h, w)
    int out_dim = 0;

    std::vector<AffineLayer> fc;
    std::vector<BatchNormLayer> fc_bn;
    std::vector<ConvBlock> conv;
    AffineLayer to_state; // images only
    BatchNormLayer state_bn;

    Tensor forward(const Tensor& x, Mode mode) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

Encoder make_encoder(const std::vector<int>& frame_shape, const std::vector<int>& widths, int out_dim, Rng& rng);

// named running-stat buffers for checkpointing
struct NamedBuffer {
    std::string name;
    BnState* state;
};

void collect_bn_buffers(const Encoder& enc, const std::string& prefix, std::vector<NamedBuffer>& out);

} // namespace ssag
