#include "ssag/layers.hpp"

#include <cmath>

namespace ssag {

Tensor xavier_init(std::vector<int> shape, Rng& rng) {
    std::size_t fan_in = 1, fan_out = 1;
    if (shape.size() == 2) {
        fan_in = static_cast<std::size_t>(shape[0]);
        fan_out = static_cast<std::size_t>(shape[1]);
    } else if (shape.size() == 4) { // f x c x kh x kw
        fan_in = static_cast<std::size_t>(shape[1]) * shape[2] * shape[3];
        fan_out = static_cast<std::size_t>(shape[0]) * shape[2] * shape[3];
    } else {
        fan_in = fan_out = shape_numel(shape);
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(shape, true);
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

void AffineLayer::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".W", W});
    out.push_back({prefix + ".b", b});
}

AffineLayer make_affine(int din, int dout, Rng& rng) {
    AffineLayer l;
    l.W = xavier_init({din, dout}, rng);
    l.b = Tensor::zeros({dout}, true);
    return l;
}

void BatchNormLayer::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

BatchNormLayer make_batch_norm(int features) {
    BatchNormLayer l;
    l.gamma = Tensor::full({features}, 1.0, true);
    l.beta = Tensor::zeros({features}, true);
    l.state = BnState(features);
    return l;
}

void ConvBlock::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".kernel", kernel});
    bn.collect(out, prefix + ".bn");
}

ConvBlock make_conv_block(int in_channels, int filters, Rng& rng) {
    ConvBlock b;
    b.kernel = xavier_init({filters, in_channels, 3, 3}, rng);
    b.bn = make_batch_norm(filters);
    return b;
}

Tensor Encoder::forward(const Tensor& x, Mode mode) const {
    if (!image_input) {
        Tensor h = x;
        for (std::size_t i = 0; i < fc.size(); ++i) h = relu(fc_bn[i].forward(fc[i].forward(h), mode));
        return h;
    }
    Tensor h = x;
    for (const ConvBlock& blk : conv) h = blk.forward(h, mode);
    h = flatten_rows(h);
    return relu(state_bn.forward(to_state.forward(h), mode));
}

void Encoder::collect(ParamList& out, const std::string& prefix) const {
    if (!image_input) {
        for (std::size_t i = 0; i < fc.size(); ++i) {
            fc[i].collect(out, prefix + ".fc" + std::to_string(i));
            fc_bn[i].collect(out, prefix + ".bn" + std::to_string(i));
        }
        return;
    }
    for (std::size_t i = 0; i < conv.size(); ++i) conv[i].collect(out, prefix + ".conv" + std::to_string(i));
    to_state.collect(out, prefix + ".state");
    state_bn.collect(out, prefix + ".state_bn");
}

Encoder make_encoder(const std::vector<int>& frame_shape, const std::vector<int>& widths, int out_dim, Rng& rng) {
    if (frame_shape.empty() || (frame_shape.size() != 1 && frame_shape.size() != 3))
        throw config_error("encoder: frame shape must be (features) or (c,h,w)");
    if (out_dim < 1) throw config_error("encoder: output dimension must be positive");
    Encoder e;
    e.frame_shape = frame_shape;
    e.out_dim = out_dim;
    if (frame_shape.size() == 1) {
        e.image_input = false;
        if (widths.empty() || widths.back() != out_dim)
            throw config_error("encoder: last width must equal the state dimension " + std::to_string(out_dim));
        int din = frame_shape[0];
        for (int w : widths) {
            e.fc.push_back(make_affine(din, w, rng));
            e.fc_bn.push_back(make_batch_norm(w));
            din = w;
        }
        return e;
    }
    e.image_input = true;
    int c = frame_shape[0], h = frame_shape[1], w = frame_shape[2];
    for (int filters : widths) {
        e.conv.push_back(make_conv_block(c, filters, rng));
        c = filters;
        h = (h + 2 * 1 - 3) / 2 + 1;
        w = (w + 2 * 1 - 3) / 2 + 1;
        if (h < 1 || w < 1) throw config_error("encoder: image too small for the conv stack");
    }
    e.to_state = make_affine(c * h * w, out_dim, rng);
    e.state_bn = make_batch_norm(out_dim);
    return e;
}

void collect_bn_buffers(const Encoder& enc, const std::string& prefix, std::vector<NamedBuffer>& out) {
    if (!enc.image_input) {
        for (std::size_t i = 0; i < enc.fc_bn.size(); ++i)
            out.push_back({prefix + ".bn" + std::to_string(i), &enc.fc_bn[i].state});
        return;
    }
    for (std::size_t i = 0; i < enc.conv.size(); ++i)
        out.push_back({prefix + ".conv" + std::to_string(i) + ".bn", &enc.conv[i].bn.state});
    out.push_back({prefix + ".state_bn", &enc.state_bn.state});
}

} // namespace ssag
