#include "ssag/model.hpp"

#include <cmath>

namespace ssag {

void ModelConfig::validate() const {
    if (k < 2) throw config_error("model config: k must be at least 2 (background plus one action)");
    if (d < 1) throw config_error("model config: d must be positive");
    if (m < 0) throw config_error("model config: m must be non-negative");
    if (frame_shape.empty() || (frame_shape.size() != 1 && frame_shape.size() != 3))
        throw config_error("model config: frame shape must be (features) or (c,h,w)");
    if (encoder_widths.empty()) throw config_error("model config: encoder widths missing");
    if (frame_shape.size() == 1 && encoder_widths.back() != d)
        throw config_error("model config: last encoder width " + std::to_string(encoder_widths.back()) +
                           " must equal d=" + std::to_string(d));
    if (fusion_width < 1 || trunk_width < 1) throw config_error("model config: head widths must be positive");
    if (noise_mode == NoiseMode::Gaussian && noise_dim < 0)
        throw config_error("model config: noise dimension must be non-negative");
    if (noise_mode == NoiseMode::Dropout && (dropout_rate < 0.0 || dropout_rate >= 1.0))
        throw config_error("model config: dropout rate must be in [0,1)");
}

ModelConfig default_model_config(std::vector<int> frame_shape, int k) {
    ModelConfig cfg;
    cfg.frame_shape = std::move(frame_shape);
    cfg.k = k;
    if (cfg.frame_shape.size() == 1) {
        cfg.encoder_widths = {64, 64};
    } else {
        cfg.encoder_widths = {16, 32, 64};
    }
    return cfg;
}

Generator::Out Generator::forward(const ModelConfig& cfg, const Tensor& frames, const Tensor& noise,
                                  const Tensor& context, Mode mode, Rng* dropout_rng) const {
    Tensor enc = encoder.forward(frames, mode);
    std::vector<Tensor> parts{enc};
    if (cfg.noise_mode == NoiseMode::Gaussian && cfg.noise_dim > 0) parts.push_back(noise);
    if (cfg.has_context()) parts.push_back(context);
    Tensor fused = relu(fusion_bn.forward(fusion.forward(concat_cols(parts)), mode));
    if (cfg.noise_mode == NoiseMode::Dropout) {
        if (dropout_rng == nullptr) throw contract_error("generator: dropout noise mode needs an rng");
        fused = dropout(fused, cfg.dropout_rate, *dropout_rng, mode);
    }
    Out out;
    out.code = sigmoid(code_head.forward(fused));
    out.hidden = enc;
    return out;
}

Tensor Generator::hidden_state(const Tensor& frames, Mode mode) const { return encoder.forward(frames, mode); }

ParamList Generator::params(const std::string& prefix) const {
    ParamList out;
    encoder.collect(out, prefix + ".enc");
    fusion.collect(out, prefix + ".fusion");
    fusion_bn.collect(out, prefix + ".fusion_bn");
    code_head.collect(out, prefix + ".code");
    return out;
}

std::vector<NamedBuffer> Generator::buffers(const std::string& prefix) const {
    std::vector<NamedBuffer> out;
    collect_bn_buffers(encoder, prefix + ".enc", out);
    out.push_back({prefix + ".fusion_bn", &fusion_bn.state});
    return out;
}

Discriminator::Out Discriminator::forward(const Tensor& frames, const Tensor& codes, Mode mode) const {
    Tensor enc = encoder.forward(frames, mode);
    Tensor joint = relu(trunk_bn.forward(trunk.forward(concat_cols({enc, codes})), mode));
    Out out;
    out.real_prob = sigmoid(adv_head.forward(joint));
    out.class_probs = softmax(cls_head.forward(cls_on_code ? joint : enc));
    return out;
}

ParamList Discriminator::params(const std::string& prefix) const {
    ParamList out;
    encoder.collect(out, prefix + ".enc");
    trunk.collect(out, prefix + ".trunk");
    trunk_bn.collect(out, prefix + ".trunk_bn");
    adv_head.collect(out, prefix + ".adv");
    cls_head.collect(out, prefix + ".cls");
    return out;
}

std::vector<NamedBuffer> Discriminator::buffers(const std::string& prefix) const {
    std::vector<NamedBuffer> out;
    collect_bn_buffers(encoder, prefix + ".enc", out);
    out.push_back({prefix + ".trunk_bn", &trunk_bn.state});
    return out;
}

ParamList ModelParams::generator_side_params() const {
    ParamList out = generator.params();
    if (config.has_context()) {
        if (config.context == ContextKind::Gce) {
            ParamList g = gce.params();
            out.insert(out.end(), g.begin(), g.end());
        } else if (config.context == ContextKind::Lstm) {
            ParamList l = lstm.params();
            out.insert(out.end(), l.begin(), l.end());
        }
    }
    return out;
}

ParamList ModelParams::discriminator_params() const { return discriminator.params(); }

ParamList ModelParams::all_params() const {
    ParamList out = generator_side_params();
    ParamList d = discriminator_params();
    out.insert(out.end(), d.begin(), d.end());
    return out;
}

std::vector<NamedBuffer> ModelParams::all_buffers() const {
    std::vector<NamedBuffer> out = generator.buffers();
    std::vector<NamedBuffer> d = discriminator.buffers();
    out.insert(out.end(), d.begin(), d.end());
    return out;
}

std::size_t ModelParams::trainable_parameter_count() const { return param_count(all_params()); }

Tensor ModelParams::context_from_rows(const Tensor& queue_rows, int rows) const {
    if (!config.has_context()) return Tensor::zeros({rows, config.d});
    if (config.context == ContextKind::Gce) return gce_forward_rows(queue_rows, gce);
    return lstm_context_rows(queue_rows, lstm, config.m);
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    ModelParams mp;
    mp.config = config;

    const bool image = config.frame_shape.size() == 3;
    mp.generator.encoder = make_encoder(config.frame_shape, config.encoder_widths, config.d, rng);
    int fusion_in = config.d;
    if (config.noise_mode == NoiseMode::Gaussian) fusion_in += config.noise_dim;
    if (config.has_context()) fusion_in += config.d;
    mp.generator.fusion = make_affine(fusion_in, config.fusion_width, rng);
    mp.generator.fusion_bn = make_batch_norm(config.fusion_width);
    mp.generator.code_head = make_affine(config.fusion_width, config.k, rng);

    mp.discriminator.encoder = make_encoder(config.frame_shape, config.encoder_widths, config.d, rng);
    mp.discriminator.trunk = make_affine(config.d + config.k, config.trunk_width, rng);
    mp.discriminator.trunk_bn = make_batch_norm(config.trunk_width);
    mp.discriminator.adv_head = make_affine(config.trunk_width, 1, rng);
    mp.discriminator.cls_on_code = config.classifier_sees_code;
    mp.discriminator.cls_head =
        make_affine(config.classifier_sees_code ? config.trunk_width : config.d, config.k, rng);

    if (config.has_context()) {
        if (config.context == ContextKind::Gce)
            mp.gce = init_gce(config.m, config.d, config.gate_mode, rng);
        else if (config.context == ContextKind::Lstm)
            mp.lstm = init_lstm(config.d, rng);
    }
    (void)image;
    return mp;
}

std::size_t analytic_parameter_count(const ModelConfig& cfg) {
    std::size_t n = 0;
    auto affine_n = [](std::size_t din, std::size_t dout) { return din * dout + dout; };
    auto bn_n = [](std::size_t f) { return 2 * f; };

    auto encoder_n = [&]() {
        std::size_t e = 0;
        if (cfg.frame_shape.size() == 1) {
            std::size_t din = static_cast<std::size_t>(cfg.frame_shape[0]);
            for (int w : cfg.encoder_widths) {
                e += affine_n(din, static_cast<std::size_t>(w)) + bn_n(static_cast<std::size_t>(w));
                din = static_cast<std::size_t>(w);
            }
        } else {
            std::size_t c = static_cast<std::size_t>(cfg.frame_shape[0]);
            int h = cfg.frame_shape[1], w = cfg.frame_shape[2];
            for (int f : cfg.encoder_widths) {
                e += static_cast<std::size_t>(f) * c * 9 + bn_n(static_cast<std::size_t>(f));
                c = static_cast<std::size_t>(f);
                h = (h + 2 - 3) / 2 + 1;
                w = (w + 2 - 3) / 2 + 1;
            }
            e += affine_n(c * static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
                          static_cast<std::size_t>(cfg.d)) +
                 bn_n(static_cast<std::size_t>(cfg.d));
        }
        return e;
    };

    n += encoder_n(); // generator encoder
    std::size_t fusion_in = static_cast<std::size_t>(cfg.d);
    if (cfg.noise_mode == NoiseMode::Gaussian) fusion_in += static_cast<std::size_t>(cfg.noise_dim);
    if (cfg.context != ContextKind::None && cfg.m > 0) fusion_in += static_cast<std::size_t>(cfg.d);
    n += affine_n(fusion_in, static_cast<std::size_t>(cfg.fusion_width));
    n += bn_n(static_cast<std::size_t>(cfg.fusion_width));
    n += affine_n(static_cast<std::size_t>(cfg.fusion_width), static_cast<std::size_t>(cfg.k));

    n += encoder_n(); // discriminator encoder
    n += affine_n(static_cast<std::size_t>(cfg.d + cfg.k), static_cast<std::size_t>(cfg.trunk_width));
    n += bn_n(static_cast<std::size_t>(cfg.trunk_width));
    n += affine_n(static_cast<std::size_t>(cfg.trunk_width), 1);
    n += affine_n(static_cast<std::size_t>(cfg.classifier_sees_code ? cfg.trunk_width : cfg.d),
                  static_cast<std::size_t>(cfg.k));

    if (cfg.context == ContextKind::Gce && cfg.m > 0) {
        const std::size_t md = static_cast<std::size_t>(cfg.m) * static_cast<std::size_t>(cfg.d);
        n += static_cast<std::size_t>(cfg.d) * static_cast<std::size_t>(cfg.d);
        n += (cfg.gate_mode == GateMode::Scalar ? static_cast<std::size_t>(cfg.m) : md) * md;
    } else if (cfg.context == ContextKind::Lstm && cfg.m > 0) {
        n += static_cast<std::size_t>(2 * cfg.d) * static_cast<std::size_t>(4 * cfg.d) +
             static_cast<std::size_t>(4 * cfg.d);
    }
    return n;
}

} // namespace ssag
