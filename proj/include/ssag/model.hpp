#pragma once

#include <string>
#include <vector>

#include "ssag/gce.hpp"
#include "ssag/layers.hpp"

namespace ssag {

enum class ContextKind { None, Gce, Lstm };

enum class NoiseMode { Gaussian, Dropout };

struct ModelConfig {
    std::vector<int> frame_shape; // (features) or (c, h, w)
    int k = 0;                    // classes including background
    int d = 64;                   // hidden state / context dimension
    int m = 16;                   // queue capacity; 0 disables context entirely
    int noise_dim = 16;
    std::vector<int> encoder_widths; // vector mode: last must equal d; image mode: conv filters
    int fusion_width = 64;
    int trunk_width = 64;
    ContextKind context = ContextKind::Gce;
    GateMode gate_mode = GateMode::Scalar;
    NoiseMode noise_mode = NoiseMode::Gaussian;
    double dropout_rate = 0.5;        // used when noise_mode == Dropout
    bool classifier_sees_code = true; // false: classifier head reads the frame encoding only

    void validate() const;
    bool has_context() const { return context != ContextKind::None && m > 0; }
};

ModelConfig default_model_config(std::vector<int> frame_shape, int k);

// Generator G: frame (+ noise + context) -> action code in (0,1)^k, plus the
// hidden state that feeds the context queue.
struct Generator {
    Encoder encoder;
    AffineLayer fusion;
    BatchNormLayer fusion_bn;
    AffineLayer code_head;

    struct Out {
        Tensor code;   // n x k, sigmoid
        Tensor hidden; // n x d, the queue state
    };

    Out forward(const ModelConfig& cfg, const Tensor& frames, const Tensor& noise, const Tensor& context,
                Mode mode, Rng* dropout_rng = nullptr) const;

    // encoder output only, for advancing queues
    Tensor hidden_state(const Tensor& frames, Mode mode) const;

    ParamList params(const std::string& prefix = "g") const;
    std::vector<NamedBuffer> buffers(const std::string& prefix = "g") const;
};

// Discriminator D: frame + code -> real/fake score and class probabilities.
struct Discriminator {
    Encoder encoder;
    AffineLayer trunk;
    BatchNormLayer trunk_bn;
    AffineLayer adv_head; // FC(1), sigmoid
    AffineLayer cls_head; // FC(k), softmax
    bool cls_on_code = true;

    struct Out {
        Tensor real_prob;   // n x 1, sigmoid
        Tensor class_probs; // n x k, softmax rows
    };

    Out forward(const Tensor& frames, const Tensor& codes, Mode mode) const;

    ParamList params(const std::string& prefix = "d") const;
    std::vector<NamedBuffer> buffers(const std::string& prefix = "d") const;
};

struct ModelParams {
    ModelConfig config;
    Generator generator;
    Discriminator discriminator;
    GceParams gce;   // valid when context == Gce
    LstmParams lstm; // valid when context == Lstm

    ParamList generator_side_params() const; // generator + context module
    ParamList discriminator_params() const;
    ParamList all_params() const;
    std::vector<NamedBuffer> all_buffers() const;
    std::size_t trainable_parameter_count() const;

    // context from per-row queue snapshots (rows x m*d); zero rows x d when
    // the config has no context module
    Tensor context_from_rows(const Tensor& queue_rows, int rows) const;
};

// Deterministic initialization of every sub-module from one seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// closed-form parameter count for the given config, for cross-checking
std::size_t analytic_parameter_count(const ModelConfig& config);

} // namespace ssag
