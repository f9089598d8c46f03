#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssag/dataset.hpp"
#include "ssag/model.hpp"

namespace ssag {

// Model variants: supervised generator baselines, conditional GAN, and the
// semi-supervised GAN, each with or without the context module, plus the
// LSTM-for-GCE swap.
enum class Variant { GGce, G, CganGce, Cgan, SsaGanGce, SsaGan, SsaGanLstm };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
std::vector<std::string> variant_names();

struct TrainConfig {
    Variant variant = Variant::SsaGan;
    double lambda_c = 100.0;
    int batch_size = 32; // must be even: half real, half generated codes
    int epochs_phase1 = 250;
    int epochs_phase2 = 750;
    double lr_phase1 = 0.1;
    double lr_phase2 = 0.01;
    int m = 400;
    int d = 64;
    int noise_dim = 16;
    int fusion_width = 64;
    int trunk_width = 64;
    GateMode gate_mode = GateMode::Scalar;
    NoiseMode noise_mode = NoiseMode::Gaussian;
    bool classifier_sees_code = true;
    std::uint64_t seed = 7;
    std::uint64_t infer_seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int checkpoint_every = 0;      // 0: only at the end
    int stop_after_epoch = 0;      // 0: run the whole schedule; else stop early (interruption)
    bool freeze_generator = false; // test hook: skip the generator update

    void validate() const;

    bool is_supervised() const { return variant == Variant::GGce || variant == Variant::G; }
    bool is_semi_supervised() const {
        return variant == Variant::SsaGanGce || variant == Variant::SsaGan || variant == Variant::SsaGanLstm;
    }
    ContextKind context_kind() const;
    // the classification term weight actually applied (zero for cGAN variants)
    double effective_lambda() const { return is_semi_supervised() ? lambda_c : 0.0; }
    double lr_at(int epoch) const { return epoch <= epochs_phase1 ? lr_phase1 : lr_phase2; }
    int total_epochs() const { return epochs_phase1 + epochs_phase2; }
};

ModelConfig make_model_config(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k);

// round-trip text form stored in checkpoints and echoed to run.cfg
std::string config_to_text(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k);
void config_from_text(const std::string& text, TrainConfig& cfg, std::vector<int>& frame_shape, int& k);

// One assembled mini batch: aligned frames, labels, ground-truth codes and
// per-frame queue snapshots (each frame sees the queue state just before its
// own hidden state was pushed).
struct LabeledBatch {
    Tensor frames;     // B x features (or B x c x h x w)
    std::vector<int> labels;
    Tensor real_codes; // B x k internal form, encode(labels)
    Tensor queue_rows; // B x (m*d); undefined when the variant has no context
};

// deterministic half/half assignment: even batch positions pair with real
// codes, odd ones with generated codes
void split_real_fake(int batch_size, std::vector<int>& real_idx, std::vector<int>& fake_idx);

// loss values from raw head outputs; the graph builders below reduce to these
double d_loss_value(const std::vector<double>& p_real, const std::vector<double>& p_fake,
                    const std::vector<double>& correct_class_probs, double lambda_c);
double g_loss_value(const std::vector<double>& p_fake, const std::vector<double>& correct_class_probs,
                    double lambda_c);

// Discriminator objective: -mean ln D(x, y_real) - mean ln(1 - D(x, y_fake))
// + lambda_c * CE of the classifier head over the whole batch. Fake codes are
// generated with the current generator and treated as constants.
Tensor d_loss(const ModelParams& model, const LabeledBatch& batch, double lambda_c, Rng& noise_rng);

// Generator objective (non-saturating): -mean ln D(x, G(x,z,c)) + lambda_c *
// CE of D_c on the generated codes; the classifier gradient reaches the
// generator through the codes.
Tensor g_loss(const ModelParams& model, const LabeledBatch& batch, double lambda_c, Rng& noise_rng);

struct EpochLoss {
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double lr = 0.0;
};

class Trainer {
  public:
    Trainer(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k);

    struct StepResult {
        double d_loss = 0.0;
        double g_loss = 0.0;
    };

    // one D step (generator frozen) then one generator+context step
    // (discriminator frozen); queues are advanced by the caller
    StepResult train_step(const LabeledBatch& batch);

    void set_learning_rate(double lr);

    ModelParams& model() { return model_; }
    const ModelParams& model() const { return model_; }
    const TrainConfig& config() const { return cfg_; }
    Rng& noise_rng() { return noise_rng_; }
    const Rng& noise_rng() const { return noise_rng_; }
    AdamState& opt_d() { return opt_d_; }
    AdamState& opt_g() { return opt_g_; }
    const AdamState& opt_d() const { return opt_d_; }
    const AdamState& opt_g() const { return opt_g_; }

  private:
    TrainConfig cfg_;
    ModelParams model_;
    ParamList d_params_;
    ParamList g_params_;
    AdamState opt_d_;
    AdamState opt_g_;
    Rng noise_rng_;
};

// Full protocol: frame-ordered videos, per-video queue reset, two-phase
// learning-rate schedule, loss CSV and checkpoint in out_dir.
std::vector<EpochLoss> train_epochs(const Dataset& data, const TrainConfig& cfg, const std::string& out_dir,
                                    const std::string& resume_checkpoint = "");

// Frame-by-frame inference: context from the queue, generate a code, classify,
// push the hidden state. Deterministic given checkpoint and seed.
Prediction infer_labels(const ModelParams& model, const TrainConfig& cfg, const FrameSequence& video);

// checkpoint glue
void save_training_checkpoint(const std::string& path, const Trainer& trainer, const std::vector<int>& frame_shape,
                              int k, int epochs_completed);
Trainer load_training_checkpoint(const std::string& path, int* epochs_completed = nullptr);

} // namespace ssag
