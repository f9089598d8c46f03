#include "ssag/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "ssag/action_code.hpp"
#include "ssag/checkpoint.hpp"

namespace fs = std::filesystem;

namespace ssag {

Variant parse_variant(const std::string& name) {
    if (name == "g-gce") return Variant::GGce;
    if (name == "g") return Variant::G;
    if (name == "cgan-gce") return Variant::CganGce;
    if (name == "cgan") return Variant::Cgan;
    if (name == "ssa-gan-gce") return Variant::SsaGanGce;
    if (name == "ssa-gan") return Variant::SsaGan;
    if (name == "ssa-gan-lstm") return Variant::SsaGanLstm;
    std::string valid;
    for (const std::string& v : variant_names()) valid += (valid.empty() ? "" : "|") + v;
    throw config_error("unknown variant '" + name + "', expected one of " + valid);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::GGce: return "g-gce";
        case Variant::G: return "g";
        case Variant::CganGce: return "cgan-gce";
        case Variant::Cgan: return "cgan";
        case Variant::SsaGanGce: return "ssa-gan-gce";
        case Variant::SsaGan: return "ssa-gan";
        case Variant::SsaGanLstm: return "ssa-gan-lstm";
    }
    throw config_error("unknown variant value");
}

std::vector<std::string> variant_names() {
    return {"g-gce", "g", "cgan-gce", "cgan", "ssa-gan-gce", "ssa-gan", "ssa-gan-lstm"};
}

void TrainConfig::validate() const {
    if (lambda_c < 0.0) throw config_error("train config: lambda_c must be non-negative");
    if (batch_size < 2 || batch_size % 2 != 0)
        throw config_error("train config: batch size must be even and at least 2");
    if (epochs_phase1 < 0 || epochs_phase2 < 0 || total_epochs() < 1)
        throw config_error("train config: need at least one epoch");
    if (m < 0) throw config_error("train config: m must be non-negative");
    if (d < 1) throw config_error("train config: d must be positive");
    if (context_kind() != ContextKind::None && m < 1)
        throw config_error("train config: context variants need m >= 1");
}

ContextKind TrainConfig::context_kind() const {
    switch (variant) {
        case Variant::GGce:
        case Variant::CganGce:
        case Variant::SsaGanGce: return ContextKind::None;
        case Variant::SsaGanLstm: return ContextKind::Lstm;
        default: return m > 0 ? ContextKind::Gce : ContextKind::None;
    }
}

ModelConfig make_model_config(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k) {
    ModelConfig mc = default_model_config(frame_shape, k);
    mc.d = cfg.d;
    mc.m = cfg.context_kind() == ContextKind::None ? 0 : cfg.m;
    mc.noise_dim = cfg.noise_dim;
    mc.fusion_width = cfg.fusion_width;
    mc.trunk_width = cfg.trunk_width;
    mc.context = cfg.context_kind();
    mc.gate_mode = cfg.gate_mode;
    mc.noise_mode = cfg.noise_mode;
    mc.classifier_sees_code = cfg.classifier_sees_code;
    if (frame_shape.size() == 1) mc.encoder_widths = {cfg.d, cfg.d};
    return mc;
}

std::string config_to_text(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k) {
    std::ostringstream os;
    os << "variant=" << variant_name(cfg.variant) << "\n";
    os << "lambda_c=" << cfg.lambda_c << "\n";
    os << "batch_size=" << cfg.batch_size << "\n";
    os << "epochs_phase1=" << cfg.epochs_phase1 << "\n";
    os << "epochs_phase2=" << cfg.epochs_phase2 << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.lr_phase1);
    os << "lr_phase1=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.lr_phase2);
    os << "lr_phase2=" << buf << "\n";
    os << "m=" << cfg.m << "\n";
    os << "d=" << cfg.d << "\n";
    os << "noise_dim=" << cfg.noise_dim << "\n";
    os << "fusion_width=" << cfg.fusion_width << "\n";
    os << "trunk_width=" << cfg.trunk_width << "\n";
    os << "gate_mode=" << (cfg.gate_mode == GateMode::Scalar ? "scalar" : "vector") << "\n";
    os << "noise_mode=" << (cfg.noise_mode == NoiseMode::Gaussian ? "gaussian" : "dropout") << "\n";
    os << "classifier_sees_code=" << (cfg.classifier_sees_code ? 1 : 0) << "\n";
    os << "seed=" << cfg.seed << "\n";
    os << "infer_seed=" << cfg.infer_seed << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_beta1);
    os << "adam_beta1=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_beta2);
    os << "adam_beta2=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_eps);
    os << "adam_eps=" << buf << "\n";
    os << "k=" << k << "\n";
    os << "frame_shape=";
    for (std::size_t i = 0; i < frame_shape.size(); ++i) os << (i ? "x" : "") << frame_shape[i];
    os << "\n";
    return os.str();
}

void config_from_text(const std::string& text, TrainConfig& cfg, std::vector<int>& frame_shape, int& k) {
    std::istringstream is(text);
    std::string line;
    frame_shape.clear();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw validation_error("config text: expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "variant") cfg.variant = parse_variant(val);
        else if (key == "lambda_c") cfg.lambda_c = std::stod(val);
        else if (key == "batch_size") cfg.batch_size = std::stoi(val);
        else if (key == "epochs_phase1") cfg.epochs_phase1 = std::stoi(val);
        else if (key == "epochs_phase2") cfg.epochs_phase2 = std::stoi(val);
        else if (key == "lr_phase1") cfg.lr_phase1 = std::stod(val);
        else if (key == "lr_phase2") cfg.lr_phase2 = std::stod(val);
        else if (key == "m") cfg.m = std::stoi(val);
        else if (key == "d") cfg.d = std::stoi(val);
        else if (key == "noise_dim") cfg.noise_dim = std::stoi(val);
        else if (key == "fusion_width") cfg.fusion_width = std::stoi(val);
        else if (key == "trunk_width") cfg.trunk_width = std::stoi(val);
        else if (key == "gate_mode") cfg.gate_mode = (val == "vector") ? GateMode::Vector : GateMode::Scalar;
        else if (key == "noise_mode") cfg.noise_mode = (val == "dropout") ? NoiseMode::Dropout : NoiseMode::Gaussian;
        else if (key == "classifier_sees_code") cfg.classifier_sees_code = (val != "0");
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "infer_seed") cfg.infer_seed = std::stoull(val);
        else if (key == "adam_beta1") cfg.adam_beta1 = std::stod(val);
        else if (key == "adam_beta2") cfg.adam_beta2 = std::stod(val);
        else if (key == "adam_eps") cfg.adam_eps = std::stod(val);
        else if (key == "k") k = std::stoi(val);
        else if (key == "frame_shape") {
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, 'x')) frame_shape.push_back(std::stoi(tok));
        } else {
            throw validation_error("config text: unknown key '" + key + "'");
        }
    }
}

void split_real_fake(int batch_size, std::vector<int>& real_idx, std::vector<int>& fake_idx) {
    if (batch_size < 2 || batch_size % 2 != 0)
        throw contract_error("split_real_fake: batch size must be even and at least 2");
    real_idx.clear();
    fake_idx.clear();
    for (int i = 0; i < batch_size; ++i) (i % 2 == 0 ? real_idx : fake_idx).push_back(i);
}

double d_loss_value(const std::vector<double>& p_real, const std::vector<double>& p_fake,
                    const std::vector<double>& correct_class_probs, double lambda_c) {
    if (p_real.empty() || p_fake.empty()) throw contract_error("d_loss_value: empty halves");
    double lr_term = 0.0;
    for (double p : p_real) lr_term -= std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp));
    lr_term /= static_cast<double>(p_real.size());
    double lf_term = 0.0;
    for (double p : p_fake) lf_term -= std::log(1.0 - std::clamp(p, kLogClamp, 1.0 - kLogClamp));
    lf_term /= static_cast<double>(p_fake.size());
    double cls = 0.0;
    if (lambda_c > 0.0 && !correct_class_probs.empty()) {
        for (double p : correct_class_probs) cls -= std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp));
        cls /= static_cast<double>(correct_class_probs.size());
    }
    return lr_term + lf_term + lambda_c * cls;
}

double g_loss_value(const std::vector<double>& p_fake, const std::vector<double>& correct_class_probs,
                    double lambda_c) {
    if (p_fake.empty()) throw contract_error("g_loss_value: empty batch");
    double adv = 0.0;
    for (double p : p_fake) adv -= std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp));
    adv /= static_cast<double>(p_fake.size());
    double cls = 0.0;
    if (lambda_c > 0.0 && !correct_class_probs.empty()) {
        for (double p : correct_class_probs) cls -= std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp));
        cls /= static_cast<double>(correct_class_probs.size());
    }
    return adv + lambda_c * cls;
}

namespace {

// leaf row subsets of leaf tensors (assembly helpers, not differentiable)
Tensor take_rows(const Tensor& x, const std::vector<int>& rows) {
    std::vector<int> shape = x.shape();
    const std::size_t row_sz = x.size() / static_cast<std::size_t>(shape[0]);
    shape[0] = static_cast<int>(rows.size());
    std::vector<double> vals(rows.size() * row_sz);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(x.data() + static_cast<std::size_t>(rows[i]) * row_sz, row_sz, vals.data() + i * row_sz);
    return Tensor::from(std::move(shape), std::move(vals));
}

std::vector<int> take_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
    return out;
}

Tensor draw_noise(int rows, int dim, Rng& rng) {
    Tensor z = Tensor::zeros({rows, std::max(dim, 1)});
    if (dim > 0)
        for (double& v : z.values()) v = rng.gaussian();
    return z;
}

// generator forward over a whole batch, contexts included
Generator::Out run_generator(const ModelParams& model, const Tensor& frames, const Tensor& queue_rows, int rows,
                             Mode mode, Rng& noise_rng) {
    Tensor context = model.config.has_context() ? model.context_from_rows(queue_rows, rows)
                                                : Tensor::zeros({rows, model.config.d});
    Tensor z = draw_noise(rows, model.config.noise_dim, noise_rng);
    Rng* drop = &noise_rng;
    return model.generator.forward(model.config, frames, z, context, mode, drop);
}

} // namespace

Tensor d_loss(const ModelParams& model, const LabeledBatch& batch, double lambda_c, Rng& noise_rng) {
    const int b = batch.frames.dim(0);
    std::vector<int> real_idx, fake_idx;
    split_real_fake(b, real_idx, fake_idx);

    // fake codes from the frozen generator; constants for this step
    Tensor fake_frames = take_rows(batch.frames, fake_idx);
    Tensor fake_codes;
    {
        NoGradScope frozen;
        Tensor fake_queue = model.config.has_context() ? take_rows(batch.queue_rows, fake_idx) : Tensor();
        fake_codes =
            run_generator(model, fake_frames, fake_queue, static_cast<int>(fake_idx.size()), Mode::Train, noise_rng)
                .code.detach();
    }

    Tensor real_frames = take_rows(batch.frames, real_idx);
    Tensor real_codes = take_rows(batch.real_codes, real_idx);
    const std::vector<int> real_labels = take_labels(batch.labels, real_idx);
    const std::vector<int> fake_labels = take_labels(batch.labels, fake_idx);

    Discriminator::Out real_out = model.discriminator.forward(real_frames, real_codes, Mode::Train);
    Discriminator::Out fake_out = model.discriminator.forward(fake_frames, fake_codes, Mode::Train);

    Tensor loss = add(bce_loss(real_out.real_prob, std::vector<double>(real_idx.size(), 1.0)),
                      bce_loss(fake_out.real_prob, std::vector<double>(fake_idx.size(), 0.0)));
    if (lambda_c > 0.0) {
        // classification over the whole batch: both halves carry labels
        Tensor cls = scale(add(ce_loss(real_out.class_probs, real_labels), ce_loss(fake_out.class_probs, fake_labels)),
                           0.5);
        loss = add(loss, scale(cls, lambda_c));
    }
    return loss;
}

Tensor g_loss(const ModelParams& model, const LabeledBatch& batch, double lambda_c, Rng& noise_rng) {
    const int b = batch.frames.dim(0);
    Generator::Out gen = run_generator(model, batch.frames, batch.queue_rows, b, Mode::Train, noise_rng);
    Discriminator::Out d_out = model.discriminator.forward(batch.frames, gen.code, Mode::Train);
    Tensor loss = bce_loss(d_out.real_prob, std::vector<double>(static_cast<std::size_t>(b), 1.0));
    if (lambda_c > 0.0) loss = add(loss, scale(ce_loss(d_out.class_probs, batch.labels), lambda_c));
    return loss;
}

Trainer::Trainer(const TrainConfig& cfg, const std::vector<int>& frame_shape, int k)
    : cfg_(cfg), noise_rng_(cfg.seed ^ 0xA5A5A5A5DEADBEEFull) {
    cfg_.validate();
    model_ = init_params(make_model_config(cfg_, frame_shape, k), cfg_.seed);
    d_params_ = model_.discriminator_params();
    g_params_ = model_.generator_side_params();
    opt_d_ = AdamState(AdamConfig{cfg_.lr_phase1, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
    opt_g_ = AdamState(AdamConfig{cfg_.lr_phase1, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
    opt_d_.init(d_params_);
    opt_g_.init(g_params_);
}

void Trainer::set_learning_rate(double lr) {
    opt_d_.config().lr = lr;
    opt_g_.config().lr = lr;
}

Trainer::StepResult Trainer::train_step(const LabeledBatch& batch) {
    StepResult result;
    const double lambda = cfg_.effective_lambda();

    if (cfg_.is_supervised()) {
        // plain cross-entropy through a softmax layer over the generated code
        Tape tape;
        TapeScope scope(tape);
        Generator::Out gen = run_generator(model_, batch.frames, batch.queue_rows, batch.frames.dim(0), Mode::Train,
                                           noise_rng_);
        Tensor loss = ce_loss(softmax(gen.code), batch.labels);
        loss.check_finite("supervised loss");
        result.g_loss = loss.item();
        if (!cfg_.freeze_generator) {
            backward(loss);
            adam_step(g_params_, opt_g_);
        }
        return result;
    }

    { // discriminator step, generator frozen
        Tape tape;
        TapeScope scope(tape);
        Tensor loss = d_loss(model_, batch, lambda, noise_rng_);
        loss.check_finite("d_loss");
        result.d_loss = loss.item();
        backward(loss);
        adam_step(d_params_, opt_d_);
    }

    { // generator + context step, discriminator frozen
        Tape tape;
        TapeScope scope(tape);
        Tensor loss = g_loss(model_, batch, lambda, noise_rng_);
        loss.check_finite("g_loss");
        result.g_loss = loss.item();
        if (!cfg_.freeze_generator) {
            backward(loss);
            adam_step(g_params_, opt_g_);
            // the graph runs through D, so clear its incidental grads
            zero_grads(d_params_);
        }
    }
    return result;
}

namespace {

// batched eval-mode hidden states for one window of frames
std::vector<std::vector<double>> window_states(const ModelParams& model, const Tensor& frames) {
    NoGradScope ng;
    Tensor h = model.generator.hidden_state(frames, Mode::Eval);
    const int rows = h.dim(0), d = h.dim(1);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(d)));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = h.at2(i, j);
    return out;
}

Tensor frames_window(const FrameSequence& video, int t0, int count) {
    std::vector<int> shape{count};
    for (int d : video.frame_shape) shape.push_back(d);
    const std::size_t fsz = video.frame_size();
    std::vector<double> vals(static_cast<std::size_t>(count) * fsz);
    for (int i = 0; i < count; ++i) {
        const float* src = video.frames.data() + static_cast<std::size_t>(t0 + i) * fsz;
        for (std::size_t j = 0; j < fsz; ++j) vals[static_cast<std::size_t>(i) * fsz + j] = static_cast<double>(src[j]);
    }
    return Tensor::from(std::move(shape), std::move(vals));
}

std::string losses_csv_path(const std::string& out_dir) { return out_dir + "/losses.csv"; }

void append_loss_row(const std::string& out_dir, const EpochLoss& row, bool write_header) {
    const std::string path = losses_csv_path(out_dir);
    std::ofstream os(path, write_header ? std::ios::trunc : std::ios::app);
    if (!os) throw format_error(path + ": cannot open for writing");
    if (write_header) os << "epoch,d_loss,g_loss,lr\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", row.epoch, row.d_loss, row.g_loss, row.lr);
    os << buf;
}

} // namespace

std::vector<EpochLoss> train_epochs(const Dataset& data, const TrainConfig& cfg, const std::string& out_dir,
                                    const std::string& resume_checkpoint) {
    cfg.validate();
    fs::create_directories(out_dir);
    const std::vector<std::string> train_ids = data.manifest.ids_for_split("train");
    if (train_ids.empty()) throw config_error("train: dataset has no train split");

    int start_epoch = 0;
    std::unique_ptr<Trainer> trainer;
    if (!resume_checkpoint.empty()) {
        trainer = std::make_unique<Trainer>(load_training_checkpoint(resume_checkpoint, &start_epoch));
    } else {
        trainer = std::make_unique<Trainer>(cfg, data.manifest.frame_shape, data.manifest.k);
    }
    if (trainer->model().config.k != data.manifest.k)
        throw incompat_error("train: checkpoint k=" + std::to_string(trainer->model().config.k) +
                             " does not match dataset k=" + std::to_string(data.manifest.k));
    const TrainConfig& run_cfg = trainer->config(); // on resume, the checkpoint wins

    const bool has_ctx = trainer->model().config.has_context();
    const int m = trainer->model().config.m;
    const int d = trainer->model().config.d;
    ContextQueue queue(has_ctx ? m : 1, has_ctx ? d : 1);

    std::vector<EpochLoss> log;
    int last_done = start_epoch;
    for (int epoch = start_epoch + 1; epoch <= run_cfg.total_epochs(); ++epoch) {
        const double lr = run_cfg.lr_at(epoch);
        trainer->set_learning_rate(lr);
        double d_sum = 0.0, g_sum = 0.0;
        int steps = 0;

        for (std::size_t vi = 0; vi < train_ids.size(); ++vi) {
            const FrameSequence& video = data.video(train_ids[vi]);
            const int total = video.frame_count();
            const std::size_t fsz = video.frame_size();

            // walk the video in frame order with the current generator,
            // recording each frame's own queue state before its push
            std::vector<double> snapshot_rows;
            if (has_ctx) {
                queue.reset();
                snapshot_rows.resize(static_cast<std::size_t>(total) * static_cast<std::size_t>(m) * d);
                Tensor all_frames = frames_window(video, 0, total);
                const auto states = window_states(trainer->model(), all_frames);
                for (int t = 0; t < total; ++t) {
                    const auto snap = queue.concat();
                    std::copy(snap.begin(), snap.end(),
                              snapshot_rows.begin() + static_cast<std::size_t>(t) * snap.size());
                    queue.push(states[static_cast<std::size_t>(t)]);
                }
            }

            // class-diverse mini batches: a deterministic shuffle of the
            // video's frames, re-drawn every epoch
            std::vector<int> order(static_cast<std::size_t>(total));
            for (int t = 0; t < total; ++t) order[static_cast<std::size_t>(t)] = t;
            Rng shuffle_rng(run_cfg.seed ^ (0x517cc1b727220a95ull * (epoch + 1)) ^ (0x2545F4914F6CDD1Dull * (vi + 1)));
            for (int t = total - 1; t > 0; --t)
                std::swap(order[static_cast<std::size_t>(t)], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, t))]);

            int t0 = 0;
            while (t0 < total) {
                int count = std::min(run_cfg.batch_size, total - t0);
                if (count % 2 != 0) --count; // keep the half/half composition
                if (count < 2) break;

                LabeledBatch batch;
                std::vector<double> fvals(static_cast<std::size_t>(count) * fsz);
                std::vector<double> qvals;
                if (has_ctx) qvals.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(m) * d);
                batch.labels.resize(static_cast<std::size_t>(count));
                for (int i = 0; i < count; ++i) {
                    const int t = order[static_cast<std::size_t>(t0 + i)];
                    const float* src = video.frames.data() + static_cast<std::size_t>(t) * fsz;
                    for (std::size_t j = 0; j < fsz; ++j)
                        fvals[static_cast<std::size_t>(i) * fsz + j] = static_cast<double>(src[j]);
                    batch.labels[static_cast<std::size_t>(i)] = video.labels[static_cast<std::size_t>(t)];
                    if (has_ctx)
                        std::copy_n(snapshot_rows.begin() + static_cast<std::size_t>(t) * m * d,
                                    static_cast<std::size_t>(m) * d,
                                    qvals.begin() + static_cast<std::size_t>(i) * m * d);
                }
                std::vector<int> bshape{count};
                for (int dd : video.frame_shape) bshape.push_back(dd);
                batch.frames = Tensor::from(std::move(bshape), std::move(fvals));
                batch.real_codes =
                    Tensor::from({count, data.manifest.k}, encode_batch_internal(batch.labels, data.manifest.k));
                if (has_ctx) batch.queue_rows = Tensor::from({count, m * d}, std::move(qvals));

                const Trainer::StepResult step = trainer->train_step(batch);
                d_sum += step.d_loss;
                g_sum += step.g_loss;
                ++steps;
                t0 += count;
            }
        }

        EpochLoss row{epoch, steps ? d_sum / steps : 0.0, steps ? g_sum / steps : 0.0, lr};
        log.push_back(row);
        append_loss_row(out_dir, row, epoch == 1);
        last_done = epoch;
        if (run_cfg.checkpoint_every > 0 && epoch % run_cfg.checkpoint_every == 0 && epoch < run_cfg.total_epochs())
            save_training_checkpoint(out_dir + "/checkpoint.bin", *trainer, data.manifest.frame_shape,
                                     data.manifest.k, epoch);
        if (cfg.stop_after_epoch > 0 && epoch >= cfg.stop_after_epoch) break;
    }

    save_training_checkpoint(out_dir + "/checkpoint.bin", *trainer, data.manifest.frame_shape, data.manifest.k,
                             last_done);
    return log;
}

Prediction infer_labels(const ModelParams& model, const TrainConfig& cfg, const FrameSequence& video) {
    if (video.frame_shape != model.config.frame_shape)
        throw config_error("infer: video frame shape does not match the checkpoint");
    NoGradScope ng;
    const bool has_ctx = model.config.has_context();
    ContextQueue queue(has_ctx ? model.config.m : 1, has_ctx ? model.config.d : 1);
    // one noise draw per video, reused for every frame: predictions stay
    // deterministic and segments are not broken up by per-frame noise
    Rng noise_rng(cfg.infer_seed ^ 0xA5A5A5A5DEADBEEFull);
    Tensor fixed_noise = draw_noise(1, model.config.noise_dim, noise_rng);

    Prediction pred;
    pred.k = model.config.k;
    const int total = video.frame_count();
    pred.labels.reserve(static_cast<std::size_t>(total));
    pred.probs.reserve(static_cast<std::size_t>(total) * static_cast<std::size_t>(pred.k));

    for (int t = 0; t < total; ++t) {
        Tensor frame = frames_window(video, t, 1);
        Tensor context = Tensor::zeros({1, model.config.d});
        if (has_ctx) {
            Tensor queue_rows = Tensor::from({1, model.config.m * model.config.d}, queue.concat());
            context = model.context_from_rows(queue_rows, 1);
        }
        Generator::Out gen = model.generator.forward(model.config, frame, fixed_noise, context, Mode::Eval, &noise_rng);

        Tensor probs;
        if (cfg.is_semi_supervised()) {
            probs = model.discriminator.forward(frame, gen.code, Mode::Eval).class_probs;
        } else {
            // supervised and cGAN variants classify through a softmax layer
            // appended to the generated code
            probs = softmax(gen.code);
        }
        int best = 0;
        for (int j = 1; j < pred.k; ++j)
            if (probs.at2(0, j) > probs.at2(0, best)) best = j;
        pred.labels.push_back(best);
        for (int j = 0; j < pred.k; ++j) pred.probs.push_back(probs.at2(0, j));
        for (int j = 0; j < pred.k; ++j) pred.codes.push_back(gen.code.at2(0, j));

        if (has_ctx) {
            std::vector<double> s(static_cast<std::size_t>(model.config.d));
            for (int j = 0; j < model.config.d; ++j) s[static_cast<std::size_t>(j)] = gen.hidden.at2(0, j);
            queue.push(s);
        }
    }
    return pred;
}

void save_training_checkpoint(const std::string& path, const Trainer& trainer, const std::vector<int>& frame_shape,
                              int k, int epochs_completed) {
    CheckpointBlob blob;
    blob.config_text = config_to_text(trainer.config(), frame_shape, k);
    blob.epochs_completed = static_cast<std::uint32_t>(epochs_completed);
    blob.rng_state = trainer.noise_rng().save_state();

    for (const NamedParam& p : trainer.model().all_params())
        blob.tensors.emplace_back(p.name, std::make_pair(p.tensor.shape(), p.tensor.values()));
    for (const NamedBuffer& b : trainer.model().all_buffers()) {
        blob.buffers.emplace_back(b.name + ".mean", b.state->run_mean);
        blob.buffers.emplace_back(b.name + ".var", b.state->run_var);
    }
    CheckpointBlob::OptGroup gd{trainer.opt_d().step_count(), trainer.opt_d().moments1(), trainer.opt_d().moments2()};
    CheckpointBlob::OptGroup gg{trainer.opt_g().step_count(), trainer.opt_g().moments1(), trainer.opt_g().moments2()};
    blob.optimizers.emplace("d", std::move(gd));
    blob.optimizers.emplace("g", std::move(gg));
    checkpoint_write(path, blob);
}

Trainer load_training_checkpoint(const std::string& path, int* epochs_completed) {
    CheckpointBlob blob = checkpoint_read(path);
    TrainConfig cfg;
    std::vector<int> frame_shape;
    int k = 0;
    config_from_text(blob.config_text, cfg, frame_shape, k);
    if (k < 2 || frame_shape.empty()) throw incompat_error(path + ": checkpoint config lacks k or frame shape");

    Trainer trainer(cfg, frame_shape, k);
    std::map<std::string, std::pair<std::vector<int>, std::vector<double>>> by_name(blob.tensors.begin(),
                                                                                    blob.tensors.end());
    ParamList params = trainer.model().all_params();
    for (NamedParam& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw incompat_error(path + ": checkpoint missing parameter '" + p.name + "'");
        if (it->second.first != p.tensor.shape())
            throw incompat_error(path + ": parameter '" + p.name + "' has shape " + shape_str(it->second.first) +
                                 ", expected " + shape_str(p.tensor.shape()));
        p.tensor.values() = it->second.second;
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw incompat_error(path + ": checkpoint has unexpected parameter '" + by_name.begin()->first + "'");

    std::map<std::string, std::vector<double>> buf_by_name(blob.buffers.begin(), blob.buffers.end());
    for (const NamedBuffer& b : trainer.model().all_buffers()) {
        auto mit = buf_by_name.find(b.name + ".mean");
        auto vit = buf_by_name.find(b.name + ".var");
        if (mit == buf_by_name.end() || vit == buf_by_name.end())
            throw incompat_error(path + ": checkpoint missing running stats for '" + b.name + "'");
        b.state->run_mean = mit->second;
        b.state->run_var = vit->second;
    }

    auto load_opt = [&](const char* name, AdamState& opt) {
        auto it = blob.optimizers.find(name);
        if (it == blob.optimizers.end()) throw incompat_error(path + ": checkpoint missing optimizer '" + std::string(name) + "'");
        opt.moments1() = it->second.m;
        opt.moments2() = it->second.v;
        opt.set_step_count(it->second.step_count);
    };
    load_opt("d", trainer.opt_d());
    load_opt("g", trainer.opt_g());

    trainer.noise_rng().load_state(blob.rng_state);
    if (epochs_completed) *epochs_completed = static_cast<int>(blob.epochs_completed);
    return trainer;
}

} // namespace ssag
