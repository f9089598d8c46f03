#include "ssag/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ssag/action_code.hpp"
#include "ssag/svg_plot.hpp"

namespace fs = std::filesystem;

namespace ssag {

void write_run_config(const std::string& out_dir, const std::string& text) {
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/run.cfg");
    if (!os) throw format_error(out_dir + "/run.cfg: cannot open for writing");
    os << text;
}

int cmd_synth(const SynthOptions& opt) {
    if (opt.out_dir.empty()) throw config_error("synth: --out is required");
    Dataset ds = synth_generate(opt.spec, opt.videos, opt.frames, opt.test_videos);
    write_dataset(opt.out_dir, ds);
    std::ostringstream echo;
    echo << "classes=" << opt.spec.classes << "\nfeature_dim=" << opt.spec.feature_dim << "\nseparation="
         << opt.spec.separation << "\nnoise=" << opt.spec.noise << "\nseg_min=" << opt.spec.seg_min
         << "\nseg_max=" << opt.spec.seg_max << "\nbg_prob=" << opt.spec.background_prob << "\nbg_min="
         << opt.spec.bg_min << "\nbg_max=" << opt.spec.bg_max << "\nhistory_dependence="
         << (opt.spec.history_dependence ? 1 : 0) << "\nseed=" << opt.spec.seed << "\nvideos=" << opt.videos
         << "\nframes=" << opt.frames << "\ntest_videos=" << opt.test_videos << "\n";
    write_run_config(opt.out_dir, echo.str());
    std::cout << "wrote " << ds.videos.size() << " videos (" << opt.frames << " frames each, k=" << ds.manifest.k
              << ") to " << opt.out_dir << "\n";
    return 0;
}

int cmd_train(const TrainOptions& opt) {
    if (opt.data_dir.empty()) throw config_error("train: --data is required");
    if (opt.out_dir.empty()) throw config_error("train: --out is required");
    Dataset ds = read_dataset(opt.data_dir);
    TrainConfig cfg = opt.cfg;
    cfg.validate();

    // echoed with command-line key names, so `train --config run.cfg`
    // reproduces this run
    std::ostringstream echo;
    char buf[64];
    echo << "data=" << opt.data_dir << "\n";
    echo << "out=" << opt.out_dir << "\n";
    echo << "variant=" << variant_name(cfg.variant) << "\n";
    echo << "lambda-c=" << cfg.lambda_c << "\n";
    echo << "batch=" << cfg.batch_size << "\n";
    echo << "m=" << cfg.m << "\n";
    echo << "d=" << cfg.d << "\n";
    echo << "noise-dim=" << cfg.noise_dim << "\n";
    echo << "seed=" << cfg.seed << "\n";
    echo << "infer-seed=" << cfg.infer_seed << "\n";
    echo << "epochs-phase1=" << cfg.epochs_phase1 << "\n";
    echo << "epochs-phase2=" << cfg.epochs_phase2 << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.lr_phase1);
    echo << "lr1=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.lr_phase2);
    echo << "lr2=" << buf << "\n";
    if (cfg.checkpoint_every > 0) echo << "checkpoint-every=" << cfg.checkpoint_every << "\n";
    if (cfg.gate_mode == GateMode::Vector) echo << "vector-gate=1\n";
    if (cfg.noise_mode == NoiseMode::Dropout) echo << "dropout-noise=1\n";
    if (!cfg.classifier_sees_code) echo << "classifier-frame-only=1\n";
    echo << "# dataset: k=" << ds.manifest.k << ", frame shape ";
    for (std::size_t i = 0; i < ds.manifest.frame_shape.size(); ++i)
        echo << (i ? "x" : "") << ds.manifest.frame_shape[i];
    echo << "\n";
    write_run_config(opt.out_dir, echo.str());

    if (!opt.quiet) {
        ModelParams probe = init_params(make_model_config(cfg, ds.manifest.frame_shape, ds.manifest.k), cfg.seed);
        std::cout << "variant " << variant_name(cfg.variant) << ", " << probe.trainable_parameter_count()
                  << " trainable parameters\n";
    }
    const auto log = train_epochs(ds, cfg, opt.out_dir, opt.resume);
    if (!opt.quiet) {
        if (!log.empty()) {
            const EpochLoss& last = log.back();
            std::cout << "epoch " << last.epoch << ": d_loss " << last.d_loss << ", g_loss " << last.g_loss << "\n";
        }
        std::cout << "checkpoint: " << opt.out_dir << "/checkpoint.bin\n";
    }
    return 0;
}

namespace {

MetricRow metrics_for_video(const std::string& id, const std::vector<int>& pred_labels,
                            const std::vector<double>& probs, int k, const std::vector<int>& gt,
                            bool include_background) {
    MetricRow row;
    row.video = id;
    row.accuracy = frame_accuracy(pred_labels, gt);
    row.f1_10 = f1_at_k(pred_labels, gt, 0.10, include_background);
    row.f1_25 = f1_at_k(pred_labels, gt, 0.25, include_background);
    row.f1_50 = f1_at_k(pred_labels, gt, 0.50, include_background);
    row.edit = edit_score(pred_labels, gt, include_background);
    const auto dets = detections_from_prediction(pred_labels, probs, k, include_background);
    row.map = map_mid({dets}, {extract_segments(gt)}, include_background);
    return row;
}

} // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    os << "video,accuracy,f1@10,f1@25,f1@50,edit,map_mid\n";
    char buf[256];
    for (const MetricRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.video.c_str(), r.accuracy, r.f1_10,
                      r.f1_25, r.f1_50, r.edit, r.map);
        os << buf;
    }
}

std::string format_metrics_table(const std::vector<MetricRow>& rows) {
    std::string out = "video          accuracy   f1@10   f1@25   f1@50    edit  map_mid\n";
    char buf[256];
    for (const MetricRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-14s %8.2f %7.2f %7.2f %7.2f %7.2f %8.2f\n", r.video.c_str(), r.accuracy,
                      r.f1_10, r.f1_25, r.f1_50, r.edit, r.map);
        out += buf;
    }
    return out;
}

int cmd_eval(const EvalOptions& opt) {
    if (opt.data_dir.empty()) throw config_error("eval: --data is required");
    Dataset ds = read_dataset(opt.data_dir);
    const auto ids = ds.manifest.ids_for_split(opt.split);
    if (ids.empty()) throw config_error("eval: dataset has no '" + opt.split + "' split");

    std::vector<MetricRow> rows;

    if (!opt.from_predictions.empty()) {
        for (const std::string& id : ids) {
            const Prediction pred = read_predictions(opt.from_predictions + "/" + id + ".csv");
            const FrameSequence& video = ds.video(id);
            if (pred.labels.size() != video.labels.size())
                throw validation_error("eval: prediction length for '" + id + "' does not match the video");
            rows.push_back(metrics_for_video(id, pred.labels, pred.probs, pred.k, video.labels,
                                             opt.include_background));
        }
    } else {
        if (opt.checkpoint.empty()) throw config_error("eval: --checkpoint is required (or --from-predictions)");
        Trainer trainer = load_training_checkpoint(opt.checkpoint);
        if (trainer.model().config.k != ds.manifest.k)
            throw incompat_error("eval: checkpoint k=" + std::to_string(trainer.model().config.k) +
                                 " does not match dataset k=" + std::to_string(ds.manifest.k));
        if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir + "/predictions");
        if (opt.dump_codes && !opt.out_dir.empty()) fs::create_directories(opt.out_dir + "/codes");
        for (const std::string& id : ids) {
            const FrameSequence& video = ds.video(id);
            const Prediction pred = infer_labels(trainer.model(), trainer.config(), video);
            if (!opt.out_dir.empty()) {
                write_predictions(opt.out_dir + "/predictions/" + id + ".csv", pred);
                if (opt.dump_codes) write_codes(opt.out_dir + "/codes/" + id + ".csv", pred);
            }
            rows.push_back(metrics_for_video(id, pred.labels, pred.probs, pred.k, video.labels,
                                             opt.include_background));
        }
    }

    rows.push_back(mean_row(std::vector<MetricRow>(rows.begin(), rows.end())));
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        write_metrics_csv(opt.out_dir + "/metrics.csv", rows);
        std::ostringstream echo;
        echo << "data_dir=" << opt.data_dir << "\nsplit=" << opt.split << "\ninclude_background="
             << (opt.include_background ? 1 : 0) << "\n";
        if (!opt.from_predictions.empty()) echo << "from_predictions=" << opt.from_predictions << "\n";
        else echo << "checkpoint=" << opt.checkpoint << "\n";
        // a shared out dir keeps the training echo as run.cfg
        std::ofstream es(opt.out_dir + (fs::exists(opt.out_dir + "/run.cfg") ? "/eval.cfg" : "/run.cfg"));
        es << echo.str();
    }
    if (!opt.quiet) std::cout << format_metrics_table(rows);
    return 0;
}

// ---- gradient-check suite ----------------------------------------------

namespace {

Tensor probe_sum(const Tensor& out, const Tensor& probe) { return sum(mul(out, probe)); }

Tensor random_leaf(std::vector<int> shape, Rng& rng, bool requires_grad, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = scale * rng.gaussian();
    return t;
}

struct TinySetup {
    TrainConfig cfg;
    std::vector<int> frame_shape{5};
    int k = 3;

    TinySetup() {
        cfg.variant = Variant::SsaGan;
        cfg.lambda_c = 100.0;
        cfg.batch_size = 4;
        cfg.m = 3;
        cfg.d = 4;
        cfg.noise_dim = 2;
        cfg.fusion_width = 6;
        cfg.trunk_width = 6;
        cfg.seed = 11;
    }
};

LabeledBatch tiny_batch(const ModelParams& model, int b, int k, Rng& rng) {
    LabeledBatch batch;
    batch.frames = random_leaf({b, model.config.frame_shape[0]}, rng, false);
    batch.labels.resize(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) batch.labels[static_cast<std::size_t>(i)] = rng.uniform_int(0, k - 1);
    batch.real_codes = Tensor::from({b, k}, encode_batch_internal(batch.labels, k));
    if (model.config.has_context())
        batch.queue_rows = random_leaf({b, model.config.m * model.config.d}, rng, false, 0.5);
    return batch;
}

} // namespace

std::vector<GradCheckCase> run_gradcheck_suite(double h, double tolerance) {
    std::vector<GradCheckCase> cases;
    auto check = [&](const std::string& name, const std::function<Tensor()>& f, ParamList params) {
        cases.push_back({name, grad_check(f, params, h, tolerance)});
    };

    Rng rng(2024);

    { // affine
        Tensor x = random_leaf({3, 4}, rng, true);
        Tensor W = random_leaf({4, 5}, rng, true, 0.5);
        Tensor b = random_leaf({5}, rng, true, 0.1);
        Tensor probe = random_leaf({3, 5}, rng, false);
        ParamList params{{"x", x}, {"W", W}, {"b", b}};
        check("affine", [=]() { return probe_sum(affine(x, W, b), probe); }, params);
    }
    { // conv2d
        Tensor x = random_leaf({2, 2, 5, 5}, rng, true);
        Tensor kern = random_leaf({3, 2, 3, 3}, rng, true, 0.4);
        Tensor probe = random_leaf({2, 3, 3, 3}, rng, false);
        ParamList params{{"x", x}, {"kernel", kern}};
        check("conv2d", [=]() { return probe_sum(conv2d(x, kern, 2, 1), probe); }, params);
    }
    { // batch_norm, train and eval, 2-D
        Tensor x = random_leaf({4, 3}, rng, true);
        Tensor gamma = random_leaf({3}, rng, true, 0.5);
        Tensor beta = random_leaf({3}, rng, true, 0.2);
        Tensor probe = random_leaf({4, 3}, rng, false);
        ParamList params{{"x", x}, {"gamma", gamma}, {"beta", beta}};
        auto state = std::make_shared<BnState>(3);
        check("batch_norm-train",
              [=]() { return probe_sum(batch_norm(x, gamma, beta, *state, Mode::Train), probe); }, params);
        auto estate = std::make_shared<BnState>(3);
        for (int j = 0; j < 3; ++j) {
            estate->run_mean[static_cast<std::size_t>(j)] = 0.1 * j;
            estate->run_var[static_cast<std::size_t>(j)] = 1.0 + 0.2 * j;
        }
        check("batch_norm-eval",
              [=]() { return probe_sum(batch_norm(x, gamma, beta, *estate, Mode::Eval), probe); }, params);
    }
    { // batch_norm over channels of an image batch
        Tensor x = random_leaf({2, 3, 4, 4}, rng, true);
        Tensor gamma = random_leaf({3}, rng, true, 0.5);
        Tensor beta = random_leaf({3}, rng, true, 0.2);
        Tensor probe = random_leaf({2, 3, 4, 4}, rng, false);
        ParamList params{{"x", x}, {"gamma", gamma}, {"beta", beta}};
        auto state = std::make_shared<BnState>(3);
        check("batch_norm-conv",
              [=]() { return probe_sum(batch_norm(x, gamma, beta, *state, Mode::Train), probe); }, params);
    }
    { // activations; relu inputs kept away from the kink
        Tensor x = random_leaf({4, 6}, rng, true);
        for (double& v : x.values())
            if (std::fabs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
        Tensor probe = random_leaf({4, 6}, rng, false);
        ParamList params{{"x", x}};
        check("relu", [=]() { return probe_sum(relu(x), probe); }, params);
        check("tanh", [=]() { return probe_sum(tanh(x), probe); }, params);
        check("sigmoid", [=]() { return probe_sum(sigmoid(x), probe); }, params);
        check("softmax", [=]() { return probe_sum(softmax(x), probe); }, params);
    }
    { // dropout with a re-seeded mask so both finite-difference sides agree
        Tensor x = random_leaf({4, 6}, rng, true);
        Tensor probe = random_leaf({4, 6}, rng, false);
        ParamList params{{"x", x}};
        check("dropout", [=]() {
            Rng mask_rng(99);
            return probe_sum(dropout(x, 0.5, mask_rng, Mode::Train), probe);
        }, params);
    }
    { // losses through their squashing heads
        Tensor logits = random_leaf({8, 1}, rng, true);
        std::vector<double> targets;
        for (int i = 0; i < 8; ++i) targets.push_back(i % 2 == 0 ? 1.0 : 0.0);
        ParamList params{{"logits", logits}};
        check("bce_loss", [=]() { return bce_loss(sigmoid(logits), targets); }, params);

        Tensor clog = random_leaf({6, 3}, rng, true);
        std::vector<int> labels;
        for (int i = 0; i < 6; ++i) labels.push_back(i % 3);
        ParamList cparams{{"logits", clog}};
        check("ce_loss", [=]() { return ce_loss(softmax(clog), labels); }, cparams);
    }
    { // gated context extractor, both gate modes, including the stored states
        Rng init_rng(5);
        GceParams gce = init_gce(3, 4, GateMode::Scalar, init_rng);
        Tensor queue_rows = random_leaf({2, 12}, rng, true, 0.5);
        Tensor probe = random_leaf({2, 4}, rng, false);
        ParamList params = gce.params();
        params.push_back({"entries", queue_rows});
        check("gce-scalar", [=]() { return probe_sum(gce_forward_rows(queue_rows, gce), probe); }, params);

        GceParams gcev = init_gce(3, 4, GateMode::Vector, init_rng);
        ParamList vparams = gcev.params();
        vparams.push_back({"entries", queue_rows});
        check("gce-vector", [=]() { return probe_sum(gce_forward_rows(queue_rows, gcev), probe); }, vparams);
    }
    { // LSTM context over the queue
        Rng init_rng(6);
        LstmParams lstm = init_lstm(4, init_rng);
        Tensor queue_rows = random_leaf({2, 12}, rng, true, 0.5);
        Tensor probe = random_leaf({2, 4}, rng, false);
        ParamList params = lstm.params();
        params.push_back({"entries", queue_rows});
        check("lstm", [=]() { return probe_sum(lstm_context_rows(queue_rows, lstm, 3), probe); }, params);
    }
    { // composed objectives on the tiny configuration
        TinySetup tiny;
        auto model = std::make_shared<ModelParams>(
            init_params(make_model_config(tiny.cfg, tiny.frame_shape, tiny.k), tiny.cfg.seed));
        Rng batch_rng(31);
        auto batch = std::make_shared<LabeledBatch>(tiny_batch(*model, tiny.cfg.batch_size, tiny.k, batch_rng));

        ParamList d_params = model->discriminator_params();
        check("d_loss", [=]() {
            Rng noise(17);
            return d_loss(*model, *batch, 100.0, noise);
        }, d_params);

        ParamList all_params = model->all_params();
        check("g_loss", [=]() {
            Rng noise(17);
            return g_loss(*model, *batch, 100.0, noise);
        }, all_params);
    }
    return cases;
}

int cmd_gradcheck(const GradcheckOptions& opt) {
    debug_inject_backward_fault(opt.inject_fault);
    const auto cases = run_gradcheck_suite(opt.h, opt.tolerance);
    debug_inject_backward_fault(false);
    bool all_pass = true;
    for (const GradCheckCase& c : cases) {
        all_pass = all_pass && c.report.pass;
        if (!opt.quiet) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "gradcheck %-16s max_rel_err=%.3e %s\n", c.name.c_str(),
                          c.report.max_relative_error, c.report.pass ? "pass" : "FAIL");
            std::cout << buf;
        }
    }
    if (!all_pass) {
        std::cerr << "gradient check failed\n";
        return 3;
    }
    return 0;
}

int cmd_plot(const PlotOptions& opt) {
    if (opt.data_dir.empty()) throw config_error("plot: --data is required");
    if (opt.predictions.empty()) throw config_error("plot: --predictions is required");
    if (opt.out.empty()) throw config_error("plot: --out is required");
    Dataset ds = read_dataset(opt.data_dir);

    auto plot_one = [&](const std::string& id, const std::string& pred_path, const std::string& out_path) {
        const Prediction pred = read_predictions(pred_path);
        const FrameSequence& video = ds.video(id);
        if (pred.labels.size() != video.labels.size())
            throw validation_error("plot: prediction length for '" + id + "' does not match the video");
        write_timeline_svg(out_path, video.labels, pred.labels, ds.manifest.class_names, id);
    };

    if (fs::is_directory(opt.predictions)) {
        fs::create_directories(opt.out);
        std::vector<std::string> stems;
        for (const auto& entry : fs::directory_iterator(opt.predictions))
            if (entry.path().extension() == ".csv") stems.push_back(entry.path().stem().string());
        std::sort(stems.begin(), stems.end());
        for (const std::string& id : stems)
            plot_one(id, opt.predictions + "/" + id + ".csv", opt.out + "/" + id + ".svg");
        std::cout << "wrote " << stems.size() << " plots to " << opt.out << "\n";
        return 0;
    }
    if (opt.video.empty()) throw config_error("plot: --video is required with a single prediction file");
    plot_one(opt.video, opt.predictions, opt.out);
    std::cout << "wrote " << opt.out << "\n";
    return 0;
}

int cmd_sweep(const SweepOptions& opt) {
    if (opt.m_values.empty() || opt.lambda_values.empty())
        throw config_error("sweep: need at least one m and one lambda value");
    fs::create_directories(opt.out_dir);
    const std::string summary_path = opt.out_dir + "/summary.csv";
    std::ofstream summary(summary_path);
    if (!summary) throw format_error(summary_path + ": cannot open for writing");
    summary << "m,lambda_c,accuracy,f1@10,f1@25,f1@50,edit,map_mid\n";

    for (int m : opt.m_values) {
        for (double lambda : opt.lambda_values) {
            char run_name[64];
            std::snprintf(run_name, sizeof(run_name), "m%03d_l%g", m, lambda);
            const std::string run_dir = opt.out_dir + "/" + run_name;

            TrainOptions t = opt.train;
            t.data_dir = opt.data_dir;
            t.out_dir = run_dir;
            t.cfg.m = m;
            t.cfg.lambda_c = lambda;
            t.quiet = true;
            cmd_train(t);

            EvalOptions e;
            e.data_dir = opt.data_dir;
            e.checkpoint = run_dir + "/checkpoint.bin";
            e.out_dir = run_dir;
            e.quiet = true;
            cmd_eval(e);

            // pull the mean row back out of the run's metrics.csv
            std::ifstream ms(run_dir + "/metrics.csv");
            std::string line, mean_line;
            while (std::getline(ms, line))
                if (line.rfind("mean,", 0) == 0) mean_line = line;
            if (mean_line.empty()) throw validation_error(run_dir + "/metrics.csv: no mean row");
            summary << m << "," << lambda << mean_line.substr(4) << "\n";
            std::cout << "sweep " << run_name << ": " << mean_line << "\n";
        }
    }
    std::cout << "summary: " << summary_path << "\n";
    return 0;
}

} // namespace ssag
