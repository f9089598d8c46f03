#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssag/commands.hpp"

using namespace ssag;

namespace {

// Flat key=value config support: strip `--config <file>` from the argument
// list and append `--key=value` for every file entry the command line did
// not set itself, so explicit flags always win.
void expand_config_arg(std::vector<std::string>& args) {
    std::string path;
    for (auto it = args.begin(); it != args.end();) {
        if (*it == "--config") {
            if (std::next(it) == args.end()) throw config_error("--config needs a file path");
            path = *std::next(it);
            it = args.erase(it, it + 2);
        } else if (it->rfind("--config=", 0) == 0) {
            path = it->substr(9);
            it = args.erase(it);
        } else {
            ++it;
        }
    }
    if (path.empty()) return;
    std::ifstream is(path);
    if (!is) throw config_error("config file '" + path + "': cannot open");
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error(path + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        bool present = false;
        for (const std::string& a : args)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) present = true;
        if (!present) args.push_back("--" + key + "=" + line.substr(eq + 1));
    }
}

// variant flag shared by train and sweep
void add_train_flags(CLI::App* cmd, TrainOptions& opt, std::string& variant, int& total_epochs) {
    cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
    cmd->add_option("--out", opt.out_dir, "output directory")->required();
    cmd->add_option("--variant", variant,
                    "model variant: g-gce|g|cgan-gce|cgan|ssa-gan-gce|ssa-gan|ssa-gan-lstm");
    cmd->add_option("--lambda-c", opt.cfg.lambda_c, "classification loss weight");
    cmd->add_option("--batch", opt.cfg.batch_size, "mini-batch size (even)");
    cmd->add_option("--m", opt.cfg.m, "context queue capacity");
    cmd->add_option("--d", opt.cfg.d, "hidden state dimension");
    cmd->add_option("--noise-dim", opt.cfg.noise_dim, "noise vector dimension");
    cmd->add_option("--seed", opt.cfg.seed, "training seed");
    cmd->add_option("--infer-seed", opt.cfg.infer_seed, "inference noise seed");
    cmd->add_option("--epochs", total_epochs,
                    "total epochs; the first quarter runs at the phase-1 learning rate");
    cmd->add_option("--epochs-phase1", opt.cfg.epochs_phase1, "epochs at the initial learning rate");
    cmd->add_option("--epochs-phase2", opt.cfg.epochs_phase2, "epochs at the reduced learning rate");
    cmd->add_option("--lr1", opt.cfg.lr_phase1, "phase-1 learning rate");
    cmd->add_option("--lr2", opt.cfg.lr_phase2, "phase-2 learning rate");
    cmd->add_option("--checkpoint-every", opt.cfg.checkpoint_every, "also checkpoint every N epochs");
    cmd->add_option("--resume", opt.resume, "resume from a checkpoint");
    cmd->add_flag("--vector-gate",
                  [&opt](std::int64_t) { opt.cfg.gate_mode = GateMode::Vector; },
                  "use a full gate vector per queue slot");
    cmd->add_flag("--dropout-noise",
                  [&opt](std::int64_t) { opt.cfg.noise_mode = NoiseMode::Dropout; },
                  "replace the explicit noise vector with dropout");
    cmd->add_flag("--classifier-frame-only",
                  [&opt](std::int64_t) { opt.cfg.classifier_sees_code = false; },
                  "classifier head reads the frame encoding only");
}

// desk-scale defaults for the CLI; library defaults keep the full-scale
// schedule (m=400, 250+750 epochs at 0.1/0.01)
void desk_defaults(TrainConfig& cfg) {
    cfg.m = 16;
    cfg.epochs_phase1 = 20;
    cfg.epochs_phase2 = 60;
    cfg.lr_phase1 = 0.002;
    cfg.lr_phase2 = 0.0002;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised action GAN for frame-wise action segmentation"};
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--classes", synth.spec.classes, "action classes (background is added)");
    synth_cmd->add_option("--dim", synth.spec.feature_dim, "feature dimension");
    synth_cmd->add_option("--videos", synth.videos, "total video count")->required();
    synth_cmd->add_option("--frames", synth.frames, "frames per video")->required();
    synth_cmd->add_option("--test-videos", synth.test_videos, "videos assigned to the test split");
    synth_cmd->add_option("--seed", synth.spec.seed, "generator seed");
    synth_cmd->add_option("--separation", synth.spec.separation, "distance between class means");
    synth_cmd->add_option("--noise", synth.spec.noise, "emission noise sigma");
    synth_cmd->add_option("--seg-min", synth.spec.seg_min, "minimum segment duration");
    synth_cmd->add_option("--seg-max", synth.spec.seg_max, "maximum segment duration");
    synth_cmd->add_option("--bg-prob", synth.spec.background_prob, "background insertion probability");
    synth_cmd->add_option("--bg-min", synth.spec.bg_min, "minimum background insertion length");
    synth_cmd->add_option("--bg-max", synth.spec.bg_max, "maximum background insertion length");
    synth_cmd->add_flag("--history-dependence", synth.spec.history_dependence,
                        "alias two classes so only context separates them");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

    // train
    TrainOptions train;
    desk_defaults(train.cfg);
    std::string train_variant = "ssa-gan";
    int train_total_epochs = 0;
    auto* train_cmd = app.add_subcommand("train", "train a model variant");
    add_train_flags(train_cmd, train, train_variant, train_total_epochs);

    // eval
    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or stored predictions");
    eval_cmd->add_option("--data", eval.data_dir, "dataset directory")->required();
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "trained checkpoint");
    eval_cmd->add_option("--out", eval.out_dir, "output directory for predictions and metrics");
    eval_cmd->add_option("--split", eval.split, "dataset split to evaluate");
    eval_cmd->add_option("--from-predictions", eval.from_predictions,
                         "recompute metrics from a predictions directory, no model needed");
    eval_cmd->add_flag("--include-background", eval.include_background,
                       "count background segments in the segmental metrics");
    eval_cmd->add_flag("--dump-codes", eval.dump_codes, "also write generated action codes as byte rows");

    // gradcheck
    GradcheckOptions gradcheck;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks for every backward rule");
    gc_cmd->add_option("--tolerance", gradcheck.tolerance, "relative error tolerance");
    gc_cmd->add_option("--step", gradcheck.h, "central difference step");
    gc_cmd->add_flag("--inject-fault", gradcheck.inject_fault, "corrupt one backward rule (negative control)")
        ->group("");

    // plot
    PlotOptions plot;
    auto* plot_cmd = app.add_subcommand("plot", "timeline SVG of ground truth vs prediction");
    plot_cmd->add_option("--data", plot.data_dir, "dataset directory")->required();
    plot_cmd->add_option("--predictions", plot.predictions, "prediction CSV file or directory")->required();
    plot_cmd->add_option("--video", plot.video, "video id (single-file mode)");
    plot_cmd->add_option("--out", plot.out, "output SVG file or directory")->required();

    // sweep
    SweepOptions sweep;
    desk_defaults(sweep.train.cfg);
    std::string sweep_variant = "ssa-gan";
    auto* sweep_cmd = app.add_subcommand("sweep", "grid over m and lambda_c with a summary CSV");
    sweep_cmd->add_option("--data", sweep.data_dir, "dataset directory")->required();
    sweep_cmd->add_option("--out", sweep.out_dir, "output directory")->required();
    sweep_cmd->add_option("--m-values", sweep.m_values, "queue sizes to try")->required()->delimiter(',');
    sweep_cmd->add_option("--lambda-values", sweep.lambda_values, "lambda_c values to try")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--variant", sweep_variant, "model variant");
    sweep_cmd->add_option("--batch", sweep.train.cfg.batch_size, "mini-batch size (even)");
    sweep_cmd->add_option("--seed", sweep.train.cfg.seed, "training seed");
    sweep_cmd->add_option("--epochs-phase1", sweep.train.cfg.epochs_phase1, "epochs at the initial learning rate");
    sweep_cmd->add_option("--epochs-phase2", sweep.train.cfg.epochs_phase2, "epochs at the reduced learning rate");
    sweep_cmd->add_option("--lr1", sweep.train.cfg.lr_phase1, "phase-1 learning rate");
    sweep_cmd->add_option("--lr2", sweep.train.cfg.lr_phase2, "phase-2 learning rate");

    app.footer("Every subcommand also accepts --config <file> with key=value lines (a run.cfg);\n"
               "explicit flags override values from the file.");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        expand_config_arg(args);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (train_cmd->parsed()) {
            try {
                train.cfg.variant = parse_variant(train_variant);
            } catch (const config_error& e) {
                std::cerr << e.what() << "\n";
                return 1; // unknown variant is a usage error
            }
            if (train_total_epochs > 0) {
                train.cfg.epochs_phase1 = train_total_epochs / 4;
                train.cfg.epochs_phase2 = train_total_epochs - train.cfg.epochs_phase1;
            }
            if (train.cfg.variant == Variant::Cgan || train.cfg.variant == Variant::CganGce)
                train.cfg.lambda_c = 0.0; // conditional GAN drops the classification term
            return cmd_train(train);
        }
        if (eval_cmd->parsed()) return cmd_eval(eval);
        if (gc_cmd->parsed()) return cmd_gradcheck(gradcheck);
        if (plot_cmd->parsed()) return cmd_plot(plot);
        if (sweep_cmd->parsed()) {
            try {
                sweep.train.cfg.variant = parse_variant(sweep_variant);
            } catch (const config_error& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            return cmd_sweep(sweep);
        }
    } catch (const eval_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
