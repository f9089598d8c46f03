#pragma once

#include <string>
#include <vector>

#include "ssag/dataset.hpp"
#include "ssag/grad_check.hpp"
#include "ssag/metrics.hpp"
#include "ssag/train.hpp"

namespace ssag {

// Command bodies behind the CLI. Each returns a process exit code:
// 0 success, 1 usage, 2 validation/format, 3 numerical failure.

struct SynthOptions {
    SynthSpec spec;
    int videos = 25;
    int frames = 300;
    int test_videos = 5;
    std::string out_dir;
};
int cmd_synth(const SynthOptions& opt);

struct TrainOptions {
    std::string data_dir;
    std::string out_dir;
    TrainConfig cfg;
    std::string resume; // checkpoint path, empty for a fresh run
    bool quiet = false;
};
int cmd_train(const TrainOptions& opt);

struct EvalOptions {
    std::string data_dir;
    std::string checkpoint;
    std::string out_dir;
    std::string split = "test";
    std::string from_predictions; // directory of prediction CSVs; skips the model
    bool include_background = false;
    bool dump_codes = false;
    bool quiet = false;
};
int cmd_eval(const EvalOptions& opt);

struct GradcheckOptions {
    double tolerance = 1e-4;
    double h = 1e-4;
    bool inject_fault = false;
    bool quiet = false;
};
int cmd_gradcheck(const GradcheckOptions& opt);

// every layer primitive, the gated context extractor (both gate modes), the
// LSTM variant, and the composed discriminator/generator objectives on a
// d=4, m=3, k=3 configuration
struct GradCheckCase {
    std::string name;
    GradCheckReport report;
};
std::vector<GradCheckCase> run_gradcheck_suite(double h, double tolerance);

struct PlotOptions {
    std::string data_dir;
    std::string predictions; // file or directory
    std::string video;       // required when predictions is a file
    std::string out;         // file or directory
};
int cmd_plot(const PlotOptions& opt);

struct SweepOptions {
    TrainOptions train;
    std::string data_dir;
    std::string out_dir;
    std::vector<int> m_values;
    std::vector<double> lambda_values;
};
int cmd_sweep(const SweepOptions& opt);

// metric table helpers shared by eval and sweep
struct EvalResult {
    std::vector<MetricRow> rows; // per video, then use mean_row()
};

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
std::string format_metrics_table(const std::vector<MetricRow>& rows);

// echo of the fully resolved configuration, for provenance
void write_run_config(const std::string& out_dir, const std::string& text);

} // namespace ssag
