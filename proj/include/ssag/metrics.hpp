#pragma once

#include <string>
#include <vector>

#include "ssag/errors.hpp"

namespace ssag {

inline constexpr int kBackgroundClass = 0;

// maximal run of one class, frame range inclusive
struct Segment {
    int cls = 0;
    int start = 0;
    int end = 0;
};

struct Detection {
    int cls = 0;
    int start = 0;
    int end = 0;
    double score = 0.0;
};

std::vector<Segment> extract_segments(const std::vector<int>& labels);
std::vector<int> expand_segments(const std::vector<Segment>& segments);

// 100 * matching frames / total frames
double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

// Segmental F1 at IoU threshold tau. Predicted segments claim, in temporal
// order, the unmatched ground-truth segment of the same class with highest
// IoU (ties to the earlier ground-truth start); IoU >= tau is a true
// positive. Background segments are skipped unless include_background.
double f1_at_k(const std::vector<int>& pred, const std::vector<int>& gt, double tau,
               bool include_background = false);

// 100 * (1 - Levenshtein(segment class sequences) / max length), durations
// ignored, floored at zero.
double edit_score(const std::vector<int>& pred, const std::vector<int>& gt, bool include_background = false);

// Mean average precision with the midpoint hit criterion, pooled per class
// across videos. AP is the exact area under the all-point interpolated
// precision-recall curve; classes present in the ground truth average in.
double map_mid(const std::vector<std::vector<Detection>>& detections_per_video,
               const std::vector<std::vector<Segment>>& gt_per_video, bool include_background = false);

// one predicted segment -> one detection scored by the mean probability of
// its class over its frames; probs is T x k row-major
std::vector<Detection> detections_from_prediction(const std::vector<int>& pred_labels,
                                                  const std::vector<double>& probs, int k,
                                                  bool include_background = false);

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b);

struct MetricRow {
    std::string video;
    double accuracy = 0.0;
    double f1_10 = 0.0;
    double f1_25 = 0.0;
    double f1_50 = 0.0;
    double edit = 0.0;
    double map = 0.0;
};

MetricRow mean_row(const std::vector<MetricRow>& rows);

} // namespace ssag
