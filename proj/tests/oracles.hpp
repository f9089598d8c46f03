#pragma once

// Independent brute-force reference implementations used only by tests.
// These deliberately avoid sharing code paths with the library.

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "ssag/metrics.hpp"

namespace oracle {

// full-matrix Levenshtein DP
inline std::size_t levenshtein_full_dp(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) dp[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) dp[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            dp[i][j] = std::min({sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
        }
    return dp[n][m];
}

inline double edit_score_oracle(const std::vector<int>& pred, const std::vector<int>& gt,
                                bool include_background = false) {
    auto seq = [&](const std::vector<int>& labels) {
        std::vector<int> s;
        for (const ssag::Segment& seg : ssag::extract_segments(labels))
            if (include_background || seg.cls != ssag::kBackgroundClass) s.push_back(seg.cls);
        return s;
    };
    const std::vector<int> p = seq(pred), g = seq(gt);
    const std::size_t longest = std::max(p.size(), g.size());
    if (longest == 0) return 100.0;
    const double score =
        100.0 * (1.0 - static_cast<double>(levenshtein_full_dp(p, g)) / static_cast<double>(longest));
    return std::max(0.0, score);
}

// exhaustive optimal bipartite matching: maximum number of pred/gt pairs of
// the same class with IoU >= tau, via augmenting paths
inline std::size_t max_matching_tp(const std::vector<ssag::Segment>& preds, const std::vector<ssag::Segment>& gts,
                                   double tau) {
    auto iou = [](const ssag::Segment& a, const ssag::Segment& b) {
        const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
        if (inter <= 0) return 0.0;
        const int uni = std::max(a.end, b.end) - std::min(a.start, b.start) + 1;
        return static_cast<double>(inter) / uni;
    };
    std::vector<std::vector<int>> adj(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < gts.size(); ++j)
            if (preds[i].cls == gts[j].cls && iou(preds[i], gts[j]) >= tau) adj[i].push_back(static_cast<int>(j));

    std::vector<int> match_gt(gts.size(), -1);
    std::vector<bool> visited;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (int j : adj[i]) {
            if (visited[static_cast<std::size_t>(j)]) continue;
            visited[static_cast<std::size_t>(j)] = true;
            if (match_gt[static_cast<std::size_t>(j)] < 0 ||
                augment(static_cast<std::size_t>(match_gt[static_cast<std::size_t>(j)]))) {
                match_gt[static_cast<std::size_t>(j)] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    std::size_t tp = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        visited.assign(gts.size(), false);
        if (augment(i)) ++tp;
    }
    return tp;
}

inline double f1_oracle(const std::vector<int>& pred, const std::vector<int>& gt, double tau,
                        bool include_background = false) {
    auto segs = [&](const std::vector<int>& labels) {
        std::vector<ssag::Segment> out;
        for (const ssag::Segment& s : ssag::extract_segments(labels))
            if (include_background || s.cls != ssag::kBackgroundClass) out.push_back(s);
        return out;
    };
    const auto ps = segs(pred), gs = segs(gt);
    if (ps.empty() && gs.empty()) return 100.0;
    const std::size_t tp = max_matching_tp(ps, gs, tau);
    const double precision = ps.empty() ? 0.0 : static_cast<double>(tp) / ps.size();
    const double recall = gs.empty() ? 0.0 : static_cast<double>(tp) / gs.size();
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

// Exhaustive PR computation: for every prefix of the score-ranked detection
// list, rerun the midpoint matching from scratch, then integrate the
// interpolated curve. Single-video form.
inline double ap_oracle_single_class(std::vector<ssag::Detection> dets, const std::vector<ssag::Segment>& gts,
                                     int cls) {
    std::vector<ssag::Segment> class_gts;
    for (const ssag::Segment& g : gts)
        if (g.cls == cls) class_gts.push_back(g);
    std::vector<ssag::Detection> class_dets;
    for (const ssag::Detection& d : dets)
        if (d.cls == cls) class_dets.push_back(d);
    if (class_gts.empty()) return -1.0; // class absent from gt: excluded
    std::stable_sort(class_dets.begin(), class_dets.end(), [](const ssag::Detection& a, const ssag::Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.start < b.start;
    });

    std::vector<double> precs, recs;
    for (std::size_t cut = 1; cut <= class_dets.size(); ++cut) {
        // match the first `cut` detections from scratch
        std::vector<bool> used(class_gts.size(), false);
        std::size_t tp = 0;
        for (std::size_t i = 0; i < cut; ++i) {
            const int mid = (class_dets[i].start + class_dets[i].end) / 2;
            for (std::size_t j = 0; j < class_gts.size(); ++j) {
                if (used[j]) continue;
                if (mid >= class_gts[j].start && mid <= class_gts[j].end) {
                    used[j] = true;
                    ++tp;
                    break;
                }
            }
        }
        precs.push_back(static_cast<double>(tp) / static_cast<double>(cut));
        recs.push_back(static_cast<double>(tp) / static_cast<double>(class_gts.size()));
    }
    double ap = 0.0, prev_r = 0.0;
    for (std::size_t i = 0; i < precs.size(); ++i) {
        if (recs[i] > prev_r) {
            double pmax = 0.0;
            for (std::size_t j = i; j < precs.size(); ++j) pmax = std::max(pmax, precs[j]);
            ap += (recs[i] - prev_r) * pmax;
            prev_r = recs[i];
        }
    }
    return ap;
}

inline double map_mid_oracle(const std::vector<ssag::Detection>& dets, const std::vector<ssag::Segment>& gts,
                             bool include_background = false) {
    std::map<int, bool> classes;
    for (const ssag::Segment& g : gts)
        if (include_background || g.cls != ssag::kBackgroundClass) classes[g.cls] = true;
    if (classes.empty()) return 0.0;
    std::vector<ssag::Detection> kept;
    for (const ssag::Detection& d : dets)
        if (include_background || d.cls != ssag::kBackgroundClass) kept.push_back(d);
    double sum = 0.0;
    for (const auto& [cls, _] : classes) {
        const double ap = ap_oracle_single_class(kept, gts, cls);
        if (ap >= 0.0) sum += ap;
    }
    return 100.0 * sum / static_cast<double>(classes.size());
}

} // namespace oracle
