#include "ssag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ssag {

std::vector<Segment> extract_segments(const std::vector<int>& labels) {
    if (labels.empty()) throw contract_error("extract_segments: empty label sequence");
    std::vector<Segment> out;
    int start = 0;
    for (std::size_t t = 1; t <= labels.size(); ++t) {
        if (t == labels.size() || labels[t] != labels[t - 1]) {
            out.push_back(Segment{labels[static_cast<std::size_t>(start)], start, static_cast<int>(t) - 1});
            start = static_cast<int>(t);
        }
    }
    return out;
}

std::vector<int> expand_segments(const std::vector<Segment>& segments) {
    std::vector<int> out;
    for (const Segment& s : segments)
        for (int t = s.start; t <= s.end; ++t) out.push_back(s.cls);
    return out;
}

double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size())
        throw contract_error("frame_accuracy: length mismatch, " + std::to_string(pred.size()) + " vs " +
                             std::to_string(gt.size()));
    if (gt.empty()) throw contract_error("frame_accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (pred[i] == gt[i]) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.size());
}

namespace {

double segment_iou(const Segment& a, const Segment& b) {
    const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
    if (inter <= 0) return 0.0;
    const int uni = std::max(a.end, b.end) - std::min(a.start, b.start) + 1;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Segment> drop_background(const std::vector<Segment>& segs, bool include_background) {
    if (include_background) return segs;
    std::vector<Segment> out;
    for (const Segment& s : segs)
        if (s.cls != kBackgroundClass) out.push_back(s);
    return out;
}

} // namespace

double f1_at_k(const std::vector<int>& pred, const std::vector<int>& gt, double tau, bool include_background) {
    if (pred.size() != gt.size())
        throw contract_error("f1_at_k: length mismatch, " + std::to_string(pred.size()) + " vs " +
                             std::to_string(gt.size()));
    const std::vector<Segment> ps = drop_background(extract_segments(pred), include_background);
    const std::vector<Segment> gs = drop_background(extract_segments(gt), include_background);

    std::vector<bool> used(gs.size(), false);
    std::size_t tp = 0;
    for (const Segment& p : ps) {
        int best = -1;
        double best_iou = -1.0;
        // gt segments come in temporal order, so keeping the first maximum
        // breaks IoU ties toward the earlier ground-truth start
        for (std::size_t j = 0; j < gs.size(); ++j) {
            if (used[j] || gs[j].cls != p.cls) continue;
            const double iou = segment_iou(p, gs[j]);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= tau) {
            used[static_cast<std::size_t>(best)] = true;
            ++tp;
        }
    }
    if (ps.empty() && gs.empty()) return 100.0; // nothing to detect, nothing predicted
    const double precision = ps.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(ps.size());
    const double recall = gs.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gs.size());
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = b.size();
    std::vector<std::size_t> row(n + 1);
    for (std::size_t j = 0; j <= n; ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t up = row[j];
            if (a[i - 1] == b[j - 1]) {
                row[j] = diag;
            } else {
                row[j] = 1 + std::min({diag, up, row[j - 1]});
            }
            diag = up;
        }
    }
    return row[n];
}

double edit_score(const std::vector<int>& pred, const std::vector<int>& gt, bool include_background) {
    if (pred.size() != gt.size())
        throw contract_error("edit_score: length mismatch, " + std::to_string(pred.size()) + " vs " +
                             std::to_string(gt.size()));
    std::vector<int> pseq, gseq;
    for (const Segment& s : drop_background(extract_segments(pred), include_background)) pseq.push_back(s.cls);
    for (const Segment& s : drop_background(extract_segments(gt), include_background)) gseq.push_back(s.cls);
    const std::size_t longest = std::max(pseq.size(), gseq.size());
    if (longest == 0) return 100.0;
    const double score = 100.0 * (1.0 - static_cast<double>(levenshtein(pseq, gseq)) / static_cast<double>(longest));
    return std::max(0.0, score);
}

double map_mid(const std::vector<std::vector<Detection>>& detections_per_video,
               const std::vector<std::vector<Segment>>& gt_per_video, bool include_background) {
    if (detections_per_video.size() != gt_per_video.size())
        throw contract_error("map_mid: detection and ground-truth video counts differ");

    struct Entry {
        double score;
        int video;
        Detection det;
    };
    std::map<int, std::vector<Entry>> per_class;
    std::map<int, int> gt_count;
    for (std::size_t v = 0; v < gt_per_video.size(); ++v)
        for (const Segment& s : gt_per_video[v]) {
            if (!include_background && s.cls == kBackgroundClass) continue;
            ++gt_count[s.cls];
        }
    for (std::size_t v = 0; v < detections_per_video.size(); ++v)
        for (const Detection& d : detections_per_video[v]) {
            if (!include_background && d.cls == kBackgroundClass) continue;
            per_class[d.cls].push_back(Entry{d.score, static_cast<int>(v), d});
        }

    if (gt_count.empty()) return 0.0;

    double ap_sum = 0.0;
    for (const auto& [cls, n_gt] : gt_count) {
        auto it = per_class.find(cls);
        if (it == per_class.end() || n_gt == 0) continue; // AP 0 for this class
        std::vector<Entry> dets = it->second;
        std::stable_sort(dets.begin(), dets.end(), [](const Entry& a, const Entry& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.video != b.video) return a.video < b.video;
            return a.det.start < b.det.start;
        });

        // midpoint matching in score order; a consumed segment stays consumed
        std::map<int, std::vector<bool>> used;
        for (std::size_t v = 0; v < gt_per_video.size(); ++v)
            used[static_cast<int>(v)].assign(gt_per_video[v].size(), false);
        std::vector<bool> is_tp(dets.size(), false);
        for (std::size_t i = 0; i < dets.size(); ++i) {
            const Entry& e = dets[i];
            const int mid = (e.det.start + e.det.end) / 2;
            const std::vector<Segment>& gts = gt_per_video[static_cast<std::size_t>(e.video)];
            for (std::size_t j = 0; j < gts.size(); ++j) {
                if (used[e.video][j] || gts[j].cls != cls) continue;
                if (mid >= gts[j].start && mid <= gts[j].end) {
                    used[e.video][j] = true;
                    is_tp[i] = true;
                    break;
                }
            }
        }

        // exact area under the all-point interpolated precision-recall curve
        std::vector<double> prec(dets.size()), rec(dets.size());
        int tp = 0;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (is_tp[i]) ++tp;
            prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
            rec[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
        }
        double ap = 0.0;
        double prev_rec = 0.0;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (rec[i] > prev_rec) {
                double max_prec = 0.0;
                for (std::size_t j = i; j < dets.size(); ++j) max_prec = std::max(max_prec, prec[j]);
                ap += (rec[i] - prev_rec) * max_prec;
                prev_rec = rec[i];
            }
        }
        ap_sum += ap;
    }
    return 100.0 * ap_sum / static_cast<double>(gt_count.size());
}

std::vector<Detection> detections_from_prediction(const std::vector<int>& pred_labels,
                                                  const std::vector<double>& probs, int k,
                                                  bool include_background) {
    if (probs.size() != pred_labels.size() * static_cast<std::size_t>(k))
        throw contract_error("detections_from_prediction: probability table size mismatch");
    std::vector<Detection> out;
    for (const Segment& s : extract_segments(pred_labels)) {
        if (!include_background && s.cls == kBackgroundClass) continue;
        double mean = 0.0;
        for (int t = s.start; t <= s.end; ++t)
            mean += probs[static_cast<std::size_t>(t) * static_cast<std::size_t>(k) + static_cast<std::size_t>(s.cls)];
        mean /= static_cast<double>(s.end - s.start + 1);
        out.push_back(Detection{s.cls, s.start, s.end, mean});
    }
    return out;
}

MetricRow mean_row(const std::vector<MetricRow>& rows) {
    MetricRow m;
    m.video = "mean";
    if (rows.empty()) return m;
    for (const MetricRow& r : rows) {
        m.accuracy += r.accuracy;
        m.f1_10 += r.f1_10;
        m.f1_25 += r.f1_25;
        m.f1_50 += r.f1_50;
        m.edit += r.edit;
        m.map += r.map;
    }
    const double n = static_cast<double>(rows.size());
    m.accuracy /= n;
    m.f1_10 /= n;
    m.f1_25 /= n;
    m.f1_50 /= n;
    m.edit /= n;
    m.map /= n;
    return m;
}

} // namespace ssag
