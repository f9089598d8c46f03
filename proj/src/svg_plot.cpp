#include "ssag/svg_plot.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "ssag/metrics.hpp"

namespace ssag {

const std::vector<std::string>& timeline_palette() {
    static const std::vector<std::string> palette = {
        "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
        "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
    };
    return palette;
}

std::string class_color(int cls) {
    if (cls == kBackgroundClass) return "#808080";
    const auto& pal = timeline_palette();
    return pal[static_cast<std::size_t>(cls - 1) % pal.size()];
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void band_rects(std::ostringstream& os, const std::vector<int>& labels, int y, int band_h) {
    for (const Segment& s : extract_segments(labels)) {
        os << "  <rect x=\"" << s.start << "\" y=\"" << y << "\" width=\"" << (s.end - s.start + 1)
           << "\" height=\"" << band_h << "\" fill=\"" << class_color(s.cls) << "\"/>\n";
    }
}

} // namespace

std::string timeline_svg(const std::vector<int>& gt, const std::vector<int>& pred,
                         const std::vector<std::string>& class_names, const std::string& title) {
    if (gt.size() != pred.size())
        throw contract_error("timeline_svg: ground truth and prediction lengths differ");
    int max_cls = 0;
    for (int v : gt) max_cls = std::max(max_cls, v);
    for (int v : pred) max_cls = std::max(max_cls, v);
    if (max_cls > static_cast<int>(timeline_palette().size()))
        std::cerr << "timeline_svg: " << max_cls << " classes exceed the " << timeline_palette().size()
                  << "-color palette; colors will repeat\n";

    const int width = static_cast<int>(gt.size());
    const int band_h = 28;
    const int gap = 8;
    const int label_w = 90;
    const int legend_rows = max_cls + 1;
    const int legend_h = 18 * legend_rows + 10;
    const int height = 2 * band_h + 3 * gap + legend_h + 24;

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (width + label_w + 10) << "\" height=\"" << height
       << "\" viewBox=\"" << -label_w << " -24 " << (width + label_w + 10) << " " << height << "\">\n";
    os << "  <text x=\"" << -label_w + 4 << "\" y=\"-8\" font-size=\"12\" font-family=\"sans-serif\">"
       << xml_escape(title) << "</text>\n";
    os << "  <text x=\"" << -label_w + 4 << "\" y=\"" << band_h / 2 + 4
       << "\" font-size=\"11\" font-family=\"sans-serif\">ground truth</text>\n";
    band_rects(os, gt, 0, band_h);
    const int pred_y = band_h + gap;
    os << "  <text x=\"" << -label_w + 4 << "\" y=\"" << pred_y + band_h / 2 + 4
       << "\" font-size=\"11\" font-family=\"sans-serif\">prediction</text>\n";
    band_rects(os, pred, pred_y, band_h);

    int ly = 2 * band_h + 2 * gap + 8;
    for (int c = 0; c <= max_cls; ++c) {
        os << "  <rect x=\"" << -label_w + 4 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
           << class_color(c) << "\"/>\n";
        const std::string name =
            (c < static_cast<int>(class_names.size())) ? class_names[static_cast<std::size_t>(c)]
                                                       : ("class_" + std::to_string(c));
        os << "  <text x=\"" << -label_w + 22 << "\" y=\"" << ly + 10
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(name) << "</text>\n";
        ly += 18;
    }
    os << "</svg>\n";
    return os.str();
}

void write_timeline_svg(const std::string& path, const std::vector<int>& gt, const std::vector<int>& pred,
                        const std::vector<std::string>& class_names, const std::string& title) {
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    os << timeline_svg(gt, pred, class_names, title);
}

} // namespace ssag
