#pragma once

#include <string>
#include <vector>

namespace ssag {

// Two stacked horizontal bands, ground truth above prediction, one colored
// block per segment, background grey, class legend below. Band width is
// proportional to the frame count.
std::string timeline_svg(const std::vector<int>& gt, const std::vector<int>& pred,
                         const std::vector<std::string>& class_names, const std::string& title);

void write_timeline_svg(const std::string& path, const std::vector<int>& gt, const std::vector<int>& pred,
                        const std::vector<std::string>& class_names, const std::string& title);

// fixed palette; classes beyond it cycle (a warning goes to stderr)
const std::vector<std::string>& timeline_palette();
std::string class_color(int cls);

} // namespace ssag
