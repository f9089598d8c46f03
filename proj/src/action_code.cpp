#include "ssag/action_code.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssag {

ActionCode encode_action(int class_index, int k) {
    if (k < 2) throw config_error("action code: k must be at least 2, got " + std::to_string(k));
    if (class_index < 0 || class_index >= k)
        throw index_error("action code: class " + std::to_string(class_index) + " out of range for k=" +
                          std::to_string(k));
    ActionCode code;
    code.values.assign(static_cast<std::size_t>(k), 0.0);
    code.values[static_cast<std::size_t>(class_index)] = 255.0;
    return code;
}

int decode_action(const ActionCode& code) {
    if (code.values.empty()) throw contract_error("action code: cannot decode an empty code");
    std::size_t best = 0;
    for (std::size_t i = 1; i < code.values.size(); ++i)
        if (code.values[i] > code.values[best]) best = i;
    return static_cast<int>(best);
}

ActionCode normalize_action(const ActionCode& code, CodeForm direction) {
    ActionCode out = code;
    const double s = (direction == CodeForm::ToInternal) ? (1.0 / 255.0) : 255.0;
    for (double& v : out.values) v *= s;
    return out;
}

std::vector<double> encode_batch_internal(const std::vector<int>& labels, int k) {
    std::vector<double> rows(labels.size() * static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k)
            throw index_error("action code: label " + std::to_string(labels[i]) + " out of range for k=" +
                              std::to_string(k));
        rows[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return rows;
}

std::vector<unsigned char> code_to_bytes(const ActionCode& internal_form) {
    std::vector<unsigned char> bytes(internal_form.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(std::round(internal_form.values[i] * 255.0), 0.0, 255.0);
        bytes[i] = static_cast<unsigned char>(v);
    }
    return bytes;
}

} // namespace ssag
