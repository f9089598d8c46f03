#pragma once

#include <vector>

#include "ssag/errors.hpp"

namespace ssag {

// 1 x k action representation. Ground-truth codes are scaled one-hot: 255 at
// the class index in external form, 1.0 in the internal form the networks
// consume and produce.
struct ActionCode {
    std::vector<double> values;

    int k() const { return static_cast<int>(values.size()); }
};

enum class CodeForm { ToInternal, ToExternal };

// external-form code: 255 at class_index, 0 elsewhere
ActionCode encode_action(int class_index, int k);

// argmax, ties broken toward the lowest index; works on either form
int decode_action(const ActionCode& code);

// divide by 255 (ToInternal) or multiply by 255 (ToExternal)
ActionCode normalize_action(const ActionCode& code, CodeForm direction);

// internal-form rows for a batch of labels, flattened n x k row-major
std::vector<double> encode_batch_internal(const std::vector<int>& labels, int k);

// unsigned-byte external form for serialization, clamped to [0, 255]
std::vector<unsigned char> code_to_bytes(const ActionCode& internal_form);

} // namespace ssag
