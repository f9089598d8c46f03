#pragma once

#include <stdexcept>
#include <string>

namespace ssag {

// Base for everything thrown by this library.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape contracts (mismatched matmul sides, bad conv geometry, ...).
struct dimension_error : error {
    explicit dimension_error(const std::string& msg) : error(msg) {}
};

// API preconditions (non-scalar loss, missing grad, wrong queue dim, ...).
struct contract_error : error {
    explicit contract_error(const std::string& msg) : error(msg) {}
};

// Invalid run/model configuration values.
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Class index out of range.
struct index_error : error {
    explicit index_error(const std::string& msg) : error(msg) {}
};

// Binary file structure problems; carries file and byte offset.
struct format_error : error {
    explicit format_error(const std::string& msg) : error(msg) {}
};

// Semantically invalid file contents (bad label, bad row sum); carries location.
struct validation_error : error {
    explicit validation_error(const std::string& msg) : error(msg) {}
};

// Checkpoint/config disagreement on load.
struct incompat_error : error {
    explicit incompat_error(const std::string& msg) : error(msg) {}
};

// Numerical failure: non-finite values where finite ones are required.
struct eval_error : error {
    explicit eval_error(const std::string& msg) : error(msg) {}
};

} // namespace ssag
