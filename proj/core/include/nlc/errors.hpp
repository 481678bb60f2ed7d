#pragma once

#include <stdexcept>
#include <string>

namespace nlc {

// Bad or missing input data: unreadable files, corrupt bitstreams, truncated
// segments. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model/checkpoint problems: version or hash mismatch, unloadable weights.
// Maps to CLI exit code 3.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check_arg(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void check_data(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

inline void check_model(bool cond, const std::string& msg) {
    if (!cond) throw ModelError(msg);
}

}  // namespace nlc
