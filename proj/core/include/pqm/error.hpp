#pragma once

#include <stdexcept>
#include <string>

namespace pqm {

enum class ErrorKind {
    validation,  // bad arguments, shape mismatch, config errors
    io,          // missing files, failed reads/writes
    corrupt,     // bad magic, truncated or inconsistent binary data
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    static Error validation(const std::string& msg) { return {ErrorKind::validation, msg}; }
    static Error io(const std::string& msg) { return {ErrorKind::io, msg}; }
    static Error corrupt(const std::string& msg) { return {ErrorKind::corrupt, msg}; }

private:
    ErrorKind kind_;
};

}  // namespace pqm
