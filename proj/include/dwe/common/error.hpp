#pragma once

#include <stdexcept>
#include <string>

namespace dwe {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind { kParse, kValidation, kNumeric, kIo };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::kParse, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::kValidation, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace dwe
