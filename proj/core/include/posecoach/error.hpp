#pragma once

#include <stdexcept>
#include <string>

namespace posecoach {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Usage = 2,
    Data = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed input, inconsistent joint sets, missing sections and the like.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// A numerical procedure could not produce a valid result (singular covariance...).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

}  // namespace posecoach
