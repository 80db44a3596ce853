#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zeroloss {

// Machine-readable failure categories. The string form (see to_string) is what
// lands in experiment reports, so keep it stable.
enum class ErrorKind {
    InvalidMatrix,
    ShapeError,
    RankDeficient,
    DomainError,
    NotLocalDiffeo,
    DuplicateCenters,
    PreconditionViolation,
    NumericalFailure,
    ValidationError,
    IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Validation-type errors map to CLI exit code 2, everything else to 3.
    bool is_validation() const noexcept {
        return kind_ == ErrorKind::ValidationError || kind_ == ErrorKind::PreconditionViolation;
    }

private:
    ErrorKind kind_;
};

// Raised when an entry lies outside the open domain of an activation inverse.
// Carries the offending position so the failure can be reported precisely.
class DomainError : public Error {
public:
    DomainError(std::size_t row, std::size_t col, double value, const std::string& what)
        : Error(ErrorKind::DomainError, what), row_(row), col_(col), value_(value) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    double value() const noexcept { return value_; }

private:
    std::size_t row_;
    std::size_t col_;
    double value_;
};

}  // namespace zeroloss
