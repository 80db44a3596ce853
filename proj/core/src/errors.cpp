#include "zeroloss/errors.hpp"

namespace zeroloss {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidMatrix: return "InvalidMatrix";
        case ErrorKind::ShapeError: return "ShapeError";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NotLocalDiffeo: return "NotLocalDiffeo";
        case ErrorKind::DuplicateCenters: return "DuplicateCenters";
        case ErrorKind::PreconditionViolation: return "PreconditionViolation";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace zeroloss
