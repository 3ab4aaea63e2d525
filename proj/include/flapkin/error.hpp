#pragma once

#include <stdexcept>
#include <string>

namespace flapkin {

enum class ErrorCode {
    InvalidArgument,
    Disconnected,
    UnknownLink,
    UnknownMarker,
    UnknownJoint,
    NotAssemblable,
    NoConvergence,
    SingularJacobian,
    BranchAmbiguous,
    Degenerate,
    ZeroReach,
    NoStrokeReversal,
    BudgetTooSmall,
    EmptyDesignSpace,
    PeriodMismatch,
    ParseError,
    SchemaError,
    ValidationError,
    IoError,
};

// Upper-case machine-readable name, e.g. "NO_CONVERGENCE".
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {});

    ErrorCode code() const noexcept { return code_; }

    // Secondary code, e.g. the violated invariant for ValidationError.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace flapkin
