#include "flapkin/error.hpp"

namespace flapkin {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::Disconnected: return "DISCONNECTED";
        case ErrorCode::UnknownLink: return "UNKNOWN_LINK";
        case ErrorCode::UnknownMarker: return "UNKNOWN_MARKER";
        case ErrorCode::UnknownJoint: return "UNKNOWN_JOINT";
        case ErrorCode::NotAssemblable: return "NOT_ASSEMBLABLE";
        case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
        case ErrorCode::SingularJacobian: return "SINGULAR_JACOBIAN";
        case ErrorCode::BranchAmbiguous: return "BRANCH_AMBIGUOUS";
        case ErrorCode::Degenerate: return "DEGENERATE";
        case ErrorCode::ZeroReach: return "ZERO_REACH";
        case ErrorCode::NoStrokeReversal: return "NO_STROKE_REVERSAL";
        case ErrorCode::BudgetTooSmall: return "BUDGET_TOO_SMALL";
        case ErrorCode::EmptyDesignSpace: return "EMPTY_DESIGN_SPACE";
        case ErrorCode::PeriodMismatch: return "PERIOD_MISMATCH";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::SchemaError: return "SCHEMA_ERROR";
        case ErrorCode::ValidationError: return "VALIDATION_ERROR";
        case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message, std::string detail)
    : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

}  // namespace flapkin
