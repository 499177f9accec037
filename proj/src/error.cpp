#include "corpusgate/error.hpp"

namespace corpusgate {

const char* to_string(BackendError::Kind kind) noexcept {
  switch (kind) {
    case BackendError::Kind::kConnection: return "connection";
    case BackendError::Kind::kTimeout: return "timeout";
    case BackendError::Kind::kHttpStatus: return "http_status";
    case BackendError::Kind::kMalformedResponse: return "malformed_response";
    case BackendError::Kind::kLengthMismatch: return "length_mismatch";
    case BackendError::Kind::kNonFinite: return "non_finite";
    case BackendError::Kind::kScriptMiss: return "script_miss";
    case BackendError::Kind::kOther: return "other";
  }
  return "other";
}

}  // namespace corpusgate
