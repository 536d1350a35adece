#pragma once

#include <stdexcept>
#include <string>

namespace rbdo {

// Failure classes that callers (in particular the replication harness) may
// want to catch and record rather than abort on.
enum class ErrorCode {
    kDomain,              // argument outside its mathematical domain
    kSupport,             // point outside a distribution's support
    kInsufficientData,    // too few samples for the requested fit
    kDegenerateSample,    // zero sample variance
    kInfeasibleTarget,    // requested reliability unreachable for these parameters
    kIncompatibleMargin,  // reliability target plus margin reaches or exceeds 1
    kNonphysicalBasis,    // nonpositive basis value
    kSaturatedProbability,// probability exactly 0 or 1 where a quantile is needed
    kUnsupportedMode,     // operation not available for this problem/strategy
    kShapeMismatch,       // vector/matrix dimensions disagree
    kConfig,              // malformed experiment configuration
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace rbdo
