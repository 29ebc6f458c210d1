#pragma once

#include <stdexcept>
#include <string>

namespace riskctl {

// Base of every error raised by the library. The CLI maps subclasses onto
// stable exit codes (see tools/riskctl).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RISKCTL_DEFINE_ERROR(Name)                 \
    class Name : public Error {                    \
    public:                                        \
        explicit Name(const std::string& what)     \
            : Error(#Name ": " + what) {}          \
    }

// Ingest
RISKCTL_DEFINE_ERROR(SchemaError);
RISKCTL_DEFINE_ERROR(RangeError);
RISKCTL_DEFINE_ERROR(CoverageError);
RISKCTL_DEFINE_ERROR(DuplicateIdError);
RISKCTL_DEFINE_ERROR(MissingLabelError);
RISKCTL_DEFINE_ERROR(DegenerateDistribution);

// Numerics
RISKCTL_DEFINE_ERROR(DomainError);
RISKCTL_DEFINE_ERROR(NumericalError);
RISKCTL_DEFINE_ERROR(ZeroVariance);
RISKCTL_DEFINE_ERROR(DegenerateScale);

// Scoring and evaluation
RISKCTL_DEFINE_ERROR(LengthMismatch);
RISKCTL_DEFINE_ERROR(MissingEvidence);
RISKCTL_DEFINE_ERROR(LabelError);
RISKCTL_DEFINE_ERROR(AlignmentError);
RISKCTL_DEFINE_ERROR(NoPositives);
RISKCTL_DEFINE_ERROR(NoFoilInstances);

// Calibration outcomes. These are not data errors: the procedure ran and
// found nothing it can certify.
RISKCTL_DEFINE_ERROR(NoFeasibleLambda);
RISKCTL_DEFINE_ERROR(EmptyAcceptedSet);

RISKCTL_DEFINE_ERROR(ConfigError);

#undef RISKCTL_DEFINE_ERROR

}  // namespace riskctl
