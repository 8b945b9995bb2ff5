#pragma once

#include <stdexcept>
#include <string>

namespace gsa {

/// Broad failure classes. The CLI maps each class to its own exit code.
enum class ErrorClass { Validation, Numerical, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

#define GSA_DEFINE_ERROR(Name, Class)                                            \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {} \
    }

// design
GSA_DEFINE_ERROR(InvalidDesignError, Validation);
GSA_DEFINE_ERROR(FrameMismatchError, Validation);
GSA_DEFINE_ERROR(DomainError, Validation);
GSA_DEFINE_ERROR(ShapeError, Validation);
GSA_DEFINE_ERROR(DegenerateResponseError, Numerical);

// surrogate
GSA_DEFINE_ERROR(IllConditionedKernelError, Numerical);
GSA_DEFINE_ERROR(FitFailureError, Numerical);
GSA_DEFINE_ERROR(IntegrityError, Validation);

// sobol
GSA_DEFINE_ERROR(UnsupportedDimensionError, Validation);

// model
GSA_DEFINE_ERROR(IngestionError, Validation);
GSA_DEFINE_ERROR(ValidationError, Validation);
GSA_DEFINE_ERROR(GeometryInfeasibleError, Numerical);
GSA_DEFINE_ERROR(ParameterError, Validation);
GSA_DEFINE_ERROR(EvaluationError, Numerical);

// cli / io
GSA_DEFINE_ERROR(IoError, Io);
GSA_DEFINE_ERROR(StaleArtifactError, Validation);
GSA_DEFINE_ERROR(ConfigError, Validation);

#undef GSA_DEFINE_ERROR

}  // namespace gsa
