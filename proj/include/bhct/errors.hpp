#pragma once

#include <stdexcept>
#include <string>

namespace bhct {

// Exit-code classes used by the CLI: 2 config, 3 geometry, 4 numerical.
enum class ErrorKind { Config = 2, Geometry = 3, Numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& name, const std::string& what)
        : std::runtime_error(name + ": " + what), kind_(kind), name_(name) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }

private:
    ErrorKind kind_;
    std::string name_;
};

#define BHCT_DEFINE_ERROR(Type, Kind)                                      \
    struct Type : Error {                                                  \
        explicit Type(const std::string& what) : Error(Kind, #Type, what) {} \
    };

BHCT_DEFINE_ERROR(ConfigError, ErrorKind::Config)
BHCT_DEFINE_ERROR(InvalidBody, ErrorKind::Geometry)
BHCT_DEFINE_ERROR(DegenerateGeometry, ErrorKind::Geometry)
BHCT_DEFINE_ERROR(OutOfField, ErrorKind::Geometry)
BHCT_DEFINE_ERROR(ContaminatedWindow, ErrorKind::Numerical)
BHCT_DEFINE_ERROR(InvalidLogFit, ErrorKind::Numerical)
BHCT_DEFINE_ERROR(IllConditionedFit, ErrorKind::Numerical)
BHCT_DEFINE_ERROR(NoCrossings, ErrorKind::Numerical)
BHCT_DEFINE_ERROR(InsufficientStations, ErrorKind::Numerical)

#undef BHCT_DEFINE_ERROR

}  // namespace bhct
