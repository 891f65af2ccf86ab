#pragma once

#include <stdexcept>
#include <string>

namespace fraclayer {

/// Base class; `kind()` is the stable name written to error.json.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FRACLAYER_ERROR(Name)                                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    };

FRACLAYER_ERROR(UndefinedTail)
FRACLAYER_ERROR(DivergentEnergy)
FRACLAYER_ERROR(PreconditionViolated)
FRACLAYER_ERROR(NotConverged)
FRACLAYER_ERROR(GammaAtWell)
FRACLAYER_ERROR(SingularSystem)
FRACLAYER_ERROR(ScaleViolation)
FRACLAYER_ERROR(JumpOutsideDomain)
FRACLAYER_ERROR(IllConditionedFit)
FRACLAYER_ERROR(ParseError)
FRACLAYER_ERROR(RangeError)
FRACLAYER_ERROR(ValidationFailed)

#undef FRACLAYER_ERROR

}  // namespace fraclayer
