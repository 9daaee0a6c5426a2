#pragma once

#include <stdexcept>
#include <string>

namespace rtip {

// Exit-code families used by the command-line front end.
enum class ErrorFamily { usage = 1, precondition = 2, convergence = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family) {}

    ErrorFamily family() const noexcept { return family_; }
    int exit_code() const noexcept { return static_cast<int>(family_); }

private:
    ErrorFamily family_;
};

#define RTIP_DEFINE_ERROR(Name, Family)                                        \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(Family, what) {}        \
    }

RTIP_DEFINE_ERROR(ConfigError, ErrorFamily::usage);
RTIP_DEFINE_ERROR(OrderTooHigh, ErrorFamily::usage);
RTIP_DEFINE_ERROR(OutOfDomain, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(NoRoots, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(NonHyperbolicRoot, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(BranchFold, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(GapCollapse, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(MarginLoss, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(PreconditionError, ErrorFamily::precondition);
RTIP_DEFINE_ERROR(ToleranceFailure, ErrorFamily::convergence);
RTIP_DEFINE_ERROR(NoConvergence, ErrorFamily::convergence);

#undef RTIP_DEFINE_ERROR

}  // namespace rtip
