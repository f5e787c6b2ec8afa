// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace driftsim {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroVectorError : Error {
    explicit ZeroVectorError(const std::string& msg = "zero-norm vector") : Error(msg) {}
};

struct InvalidGridError : Error {
    explicit InvalidGridError(const std::string& msg) : Error(msg) {}
};

struct UndefinedDirectionError : Error {
    explicit UndefinedDirectionError(const std::string& msg = "relative wind direction undefined")
        : Error(msg) {}
};

struct NonFiniteStateError : Error {
    explicit NonFiniteStateError(const std::string& msg) : Error(msg) {}
};

struct CoincidentPointError : Error {
    explicit CoincidentPointError(const std::string& msg = "sensed point coincides with vehicle")
        : Error(msg) {}
};

struct TooShortError : Error {
    explicit TooShortError(const std::string& msg) : Error(msg) {}
};

struct NoFeasibleCourseError : Error {
    explicit NoFeasibleCourseError(const std::string& msg = "feasible course set is empty")
        : Error(msg) {}
};

struct NoControlAuthorityError : Error {
    explicit NoControlAuthorityError(const std::string& msg = "no control authority at v_c = 0")
        : Error(msg) {}
};

struct DegenerateWindError : Error {
    explicit DegenerateWindError(const std::string& msg = "wind vector degenerate") : Error(msg) {}
};

struct DuplicateIdError : Error {
    explicit DuplicateIdError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct MissingColumnError : Error {
    explicit MissingColumnError(const std::string& msg) : Error(msg) {}
};

}  // namespace driftsim
