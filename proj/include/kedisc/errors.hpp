#pragma once

#include <stdexcept>
#include <string>

namespace kedisc {

// All library failures derive from Error so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct UnsupportedOrderError : Error { using Error::Error; };
struct IngestionError : Error { using Error::Error; };
struct GenerationError : Error { using Error::Error; };
struct StructuralError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NoCandidatesError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct GuessError : Error { using Error::Error; };
struct CalibrationError : Error { using Error::Error; };

} // namespace kedisc
