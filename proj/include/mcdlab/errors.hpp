#pragma once

#include <stdexcept>
#include <string>

namespace mcdlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or malformed definitions (bad dims, bad probabilities, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered during numeric work.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss. Carries the epoch it happened in.
class TrainingDivergedError : public NumericError {
public:
    TrainingDivergedError(const std::string& what, int epoch)
        : NumericError(what), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace mcdlab
