#pragma once

#include <stdexcept>
#include <string>

namespace hfo {

enum class ErrorCode {
    MalformedHeader,
    ChannelLengthMismatch,
    UnsupportedEncoding,
    InvalidPair,
    IndexOutOfRange,
    InvalidArgument,
    NonFiniteSample,
    SignalTooShort,
    EmptyInput,
    OutOfRangeParam,
    NoAdmissibleConfig,
    ZeroDuration,
    NegativeRate,
    InvalidCounts,
    EmptyCorpus,
    MissingCalibration,
    Io,
};

const char* to_string(ErrorCode code);

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hfo
