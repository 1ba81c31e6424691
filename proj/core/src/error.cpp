#include "hfo/error.hpp"

namespace hfo {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::ChannelLengthMismatch: return "ChannelLengthMismatch";
        case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorCode::InvalidPair: return "InvalidPair";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonFiniteSample: return "NonFiniteSample";
        case ErrorCode::SignalTooShort: return "SignalTooShort";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::OutOfRangeParam: return "OutOfRangeParam";
        case ErrorCode::NoAdmissibleConfig: return "NoAdmissibleConfig";
        case ErrorCode::ZeroDuration: return "ZeroDuration";
        case ErrorCode::NegativeRate: return "NegativeRate";
        case ErrorCode::InvalidCounts: return "InvalidCounts";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::MissingCalibration: return "MissingCalibration";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace hfo
