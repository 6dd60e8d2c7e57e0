#include "blinkwild/error.hpp"

namespace blinkwild {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::MissingAsset: return "missing asset";
        case ErrorKind::SplitViolation: return "split violation";
        case ErrorKind::NoEye: return "no visible eye";
        case ErrorKind::DegenerateGeometry: return "degenerate geometry";
        case ErrorKind::UndefinedCorrelation: return "undefined correlation";
        case ErrorKind::TrackLost: return "track lost";
        case ErrorKind::Numeric: return "numeric error";
        case ErrorKind::InvalidDataset: return "invalid dataset";
        case ErrorKind::Io: return "io error";
    }
    return "error";
}

}  // namespace blinkwild
