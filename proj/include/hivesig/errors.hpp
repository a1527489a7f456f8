#pragma once

#include <stdexcept>
#include <string>

namespace hivesig {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// audio decoding / clip handling
struct MalformedHeader : Error { using Error::Error; };
struct UnsupportedEncoding : Error { using Error::Error; };
struct EmptyAudio : Error { using Error::Error; };
struct InvalidRate : Error { using Error::Error; };
struct InvalidFactor : Error { using Error::Error; };

// time-frequency transforms
struct TooShort : Error { using Error::Error; };
struct InvalidBand : Error { using Error::Error; };
struct EmptyMatrix : Error { using Error::Error; };

// tensor / layer math
struct ShapeMismatch : Error { using Error::Error; };
struct InvalidProbability : Error { using Error::Error; };

// network construction and surgery
struct ShapeIncompatible : Error { using Error::Error; };
struct InvalidFraction : Error { using Error::Error; };
struct InvalidTemperature : Error { using Error::Error; };
struct EmptyCalibration : Error { using Error::Error; };

// datasets and metrics
struct EmptyClass : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct OutOfRangeClass : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// serialization
struct IoFailure : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };

// command wiring
struct PipelineOrder : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };

}  // namespace hivesig
