#pragma once

#include <stdexcept>
#include <string>

namespace acsense {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// audio_io
struct NotWav : Error { using Error::Error; };
struct UnsupportedEncoding : Error { using Error::Error; };
struct MultiChannel : Error { using Error::Error; };
struct TruncatedData : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// framing / configs
struct InvalidConfig : Error { using Error::Error; };

// features
struct NegativeFrequency : Error { using Error::Error; };
struct InvalidBand : Error { using Error::Error; };
struct TooManyBands : Error { using Error::Error; };
struct WindowTooShort : Error { using Error::Error; };

// nn
struct ShapeMismatch : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };

// classify
struct ClassTooSmall : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// synth
struct InvalidDuration : Error { using Error::Error; };

// stream
struct DigestMismatch : Error { using Error::Error; };
struct MalformedPcm : Error { using Error::Error; };

} // namespace acsense
