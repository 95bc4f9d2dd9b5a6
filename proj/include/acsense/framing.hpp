#pragma once

#include <cstdint>
#include <vector>

#include "acsense/audio_io.hpp"

namespace acsense {

// Two regimes are used throughout: 1 s windows with no overlap for
// classification, and 0.2 s windows every 0.04 s (80% overlap) for streaming.
struct FramingConfig {
    double window_len_s = 1.0;
    double hop_s = 1.0;
};

inline FramingConfig classification_framing() { return {1.0, 1.0}; }
inline FramingConfig streaming_framing() { return {0.2, 0.04}; }

struct Window {
    std::int64_t start_sample = 0;
    std::vector<float> samples;
};

// Second-valued config is converted once via round(x * fs); all window
// arithmetic after that is integer, so long clips cannot drift.
std::int64_t window_len_samples(const FramingConfig& cfg, int sample_rate_hz);
std::int64_t hop_len_samples(const FramingConfig& cfg, int sample_rate_hz);

double overlap_fraction(const FramingConfig& cfg);

// Closed-form count: 0 if n < win, else floor((n - win) / hop) + 1.
std::int64_t window_count(std::int64_t n_samples, std::int64_t win, std::int64_t hop);

// Splits the clip into fixed-length windows; any trailing remainder shorter
// than a full window is discarded.
std::vector<Window> segment(const AudioClip& clip, const FramingConfig& cfg);

void validate(const FramingConfig& cfg);

} // namespace acsense
