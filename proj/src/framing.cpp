#include "acsense/framing.hpp"

#include <cmath>

#include "acsense/errors.hpp"

namespace acsense {

void validate(const FramingConfig& cfg) {
    if (!(cfg.window_len_s > 0.0) || !(cfg.hop_s > 0.0)) {
        throw InvalidConfig("framing: window and hop must be positive seconds");
    }
    if (cfg.hop_s > cfg.window_len_s) {
        throw InvalidConfig("framing: hop_s must not exceed window_len_s");
    }
}

std::int64_t window_len_samples(const FramingConfig& cfg, int sample_rate_hz) {
    return std::llround(cfg.window_len_s * sample_rate_hz);
}

std::int64_t hop_len_samples(const FramingConfig& cfg, int sample_rate_hz) {
    return std::llround(cfg.hop_s * sample_rate_hz);
}

double overlap_fraction(const FramingConfig& cfg) {
    validate(cfg);
    return 1.0 - cfg.hop_s / cfg.window_len_s;
}

std::int64_t window_count(std::int64_t n_samples, std::int64_t win, std::int64_t hop) {
    if (n_samples < win) return 0;
    return (n_samples - win) / hop + 1;
}

std::vector<Window> segment(const AudioClip& clip, const FramingConfig& cfg) {
    validate(cfg);
    const std::int64_t win = window_len_samples(cfg, clip.sample_rate_hz);
    const std::int64_t hop = hop_len_samples(cfg, clip.sample_rate_hz);
    if (win < 1 || hop < 1) {
        throw InvalidConfig("framing: window shorter than one sample at this rate");
    }

    const std::int64_t n = static_cast<std::int64_t>(clip.samples.size());
    const std::int64_t count = window_count(n, win, hop);
    std::vector<Window> windows;
    windows.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        Window w;
        w.start_sample = k * hop;
        w.samples.assign(clip.samples.begin() + w.start_sample,
                         clip.samples.begin() + w.start_sample + win);
        windows.push_back(std::move(w));
    }
    return windows;
}

} // namespace acsense
