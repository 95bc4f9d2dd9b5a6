#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace acsense {

// Mono PCM audio normalized to floating samples.
struct AudioClip {
    std::vector<float> samples;   // each in [-1.0, 1.0]
    int sample_rate_hz = 0;
    std::string source_id;        // optional label, usually the source path

    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

// Header info for a PCM16 mono WAV; the stream is left at the first data byte.
struct WavStreamInfo {
    int sample_rate_hz = 0;
    std::uint32_t data_bytes = 0;
};

// Parses the RIFF/WAVE container up to the data chunk. Unknown chunks are
// skipped. Rejects non-PCM16 and multichannel files.
WavStreamInfo parse_wav_header(std::istream& in);

AudioClip read_wav(const std::string& path);
void write_wav(const AudioClip& clip, const std::string& path);

// int16 <-> float conversion, pinned here so every ingest path agrees:
// decode divides by 32768, encode rounds s*32768 half away from zero and
// clamps to the int16 range. The matching scale factors make decode/encode
// round trips byte-exact.
inline float decode_sample_i16(std::int16_t v) {
    float s = static_cast<float>(v) / 32768.0f;
    if (s > 1.0f) s = 1.0f;
    if (s < -1.0f) s = -1.0f;
    return s;
}

std::int16_t encode_sample_i16(float s);

} // namespace acsense
