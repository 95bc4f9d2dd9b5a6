#include "acsense/audio_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "acsense/errors.hpp"

namespace acsense {
namespace {

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw TruncatedData("unexpected end of file in WAV header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16le(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw TruncatedData("unexpected end of file in WAV header");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32le(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void write_u16le(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

} // namespace

WavStreamInfo parse_wav_header(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RIFF", 4) != 0) throw NotWav("missing RIFF magic");
    read_u32le(in);   // overall size; not trusted
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "WAVE", 4) != 0) throw NotWav("missing WAVE magic");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;

    // Walk chunks until the data chunk; anything unknown is skipped.
    for (;;) {
        in.read(magic, 4);
        if (!in) throw TruncatedData("no data chunk found");
        const std::uint32_t size = read_u32le(in);

        if (std::memcmp(magic, "fmt ", 4) == 0) {
            if (size < 16) throw TruncatedData("fmt chunk too small");
            format = read_u16le(in);
            channels = read_u16le(in);
            sample_rate = read_u32le(in);
            read_u32le(in);   // byte rate
            read_u16le(in);   // block align
            bits = read_u16le(in);
            in.seekg(size - 16 + (size & 1), std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(magic, "data", 4) == 0) {
            if (!have_fmt) throw UnsupportedEncoding("data chunk precedes fmt chunk");
            if (format != 1 || bits != 16) {
                throw UnsupportedEncoding("only PCM16 is supported (format=" +
                                          std::to_string(format) + ", bits=" +
                                          std::to_string(bits) + ")");
            }
            if (channels != 1) {
                throw MultiChannel("expected 1 channel, got " + std::to_string(channels));
            }
            if (sample_rate == 0) throw UnsupportedEncoding("sample rate is zero");
            return WavStreamInfo{static_cast<int>(sample_rate), size};
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
            if (!in) throw TruncatedData("truncated chunk '" + std::string(magic, 4) + "'");
        }
    }
}

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const WavStreamInfo info = parse_wav_header(in);
    if (info.data_bytes % 2 != 0) throw TruncatedData("odd data chunk size");

    const std::size_t n = info.data_bytes / 2;
    std::vector<char> raw(info.data_bytes);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw TruncatedData("data chunk shorter than header claims");
    }

    AudioClip clip;
    clip.sample_rate_hz = info.sample_rate_hz;
    clip.source_id = path;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = static_cast<unsigned char>(raw[2 * i]);
        const auto hi = static_cast<unsigned char>(raw[2 * i + 1]);
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        clip.samples[i] = decode_sample_i16(v);
    }
    return clip;
}

std::int16_t encode_sample_i16(float s) {
    long v = std::lround(static_cast<double>(s) * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    return static_cast<std::int16_t>(v);
}

void write_wav(const AudioClip& clip, const std::string& path) {
    if (clip.sample_rate_hz <= 0) throw IoError("clip has no sample rate");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);

    const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
    const std::uint32_t fs = static_cast<std::uint32_t>(clip.sample_rate_hz);

    out.write("RIFF", 4);
    write_u32le(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32le(out, 16);
    write_u16le(out, 1);            // PCM
    write_u16le(out, 1);            // mono
    write_u32le(out, fs);
    write_u32le(out, fs * 2);       // byte rate
    write_u16le(out, 2);            // block align
    write_u16le(out, 16);           // bits per sample
    out.write("data", 4);
    write_u32le(out, data_bytes);

    for (float s : clip.samples) {
        write_u16le(out, static_cast<std::uint16_t>(encode_sample_i16(s)));
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace acsense
