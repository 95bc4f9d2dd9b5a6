#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "acsense/audio_io.hpp"
#include "acsense/errors.hpp"
#include "acsense/rng.hpp"
#include "oracles.hpp"

using namespace acsense;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / "acsense_audio_io_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write_bytes(const std::string& name, const std::string& bytes) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("int16 full scale maps to -1.0") {
    const auto path = write_bytes("fullscale.wav", oracle::build_wav({-32768}, 48000));
    const AudioClip clip = read_wav(path.string());
    REQUIRE(clip.samples.size() == 1);
    CHECK(clip.samples[0] == -1.0f);
    CHECK(clip.sample_rate_hz == 48000);
}

TEST_CASE("linear PCM scaling") {
    const auto path = write_bytes("scaling.wav", oracle::build_wav({0, 16384}, 48000));
    const AudioClip clip = read_wav(path.string());
    REQUIRE(clip.samples.size() == 2);
    CHECK(clip.samples[0] == 0.0f);
    CHECK(clip.samples[1] == 0.5f);
}

TEST_CASE("encode quantization") {
    CHECK(encode_sample_i16(1.0f) == 32767);     // clamped positive full scale
    CHECK(encode_sample_i16(0.0f) == 0);
    CHECK(encode_sample_i16(-0.5f) == -16384);
    CHECK(encode_sample_i16(-1.0f) == -32768);
    CHECK(encode_sample_i16(2.0f) == 32767);
    CHECK(encode_sample_i16(-2.0f) == -32768);
    // ties round half away from zero
    CHECK(encode_sample_i16(0.5f / 32768.0f) == 1);
    CHECK(encode_sample_i16(-0.5f / 32768.0f) == -1);
}

TEST_CASE("read/write round trip reproduces the data chunk byte for byte") {
    Rng rng(7001);
    for (int iter = 0; iter < 40; ++iter) {
        const std::size_t n = 1 + rng.below(500);
        std::vector<std::int16_t> samples(n);
        for (auto& s : samples) {
            s = static_cast<std::int16_t>(static_cast<std::uint16_t>(rng.next_u64() & 0xffff));
        }
        const std::uint32_t rate = 8000 + static_cast<std::uint32_t>(rng.below(40000));
        const bool junk = rng.below(2) == 0;
        const std::string wav = oracle::build_wav(samples, rate, junk);
        const auto in_path = write_bytes("rt_in.wav", wav);

        const AudioClip clip = read_wav(in_path.string());
        REQUIRE(clip.samples.size() == n);
        const auto out_path = temp_dir() / "rt_out.wav";
        write_wav(clip, out_path.string());

        CHECK(oracle::wav_data_chunk(slurp(out_path)) == oracle::wav_data_chunk(wav));
    }
}

TEST_CASE("write then read is lossless at int16 resolution") {
    Rng rng(7002);
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    for (int i = 0; i < 300; ++i) {
        clip.samples.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    }
    const auto path = temp_dir() / "lossless.wav";
    write_wav(clip, path.string());
    const AudioClip back = read_wav(path.string());
    REQUIRE(back.samples.size() == clip.samples.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        // quantized original, so the second trip is exact up to 1/32767
        CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 1.0f / 32767.0f);
        CHECK(std::isfinite(back.samples[i]));
        CHECK(back.samples[i] >= -1.0f);
        CHECK(back.samples[i] <= 1.0f);
    }
}

TEST_CASE("error taxonomy") {
    SUBCASE("not a wav") {
        const auto p = write_bytes("bad.wav", "OGGSdefinitely-not-a-wav-file-------");
        CHECK_THROWS_AS(read_wav(p.string()), NotWav);
    }
    SUBCASE("non-pcm encoding") {
        const auto p = write_bytes("float.wav", oracle::build_wav({0, 0}, 48000, false, 1, 3, 16));
        CHECK_THROWS_AS(read_wav(p.string()), UnsupportedEncoding);
    }
    SUBCASE("8-bit depth") {
        const auto p = write_bytes("8bit.wav", oracle::build_wav({0, 0}, 48000, false, 1, 1, 8));
        CHECK_THROWS_AS(read_wav(p.string()), UnsupportedEncoding);
    }
    SUBCASE("stereo rejected, not downmixed") {
        const auto p = write_bytes("stereo.wav", oracle::build_wav({0, 0}, 48000, false, 2));
        CHECK_THROWS_AS(read_wav(p.string()), MultiChannel);
    }
    SUBCASE("truncated data chunk") {
        std::string wav = oracle::build_wav({1, 2, 3, 4}, 48000);
        wav.resize(wav.size() - 3);
        const auto p = write_bytes("trunc.wav", wav);
        CHECK_THROWS_AS(read_wav(p.string()), TruncatedData);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_wav((temp_dir() / "no_such.wav").string()), IoError);
    }
}
