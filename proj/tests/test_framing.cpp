#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acsense/errors.hpp"
#include "acsense/framing.hpp"
#include "acsense/rng.hpp"

using namespace acsense;

namespace {

AudioClip make_clip(std::size_t n, int rate) {
    AudioClip clip;
    clip.sample_rate_hz = rate;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        clip.samples[i] = static_cast<float>((i % 201) / 201.0 - 0.5);
    }
    return clip;
}

} // namespace

TEST_CASE("window counts for the two regimes") {
    CHECK(segment(make_clip(48000, 48000), classification_framing()).size() == 1);
    CHECK(segment(make_clip(48000, 48000), streaming_framing()).size() == 21);
    CHECK(segment(make_clip(24000, 48000), classification_framing()).empty());
}

TEST_CASE("streaming regime overlap is exactly 0.8") {
    CHECK(overlap_fraction(streaming_framing()) == 0.8);
    CHECK(overlap_fraction(classification_framing()) == 0.0);
}

TEST_CASE("non-overlapping windows tile the clip prefix exactly") {
    const auto clip = make_clip(10240, 4000);
    const FramingConfig cfg{0.25, 0.25};
    const auto windows = segment(clip, cfg);
    const std::int64_t win = window_len_samples(cfg, clip.sample_rate_hz);
    REQUIRE(windows.size() == 10);
    std::size_t pos = 0;
    for (const auto& w : windows) {
        CHECK(w.start_sample == static_cast<std::int64_t>(pos));
        for (std::int64_t i = 0; i < win; ++i) {
            CHECK(w.samples[static_cast<std::size_t>(i)] == clip.samples[pos + static_cast<std::size_t>(i)]);
        }
        pos += static_cast<std::size_t>(win);
    }
}

TEST_CASE("consecutive windows share exactly win - hop samples") {
    const auto clip = make_clip(9000, 8000);
    const FramingConfig cfg{0.5, 0.125};
    const auto windows = segment(clip, cfg);
    const std::int64_t win = window_len_samples(cfg, clip.sample_rate_hz);
    const std::int64_t hop = hop_len_samples(cfg, clip.sample_rate_hz);
    REQUIRE(windows.size() >= 2);
    for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
        for (std::int64_t i = 0; i < win - hop; ++i) {
            CHECK(windows[k].samples[static_cast<std::size_t>(hop + i)] ==
                  windows[k + 1].samples[static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("adding one hop of samples adds exactly one window") {
    Rng rng(42);
    const FramingConfig cfg{0.2, 0.05};
    const int rate = 16000;
    const std::int64_t win = window_len_samples(cfg, rate);
    const std::int64_t hop = hop_len_samples(cfg, rate);
    for (int iter = 0; iter < 50; ++iter) {
        const std::int64_t len = win + static_cast<std::int64_t>(rng.below(20000));
        const auto before = window_count(len, win, hop);
        const auto after = window_count(len + hop, win, hop);
        CHECK(after == before + 1);
    }
}

TEST_CASE("closed-form count over random clip lengths") {
    Rng rng(43);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t len = rng.below(200000);
        const auto clip = make_clip(len, 48000);
        for (const auto& cfg : {classification_framing(), streaming_framing()}) {
            const std::int64_t win = window_len_samples(cfg, 48000);
            const std::int64_t hop = hop_len_samples(cfg, 48000);
            const std::int64_t expect =
                static_cast<std::int64_t>(len) < win
                    ? 0
                    : (static_cast<std::int64_t>(len) - win) / hop + 1;
            CHECK(static_cast<std::int64_t>(segment(clip, cfg).size()) == expect);
            CHECK(window_count(static_cast<std::int64_t>(len), win, hop) == expect);
        }
    }
}

TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS(validate(FramingConfig{0.2, 0.3}), InvalidConfig);
    CHECK_THROWS_AS(validate(FramingConfig{0.0, 0.0}), InvalidConfig);
    CHECK_THROWS_AS(validate(FramingConfig{1.0, -0.1}), InvalidConfig);
    CHECK_THROWS_AS(segment(make_clip(100, 48000), FramingConfig{1.0, 2.0}), InvalidConfig);
}
