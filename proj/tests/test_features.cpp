#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "acsense/errors.hpp"
#include "acsense/features.hpp"
#include "acsense/rng.hpp"
#include "oracles.hpp"

using namespace acsense;

namespace {

std::vector<float> random_signal(std::size_t n, Rng& rng) {
    std::vector<float> x(n);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return x;
}

std::vector<float> tone(double freq, int fs, std::size_t n, double amp = 0.5) {
    std::vector<float> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / fs));
    }
    return x;
}

} // namespace

TEST_CASE("mel scale formula") {
    CHECK(hz_to_mel(0.0) == 0.0);
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(hz_to_mel(-1.0), NegativeFrequency);
    CHECK_THROWS_AS(mel_to_hz(-1.0), NegativeFrequency);
}

TEST_CASE("mel scale round trip over random frequencies") {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const double f = rng.uniform(0.0, 24000.0);
        const double back = mel_to_hz(hz_to_mel(f));
        CHECK(std::abs(back - f) <= 1e-9 * std::max(1.0, f));
    }
}

TEST_CASE("degenerate single-band filterbank peaks mid-band in mel space") {
    StftConfig stft{1024, 512, WindowFn::hann};
    const int fs = 16000;
    const auto bank = build_mel_filterbank(fs, stft, 1, 0.0, fs / 2.0);
    REQUIRE(bank.n_mels == 1);
    int peak_bin = 0;
    for (int k = 0; k < bank.n_bins; ++k) {
        if (bank.weight(0, k) > bank.weight(0, peak_bin)) peak_bin = k;
    }
    const double mid_hz = mel_to_hz(hz_to_mel(fs / 2.0) / 2.0);
    const double bin_hz = static_cast<double>(fs) / stft.n_fft;
    CHECK(std::abs(peak_bin * bin_hz - mid_hz) <= bin_hz);
}

TEST_CASE("filterbank rows match the scalar reference and are well formed") {
    Rng rng(102);
    for (int iter = 0; iter < 30; ++iter) {
        const int fs = std::vector<int>{16000, 22050, 44100, 48000}[rng.below(4)];
        const int n_fft = std::vector<int>{512, 1024, 2048}[rng.below(3)];
        const int n_mels = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_fft / 16 - 3)));
        const double f_min = rng.uniform(0.0, 100.0);
        const double f_max = fs / 2.0;
        StftConfig stft{n_fft, n_fft / 2, WindowFn::hann};

        const auto bank = build_mel_filterbank(fs, stft, n_mels, f_min, f_max);
        const auto ref = oracle::reference_filterbank(fs, n_fft, n_mels, f_min, f_max);

        for (int m = 0; m < n_mels; ++m) {
            bool any_positive = false;
            int peak = -1;
            double prev = 0.0;
            bool rising = true;
            for (int k = 0; k < bank.n_bins; ++k) {
                const double w = bank.weight(m, k);
                CHECK(std::abs(w - ref[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]) <= 1e-12);
                CHECK(w >= 0.0);
                if (w > 0.0) any_positive = true;
                // unimodal: once the row starts falling it must not rise again
                if (w > prev) {
                    CHECK(rising);
                    peak = k;
                } else if (w < prev) {
                    rising = false;
                }
                prev = w;
            }
            CHECK(any_positive);
            CHECK(peak >= 0);
        }
    }
}

TEST_CASE("filterbank rejects bad bands") {
    StftConfig stft{512, 256, WindowFn::hann};
    CHECK_THROWS_AS(build_mel_filterbank(16000, stft, 8, 4000.0, 4000.0), InvalidBand);
    CHECK_THROWS_AS(build_mel_filterbank(16000, stft, 8, 5000.0, 4000.0), InvalidBand);
    CHECK_THROWS_AS(build_mel_filterbank(16000, stft, 8, 0.0, 9000.0), InvalidBand);
    CHECK_THROWS_AS(build_mel_filterbank(16000, stft, 300, 0.0, 8000.0), TooManyBands);
}

TEST_CASE("stft config invariants") {
    CHECK_THROWS_AS(stft_power(std::vector<float>(2048, 0.f), StftConfig{1000, 500, WindowFn::hann}),
                    InvalidConfig);
    CHECK_THROWS_AS(stft_power(std::vector<float>(2048, 0.f), StftConfig{512, 1024, WindowFn::hann}),
                    InvalidConfig);
    CHECK_THROWS_AS(stft_power(std::vector<float>(100, 0.f), StftConfig{512, 256, WindowFn::hann}),
                    WindowTooShort);
}

TEST_CASE("DC concentrates in bin 0 under the rectangular window") {
    const int n = 1024;
    std::vector<float> x(static_cast<std::size_t>(n), 1.0f);
    const auto p = stft_power(x, StftConfig{n, n, WindowFn::rectangular});
    REQUIRE(p.n_frames == 1);
    CHECK(p.at(0, 0) == doctest::Approx(static_cast<double>(n) * n).epsilon(1e-12));
    for (int k = 1; k < p.n_bins; ++k) {
        CHECK(std::abs(p.at(k, 0)) <= 1e-9);
    }
}

TEST_CASE("all-zero window gives an all-zero power matrix") {
    const auto p = stft_power(std::vector<float>(4096, 0.0f), StftConfig{1024, 256, WindowFn::hann});
    for (double v : p.data) CHECK(v == 0.0);
}

TEST_CASE("fft path matches the naive DFT oracle") {
    Rng rng(103);
    auto x = random_signal(1024, rng);
    const auto p = stft_power(x, StftConfig{1024, 1024, WindowFn::rectangular});
    const auto ref = oracle::naive_stft_power(x, 1024, 1024, false);
    double mean_power = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) mean_power += ref[k][0];
    mean_power /= static_cast<double>(ref.size());
    for (int k = 0; k < p.n_bins; ++k) {
        const double got = p.at(k, 0);
        const double want = ref[static_cast<std::size_t>(k)][0];
        CHECK(std::abs(got - want) <= 1e-6 * std::max(want, 1e-6 * mean_power));
    }
}

TEST_CASE("Parseval with the rectangular window") {
    Rng rng(104);
    const int n = 512;
    auto x = random_signal(2000, rng);
    const auto p = stft_power(x, StftConfig{n, 256, WindowFn::rectangular});
    for (int t = 0; t < p.n_frames; ++t) {
        double two_sided = p.at(0, t) + p.at(n / 2, t);
        for (int k = 1; k < n / 2; ++k) two_sided += 2.0 * p.at(k, t);
        double sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s = x[static_cast<std::size_t>(t * 256 + i)];
            sum_sq += s * s;
        }
        CHECK(two_sided == doctest::Approx(n * sum_sq).epsilon(1e-6));
    }
}

TEST_CASE("silence saturates at the log floor") {
    StftConfig stft{512, 256, WindowFn::hann};
    const auto bank = build_mel_filterbank(16000, stft, 16, 20.0, 8000.0);
    const auto spec = mel_spectrogram(std::vector<float>(2048, 0.0f), 16000, stft, bank,
                                      EmphasisConfig{}, 1e-10);
    for (double v : spec.data) CHECK(v == std::log(1e-10));
}

TEST_CASE("high-frequency emphasis doubles magnitude above the cutoff only") {
    const int fs = 48000;
    StftConfig stft{1024, 512, WindowFn::hann};
    const auto bank = build_mel_filterbank(fs, stft, 32, 20.0, fs / 2.0);
    EmphasisConfig off;
    EmphasisConfig on{true, 0.3, 2.0};
    const double cutoff_hz = 0.3 * fs / 2.0;   // 7200
    const double bin_hz = static_cast<double>(fs) / stft.n_fft;

    for (double tone_hz : {8000.0, 1000.0}) {
        const auto x = tone(tone_hz, fs, 12000);
        const auto plain = mel_spectrogram(x, fs, stft, bank, off, 1e-10);
        const auto emph = mel_spectrogram(x, fs, stft, bank, on, 1e-10);

        // strongest band of the un-emphasized spectrogram
        int hot = 0;
        for (int m = 1; m < plain.n_mels; ++m) {
            if (plain.at(m, 0) > plain.at(hot, 0)) hot = m;
        }

        if (tone_hz > cutoff_hz) {
            // the tone's energy sits in bins above the cutoff, so the band
            // quadruples in power: +log 4 in log-power
            for (int t = 0; t < plain.n_frames; ++t) {
                CHECK(emph.at(hot, t) - plain.at(hot, t) ==
                      doctest::Approx(std::log(4.0)).epsilon(1e-7));
            }
        } else {
            // band fully below the cutoff: bins untouched, cells bit-identical
            const int k1 = bank.row_end[static_cast<std::size_t>(hot)];
            REQUIRE((k1 - 1) * bin_hz <= cutoff_hz);
            for (int t = 0; t < plain.n_frames; ++t) {
                CHECK(emph.at(hot, t) == plain.at(hot, t));
            }
        }
    }
}

TEST_CASE("disabled emphasis equals the plain pipeline exactly") {
    Rng rng(105);
    const auto x = random_signal(4000, rng);
    StftConfig stft{512, 128, WindowFn::hann};
    const auto bank = build_mel_filterbank(16000, stft, 24, 0.0, 8000.0);
    const auto a = mel_spectrogram(x, 16000, stft, bank, EmphasisConfig{}, 1e-10);
    const auto b = mel_spectrogram(x, 16000, stft, bank, EmphasisConfig{false, 0.5, 3.0}, 1e-10);
    CHECK(a.data == b.data);
}

TEST_CASE("full pipeline matches the straight-line reference") {
    Rng rng(106);
    for (int iter = 0; iter < 6; ++iter) {
        const int fs = iter % 2 == 0 ? 16000 : 48000;
        const int n_fft = std::vector<int>{256, 512, 1024}[rng.below(3)];
        const int hop = n_fft / 2;
        const int n_mels = 8 + static_cast<int>(rng.below(9));
        const bool hann = rng.below(2) == 0;
        const bool emph = rng.below(2) == 0;
        const auto x = random_signal(static_cast<std::size_t>(n_fft) * 4, rng);

        StftConfig stft{n_fft, hop, hann ? WindowFn::hann : WindowFn::rectangular};
        const auto bank = build_mel_filterbank(fs, stft, n_mels, 20.0, fs / 2.0);
        const auto spec = mel_spectrogram(x, fs, stft, bank, EmphasisConfig{emph, 0.3, 2.0}, 1e-10);
        const auto ref = oracle::reference_mel_spectrogram(x, fs, n_fft, hop, hann, n_mels, 20.0,
                                                           fs / 2.0, emph, 0.3, 2.0, 1e-10);
        for (int m = 0; m < spec.n_mels; ++m) {
            for (int t = 0; t < spec.n_frames; ++t) {
                CHECK(std::abs(spec.at(m, t) - ref[static_cast<std::size_t>(m)][static_cast<std::size_t>(t)]) <=
                      1e-6);
            }
        }
    }
}

TEST_CASE("featurization is deterministic") {
    Rng rng(107);
    const auto x = random_signal(3000, rng);
    Featurizer f1(streaming_features());
    Featurizer f2(streaming_features());
    const auto a = f1.process(x, 16000);
    const auto b = f2.process(x, 16000);
    CHECK(a.data == b.data);
    CHECK(a.config_digest == b.config_digest);
}

TEST_CASE("raising the floor never decreases a cell") {
    Rng rng(108);
    const auto x = random_signal(2048, rng);
    StftConfig stft{512, 256, WindowFn::hann};
    const auto bank = build_mel_filterbank(16000, stft, 16, 20.0, 8000.0);
    const auto lo = mel_spectrogram(x, 16000, stft, bank, EmphasisConfig{}, 1e-12);
    const auto hi = mel_spectrogram(x, 16000, stft, bank, EmphasisConfig{}, 1e-6);
    for (std::size_t i = 0; i < lo.data.size(); ++i) {
        CHECK(hi.data[i] >= lo.data[i]);
    }
}

TEST_CASE("input gain shifts non-floored cells by 2 log a") {
    Rng rng(109);
    auto x = random_signal(2048, rng);
    StftConfig stft{512, 256, WindowFn::hann};
    const auto bank = build_mel_filterbank(16000, stft, 16, 20.0, 8000.0);
    for (double a : {2.0, 3.7}) {
        auto scaled = x;
        for (auto& v : scaled) v = static_cast<float>(v * a);
        const auto base = mel_spectrogram(x, 16000, stft, bank, EmphasisConfig{}, 1e-30);
        const auto amp = mel_spectrogram(scaled, 16000, stft, bank, EmphasisConfig{}, 1e-30);
        for (std::size_t i = 0; i < base.data.size(); ++i) {
            if (base.data[i] > std::log(1e-30) && amp.data[i] > std::log(1e-30)) {
                CHECK(amp.data[i] - base.data[i] == doctest::Approx(2.0 * std::log(a)).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("feature records round-trip through the binary dump format") {
    Rng rng(110);
    const auto x = random_signal(2048, rng);
    Featurizer f(streaming_features());
    const auto spec = f.process(x, 16000);

    std::stringstream buf;
    write_melf_record(spec, f.config().eps_floor, buf);
    double eps = 0.0;
    const auto back = read_melf_record(buf, &eps);

    CHECK(eps == f.config().eps_floor);
    CHECK(back.n_mels == spec.n_mels);
    CHECK(back.n_frames == spec.n_frames);
    for (std::size_t i = 0; i < spec.data.size(); ++i) {
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(spec.data[i])));
    }
}

TEST_CASE("digest distinguishes configurations") {
    const auto a = config_digest(classification_features());
    const auto b = config_digest(streaming_features());
    CHECK(a != b);
    auto cfg = streaming_features();
    cfg.emphasis.gain = 2.5;
    CHECK(config_digest(cfg) != config_digest(streaming_features()));
}
