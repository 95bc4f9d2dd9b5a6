// Test-only reference implementations. Everything here recomputes results
// from the documented formulas with plain scalar arithmetic, independent of
// the library's fast paths, so the two routes can be checked against each
// other.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// WAV bytes built by hand.
// ---------------------------------------------------------------------------

inline void push_u32le(std::string& out, std::uint32_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
    out += static_cast<char>((v >> 16) & 0xff);
    out += static_cast<char>((v >> 24) & 0xff);
}

inline void push_u16le(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

// Canonical 44-byte-header PCM16 mono WAV; optionally inserts a junk chunk
// between fmt and data to exercise chunk skipping.
inline std::string build_wav(const std::vector<std::int16_t>& samples, std::uint32_t rate,
                             bool junk_chunk = false, std::uint16_t channels = 1,
                             std::uint16_t format = 1, std::uint16_t bits = 16) {
    std::string data;
    for (auto s : samples) push_u16le(data, static_cast<std::uint16_t>(s));

    std::string body;
    body += "WAVE";
    body += "fmt ";
    push_u32le(body, 16);
    push_u16le(body, format);
    push_u16le(body, channels);
    push_u32le(body, rate);
    push_u32le(body, rate * channels * bits / 8);
    push_u16le(body, static_cast<std::uint16_t>(channels * bits / 8));
    push_u16le(body, bits);
    if (junk_chunk) {
        body += "LIST";
        push_u32le(body, 5);
        body += "junk!";
        body += '\0';   // pad byte for the odd-sized chunk
    }
    body += "data";
    push_u32le(body, static_cast<std::uint32_t>(data.size()));
    body += data;

    std::string out = "RIFF";
    push_u32le(out, static_cast<std::uint32_t>(body.size()));
    out += body;
    return out;
}

// The data chunk payload of a canonical WAV (for byte-for-byte comparisons).
inline std::string wav_data_chunk(const std::string& wav_bytes) {
    const auto pos = wav_bytes.find("data");
    if (pos == std::string::npos) return {};
    const std::size_t size_off = pos + 4;
    std::uint32_t size = 0;
    for (int i = 3; i >= 0; --i) {
        size = (size << 8) | static_cast<unsigned char>(wav_bytes[size_off + static_cast<std::size_t>(i)]);
    }
    return wav_bytes.substr(size_off + 4, size);
}

// ---------------------------------------------------------------------------
// Straight-line DSP reference: naive DFT -> emphasis -> triangle sums -> log.
// ---------------------------------------------------------------------------

inline std::vector<double> reference_window(int n_fft, bool hann) {
    std::vector<double> w(static_cast<std::size_t>(n_fft), 1.0);
    if (hann) {
        for (int i = 0; i < n_fft; ++i) {
            w[static_cast<std::size_t>(i)] =
                0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / n_fft);
        }
    }
    return w;
}

// O(N^2) DFT power of one frame, bins 0..n_fft/2.
inline std::vector<double> naive_dft_power(const std::vector<double>& frame) {
    const int n = static_cast<int>(frame.size());
    std::vector<double> power(static_cast<std::size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) * t / n;
            re += frame[static_cast<std::size_t>(t)] * std::cos(ang);
            im += frame[static_cast<std::size_t>(t)] * std::sin(ang);
        }
        power[static_cast<std::size_t>(k)] = re * re + im * im;
    }
    return power;
}

// Power spectrogram via the naive DFT; layout matches the library
// (bin-major: [bin][frame]).
inline std::vector<std::vector<double>> naive_stft_power(const std::vector<float>& samples,
                                                         int n_fft, int hop, bool hann) {
    const auto win = reference_window(n_fft, hann);
    const int n_frames = static_cast<int>((static_cast<std::int64_t>(samples.size()) - n_fft) / hop + 1);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_fft / 2 + 1),
                                         std::vector<double>(static_cast<std::size_t>(n_frames)));
    for (int t = 0; t < n_frames; ++t) {
        std::vector<double> frame(static_cast<std::size_t>(n_fft));
        for (int i = 0; i < n_fft; ++i) {
            frame[static_cast<std::size_t>(i)] =
                static_cast<double>(samples[static_cast<std::size_t>(t * hop + i)]) *
                win[static_cast<std::size_t>(i)];
        }
        const auto power = naive_dft_power(frame);
        for (std::size_t k = 0; k < power.size(); ++k) out[k][static_cast<std::size_t>(t)] = power[k];
    }
    return out;
}

inline double ref_hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double ref_mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangle weights recomputed edge by edge with scalar arithmetic.
inline std::vector<std::vector<double>> reference_filterbank(int fs, int n_fft, int n_mels,
                                                             double f_min, double f_max) {
    std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
    const double m_lo = ref_hz_to_mel(f_min);
    const double m_hi = ref_hz_to_mel(f_max);
    for (int j = 0; j < n_mels + 2; ++j) {
        edges[static_cast<std::size_t>(j)] = ref_mel_to_hz(m_lo + (m_hi - m_lo) * j / (n_mels + 1));
    }
    const int n_bins = n_fft / 2 + 1;
    std::vector<std::vector<double>> bank(static_cast<std::size_t>(n_mels),
                                          std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[static_cast<std::size_t>(m)];
        const double mid = edges[static_cast<std::size_t>(m) + 1];
        const double hi = edges[static_cast<std::size_t>(m) + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * fs / n_fft;
            double w = 0.0;
            if (f >= lo && f <= mid) {
                w = (f - lo) / (mid - lo);
            } else if (f > mid && f <= hi) {
                w = (hi - f) / (hi - mid);
            }
            if (w > 0.0) bank[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = w;
        }
    }
    return bank;
}

// End to end: log(max(bank . emphasized_power, eps_floor)), [mel][frame].
inline std::vector<std::vector<double>> reference_mel_spectrogram(
    const std::vector<float>& samples, int fs, int n_fft, int hop, bool hann, int n_mels,
    double f_min, double f_max, bool emphasis, double nyquist_fraction, double gain,
    double eps_floor) {
    auto power = naive_stft_power(samples, n_fft, hop, hann);
    if (emphasis) {
        const double cutoff = nyquist_fraction * fs / 2.0;
        for (std::size_t k = 0; k < power.size(); ++k) {
            if (static_cast<double>(k) * fs / n_fft > cutoff) {
                for (auto& v : power[k]) v *= gain * gain;
            }
        }
    }
    const auto bank = reference_filterbank(fs, n_fft, n_mels, f_min, f_max);
    const std::size_t n_frames = power[0].size();
    std::vector<std::vector<double>> mel(static_cast<std::size_t>(n_mels),
                                         std::vector<double>(n_frames));
    for (int m = 0; m < n_mels; ++m) {
        for (std::size_t t = 0; t < n_frames; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < power.size(); ++k) {
                acc += bank[static_cast<std::size_t>(m)][k] * power[k][t];
            }
            mel[static_cast<std::size_t>(m)][t] = std::log(std::max(acc, eps_floor));
        }
    }
    return mel;
}

// ---------------------------------------------------------------------------
// Scalar Adam reference.
// ---------------------------------------------------------------------------

struct ScalarAdam {
    double m = 0.0, v = 0.0;
    long t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    double step(double param, double grad, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad * grad;
        const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
        const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
        return param - lr * m_hat / (std::sqrt(v_hat) + eps);
    }
};

// ---------------------------------------------------------------------------
// Central finite differences.
// ---------------------------------------------------------------------------

// Gradient of f with respect to xs[i], h = 1e-3 by default.
template <typename F>
double central_diff(F&& f, double* x, double h = 1e-3) {
    const double orig = *x;
    *x = orig + h;
    const double up = f();
    *x = orig - h;
    const double down = f();
    *x = orig;
    return (up - down) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / denom;
}

} // namespace oracle
