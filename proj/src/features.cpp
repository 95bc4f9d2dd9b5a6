#include "acsense/features.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "acsense/errors.hpp"

namespace acsense {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate_stft(const StftConfig& cfg) {
    if (!is_power_of_two(cfg.n_fft) || cfg.n_fft < 2) {
        throw InvalidConfig("stft: n_fft must be a power of two >= 2");
    }
    if (cfg.hop_length < 1 || cfg.hop_length > cfg.n_fft) {
        throw InvalidConfig("stft: hop_length must be in [1, n_fft]");
    }
}

// In-place iterative radix-2 FFT. Twiddles come from a table indexed by
// k*n/len, so no incremental rotation error accumulates.
void fft_radix2(std::vector<double>& re, std::vector<double>& im,
                const std::vector<double>& cos_tab, const std::vector<double>& sin_tab) {
    const std::size_t n = re.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const double wr = cos_tab[k * step];
                const double wi = sin_tab[k * step];
                const std::size_t a = i + k;
                const std::size_t b = i + k + len / 2;
                const double tr = re[b] * wr - im[b] * wi;
                const double ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_u32le(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw TruncatedData("unexpected end of feature record");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

double hz_to_mel(double f_hz) {
    if (f_hz < 0.0) throw NegativeFrequency("hz_to_mel: f = " + std::to_string(f_hz));
    return 2595.0 * std::log10(1.0 + f_hz / 700.0);
}

double mel_to_hz(double mel) {
    if (mel < 0.0) throw NegativeFrequency("mel_to_hz: mel = " + std::to_string(mel));
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank build_mel_filterbank(int fs_hz, const StftConfig& stft, int n_mels,
                                   double f_min_hz, double f_max_hz) {
    validate_stft(stft);
    if (n_mels < 1) throw InvalidBand("filterbank: n_mels must be >= 1");
    if (!(f_min_hz >= 0.0) || !(f_min_hz < f_max_hz)) {
        throw InvalidBand("filterbank: need 0 <= f_min < f_max");
    }
    if (f_max_hz > fs_hz / 2.0 + 1e-9) {
        throw InvalidBand("filterbank: f_max above Nyquist");
    }
    const int n_bins = stft.n_fft / 2 + 1;
    if (n_bins < n_mels + 2) {
        throw TooManyBands("filterbank: " + std::to_string(n_mels) + " bands need at least " +
                           std::to_string(n_mels + 2) + " FFT bins, have " + std::to_string(n_bins));
    }

    // n_mels + 2 edges equally spaced in mel between f_min and f_max.
    std::vector<double> edges_hz(static_cast<std::size_t>(n_mels) + 2);
    const double mel_lo = hz_to_mel(f_min_hz);
    const double mel_hi = hz_to_mel(f_max_hz);
    for (int j = 0; j < n_mels + 2; ++j) {
        const double mel = mel_lo + (mel_hi - mel_lo) * j / (n_mels + 1);
        edges_hz[static_cast<std::size_t>(j)] = mel_to_hz(mel);
    }

    MelFilterbank bank;
    bank.n_mels = n_mels;
    bank.f_min_hz = f_min_hz;
    bank.f_max_hz = f_max_hz;
    bank.n_bins = n_bins;
    bank.weights.assign(static_cast<std::size_t>(n_mels) * n_bins, 0.0);
    bank.row_begin.assign(static_cast<std::size_t>(n_mels), 0);
    bank.row_end.assign(static_cast<std::size_t>(n_mels), 0);

    const double bin_hz = static_cast<double>(fs_hz) / stft.n_fft;
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges_hz[static_cast<std::size_t>(m)];
        const double mid = edges_hz[static_cast<std::size_t>(m) + 1];
        const double hi = edges_hz[static_cast<std::size_t>(m) + 2];
        int first = -1, last = -1;
        for (int k = 0; k < n_bins; ++k) {
            const double f = k * bin_hz;
            double w = 0.0;
            if (f >= lo && f <= mid) {
                w = (f - lo) / (mid - lo);
            } else if (f > mid && f <= hi) {
                w = (hi - f) / (hi - mid);
            }
            if (w > 0.0) {
                bank.weights[static_cast<std::size_t>(m) * n_bins + k] = w;
                if (first < 0) first = k;
                last = k;
            }
        }
        bank.row_begin[static_cast<std::size_t>(m)] = first < 0 ? 0 : first;
        bank.row_end[static_cast<std::size_t>(m)] = first < 0 ? 0 : last + 1;
    }
    return bank;
}

PowerSpectrogram stft_power(const std::vector<float>& samples, const StftConfig& cfg) {
    validate_stft(cfg);
    const std::int64_t len = static_cast<std::int64_t>(samples.size());
    if (len < cfg.n_fft) {
        throw WindowTooShort("stft: " + std::to_string(len) + " samples < n_fft " +
                             std::to_string(cfg.n_fft));
    }
    const std::size_t n = static_cast<std::size_t>(cfg.n_fft);
    const int n_bins = cfg.n_fft / 2 + 1;
    const int n_frames = static_cast<int>((len - cfg.n_fft) / cfg.hop_length + 1);

    std::vector<double> win(n, 1.0);
    if (cfg.window_fn == WindowFn::hann) {
        for (std::size_t i = 0; i < n; ++i) {
            win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
        }
    }
    std::vector<double> cos_tab(n), sin_tab(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / n;
        cos_tab[k] = std::cos(ang);
        sin_tab[k] = std::sin(ang);
    }

    PowerSpectrogram out;
    out.n_bins = n_bins;
    out.n_frames = n_frames;
    out.data.assign(static_cast<std::size_t>(n_bins) * n_frames, 0.0);

    std::vector<double> re(n), im(n);
    for (int t = 0; t < n_frames; ++t) {
        const std::size_t off = static_cast<std::size_t>(t) * cfg.hop_length;
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = static_cast<double>(samples[off + i]) * win[i];
            im[i] = 0.0;
        }
        fft_radix2(re, im, cos_tab, sin_tab);
        for (int k = 0; k < n_bins; ++k) {
            out.data[static_cast<std::size_t>(k) * n_frames + t] = re[k] * re[k] + im[k] * im[k];
        }
    }
    return out;
}

MelSpectrogram mel_spectrogram(const std::vector<float>& window_samples, int fs_hz,
                               const StftConfig& stft, const MelFilterbank& bank,
                               const EmphasisConfig& emph, double eps_floor) {
    if (bank.n_bins != stft.n_fft / 2 + 1) {
        throw InvalidConfig("mel_spectrogram: filterbank bins do not match n_fft");
    }
    if (!(eps_floor > 0.0)) throw InvalidConfig("mel_spectrogram: eps_floor must be > 0");

    PowerSpectrogram p = stft_power(window_samples, stft);

    if (emph.enabled) {
        const double cutoff_hz = emph.nyquist_fraction * fs_hz / 2.0;
        const double power_gain = emph.gain * emph.gain;
        const double bin_hz = static_cast<double>(fs_hz) / stft.n_fft;
        for (int k = 0; k < p.n_bins; ++k) {
            if (k * bin_hz > cutoff_hz) {
                double* row = p.data.data() + static_cast<std::size_t>(k) * p.n_frames;
                for (int t = 0; t < p.n_frames; ++t) row[t] *= power_gain;
            }
        }
    }

    MelSpectrogram spec;
    spec.n_mels = bank.n_mels;
    spec.n_frames = p.n_frames;
    spec.data.assign(static_cast<std::size_t>(bank.n_mels) * p.n_frames, 0.0);
    for (int m = 0; m < bank.n_mels; ++m) {
        const int k0 = bank.row_begin[static_cast<std::size_t>(m)];
        const int k1 = bank.row_end[static_cast<std::size_t>(m)];
        double* out_row = spec.data.data() + static_cast<std::size_t>(m) * p.n_frames;
        for (int t = 0; t < p.n_frames; ++t) {
            double acc = 0.0;
            for (int k = k0; k < k1; ++k) {
                acc += bank.weight(m, k) * p.at(k, t);
            }
            out_row[t] = std::log(std::max(acc, eps_floor));
        }
    }

    FeatureConfig cfg;
    cfg.stft = stft;
    cfg.n_mels = bank.n_mels;
    cfg.f_min_hz = bank.f_min_hz;
    cfg.f_max_hz = bank.f_max_hz;
    cfg.emphasis = emph;
    cfg.eps_floor = eps_floor;
    spec.config_digest = config_digest(cfg);
    return spec;
}

std::vector<double> mel_time_average(const MelSpectrogram& spec) {
    std::vector<double> avg(static_cast<std::size_t>(spec.n_mels), 0.0);
    for (int m = 0; m < spec.n_mels; ++m) {
        double acc = 0.0;
        for (int t = 0; t < spec.n_frames; ++t) acc += spec.at(m, t);
        avg[static_cast<std::size_t>(m)] = acc / spec.n_frames;
    }
    return avg;
}

FeatureConfig classification_features() {
    FeatureConfig cfg;
    cfg.stft = {2048, 512, WindowFn::hann};
    cfg.n_mels = 64;
    cfg.f_min_hz = 20.0;
    cfg.f_max_hz = 0.0;
    cfg.emphasis.enabled = false;
    cfg.eps_floor = 1e-10;
    return cfg;
}

FeatureConfig streaming_features() {
    FeatureConfig cfg;
    cfg.stft = {1024, 480, WindowFn::hann};
    cfg.n_mels = 32;
    cfg.f_min_hz = 20.0;
    cfg.f_max_hz = 0.0;
    cfg.emphasis.enabled = true;
    cfg.emphasis.nyquist_fraction = 0.3;
    cfg.emphasis.gain = 2.0;
    cfg.eps_floor = 1e-10;
    return cfg;
}

std::string config_digest(const FeatureConfig& cfg) {
    std::string s = "fft=" + std::to_string(cfg.stft.n_fft);
    s += ";hop=" + std::to_string(cfg.stft.hop_length);
    s += ";win=";
    s += cfg.stft.window_fn == WindowFn::hann ? "hann" : "rect";
    s += ";mels=" + std::to_string(cfg.n_mels);
    s += ";fmin=" + format_double(cfg.f_min_hz);
    s += ";fmax=" + (cfg.f_max_hz == 0.0 ? std::string("nyq") : format_double(cfg.f_max_hz));
    s += ";emph=";
    if (cfg.emphasis.enabled) {
        s += format_double(cfg.emphasis.nyquist_fraction) + "x" + format_double(cfg.emphasis.gain);
    } else {
        s += "off";
    }
    s += ";floor=" + format_double(cfg.eps_floor);
    return s;
}

Featurizer::Featurizer(FeatureConfig cfg) : cfg_(cfg), digest_(config_digest(cfg)) {}

MelSpectrogram Featurizer::process(const std::vector<float>& window_samples, int fs_hz) {
    if (fs_hz != bank_fs_) {
        const double f_max = cfg_.f_max_hz == 0.0 ? fs_hz / 2.0 : cfg_.f_max_hz;
        bank_ = build_mel_filterbank(fs_hz, cfg_.stft, cfg_.n_mels, cfg_.f_min_hz, f_max);
        bank_fs_ = fs_hz;
    }
    MelSpectrogram spec =
        mel_spectrogram(window_samples, fs_hz, cfg_.stft, bank_, cfg_.emphasis, cfg_.eps_floor);
    spec.config_digest = digest_;
    return spec;
}

void write_melf_record(const MelSpectrogram& spec, double eps_floor, std::ostream& out) {
    out.write("MELF", 4);
    write_u32le(out, static_cast<std::uint32_t>(spec.n_mels));
    write_u32le(out, static_cast<std::uint32_t>(spec.n_frames));
    std::uint64_t bits;
    std::memcpy(&bits, &eps_floor, 8);
    write_u32le(out, static_cast<std::uint32_t>(bits & 0xffffffffu));
    write_u32le(out, static_cast<std::uint32_t>(bits >> 32));
    for (double v : spec.data) {
        const float f = static_cast<float>(v);
        std::uint32_t fb;
        std::memcpy(&fb, &f, 4);
        write_u32le(out, fb);
    }
}

MelSpectrogram read_melf_record(std::istream& in, double* eps_floor_out) {
    char magic[4];
    in.read(magic, 4);
    if (!in) throw TruncatedData("no feature record at stream position");
    if (std::memcmp(magic, "MELF", 4) != 0) throw BadMagic("bad feature record magic");
    MelSpectrogram spec;
    spec.n_mels = static_cast<int>(read_u32le(in));
    spec.n_frames = static_cast<int>(read_u32le(in));
    const std::uint64_t lo = read_u32le(in);
    const std::uint64_t hi = read_u32le(in);
    const std::uint64_t bits = lo | (hi << 32);
    double eps = 0.0;
    std::memcpy(&eps, &bits, 8);
    if (eps_floor_out) *eps_floor_out = eps;
    spec.data.resize(static_cast<std::size_t>(spec.n_mels) * spec.n_frames);
    for (auto& v : spec.data) {
        const std::uint32_t fb = read_u32le(in);
        float f;
        std::memcpy(&f, &fb, 4);
        v = static_cast<double>(f);
    }
    return spec;
}

} // namespace acsense
