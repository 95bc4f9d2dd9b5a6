#pragma once

#include <string>
#include <vector>

#include "acsense/framing.hpp"

namespace acsense {

enum class WindowFn { hann, rectangular };

struct StftConfig {
    int n_fft = 2048;       // must be a power of two
    int hop_length = 512;   // <= n_fft
    WindowFn window_fn = WindowFn::hann;
};

// High-frequency emphasis: power at FFT bins whose center frequency lies
// above nyquist_fraction * fs/2 is multiplied by gain^2 (gain applies to
// magnitude) before the filterbank and the log.
struct EmphasisConfig {
    bool enabled = false;
    double nyquist_fraction = 0.3;
    double gain = 2.0;
};

// Triangular filters equally spaced on the mel scale, sampled at FFT bin
// center frequencies k * fs / n_fft.
struct MelFilterbank {
    int n_mels = 0;
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
    int n_bins = 0;                 // n_fft/2 + 1
    std::vector<double> weights;    // n_mels x n_bins, row-major

    // Nonzero column span per row; the apply path skips the zero tails.
    std::vector<int> row_begin;
    std::vector<int> row_end;

    double weight(int mel, int bin) const {
        return weights[static_cast<std::size_t>(mel) * n_bins + bin];
    }
};

// mel = 2595 * log10(1 + f/700)
double hz_to_mel(double f_hz);
double mel_to_hz(double mel);

MelFilterbank build_mel_filterbank(int fs_hz, const StftConfig& stft, int n_mels,
                                   double f_min_hz, double f_max_hz);

// One-sided power spectrogram; rows are FFT bins, columns are time frames.
struct PowerSpectrogram {
    int n_bins = 0;
    int n_frames = 0;
    std::vector<double> data;   // n_bins x n_frames, row-major

    double at(int bin, int frame) const {
        return data[static_cast<std::size_t>(bin) * n_frames + frame];
    }
};

PowerSpectrogram stft_power(const std::vector<float>& samples, const StftConfig& cfg);

struct MelSpectrogram {
    int n_mels = 0;
    int n_frames = 0;
    std::vector<double> data;   // n_mels x n_frames, row-major log-power
    std::string config_digest;

    double at(int mel, int frame) const {
        return data[static_cast<std::size_t>(mel) * n_frames + frame];
    }
};

MelSpectrogram mel_spectrogram(const std::vector<float>& window_samples, int fs_hz,
                               const StftConfig& stft, const MelFilterbank& bank,
                               const EmphasisConfig& emph, double eps_floor);

// Mean over the time axis, one value per mel band.
std::vector<double> mel_time_average(const MelSpectrogram& spec);

// Everything that fixes the featurization semantics for one pipeline mode.
// f_max_hz == 0 means "use the Nyquist frequency of whatever rate arrives".
struct FeatureConfig {
    StftConfig stft;
    int n_mels = 64;
    double f_min_hz = 20.0;
    double f_max_hz = 0.0;
    EmphasisConfig emphasis;
    double eps_floor = 1e-10;
};

FeatureConfig classification_features();   // 2048/512 hann, 64 mels, no emphasis
FeatureConfig streaming_features();        // 1024/480 hann, 32 mels, emphasis on

// Text fingerprint of (StftConfig, filterbank params, EmphasisConfig,
// eps_floor). Checkpoints store it; mismatched pipelines are rejected.
std::string config_digest(const FeatureConfig& cfg);

// Caches the filterbank for the last seen sample rate. Cheap to copy; not
// safe to share one instance across threads while processing.
class Featurizer {
public:
    explicit Featurizer(FeatureConfig cfg);

    MelSpectrogram process(const std::vector<float>& window_samples, int fs_hz);

    const FeatureConfig& config() const { return cfg_; }
    const std::string& digest() const { return digest_; }

private:
    FeatureConfig cfg_;
    std::string digest_;
    int bank_fs_ = 0;
    MelFilterbank bank_;
};

// Binary feature dump: per window a "MELF" record — magic, u32 n_mels,
// u32 n_frames, f64 eps_floor, then n_mels*n_frames little-endian f32
// values row-major.
void write_melf_record(const MelSpectrogram& spec, double eps_floor, std::ostream& out);
MelSpectrogram read_melf_record(std::istream& in, double* eps_floor_out = nullptr);

} // namespace acsense
