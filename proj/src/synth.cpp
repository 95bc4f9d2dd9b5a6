#include "acsense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "acsense/errors.hpp"
#include "acsense/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace acsense {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// RBJ-style constant-peak-gain bandpass biquad.
struct Biquad {
    double b0, b1, b2, a1, a2;
    double z1 = 0.0, z2 = 0.0;

    static Biquad bandpass(double f_lo, double f_hi, int fs) {
        const double f0 = std::sqrt(f_lo * f_hi);
        const double q = f0 / (f_hi - f_lo);
        const double w0 = kTwoPi * f0 / fs;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad bi{};
        bi.b0 = alpha / a0;
        bi.b1 = 0.0;
        bi.b2 = -alpha / a0;
        bi.a1 = -2.0 * std::cos(w0) / a0;
        bi.a2 = (1.0 - alpha) / a0;
        return bi;
    }

    double process(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

void validate_profile(const MaterialProfile& p, int fs_hz) {
    if (p.modal_freqs_hz.size() < 2 || p.modal_freqs_hz.size() > 5) {
        throw InvalidConfig("profile '" + p.name + "': need 2..5 modal frequencies");
    }
    if (p.decay_rates_per_s.size() != p.modal_freqs_hz.size()) {
        throw InvalidConfig("profile '" + p.name + "': decay count != mode count");
    }
    double prev = 0.0;
    for (double f : p.modal_freqs_hz) {
        if (f <= prev) throw InvalidConfig("profile '" + p.name + "': modes must increase");
        if (f >= fs_hz / 2.0) throw InvalidConfig("profile '" + p.name + "': mode above Nyquist");
        prev = f;
    }
    for (double d : p.decay_rates_per_s) {
        if (!(d > 0.0)) throw InvalidConfig("profile '" + p.name + "': decay rates must be > 0");
    }
    if (p.brightness < 0.0 || p.brightness > 1.0) {
        throw InvalidConfig("profile '" + p.name + "': brightness outside [0,1]");
    }
}

// Decaying sinusoid sum starting at onset; amplitude of mode i falls off as
// brightness^i, extra_damping scales all decay rates.
void add_modes(std::vector<double>& out, const MaterialProfile& p, int fs_hz, double onset_s,
               double extra_damping, double level, Rng& rng, const JitterSpec& jitter) {
    const std::size_t onset = static_cast<std::size_t>(std::llround(onset_s * fs_hz));
    std::vector<double> freqs, decays, amps, phases;
    double amp = 1.0;
    for (std::size_t i = 0; i < p.modal_freqs_hz.size(); ++i) {
        double f = p.modal_freqs_hz[i] * (1.0 + jitter.freq_frac * (2.0 * rng.uniform01() - 1.0));
        f = std::min(f, 0.49 * fs_hz);
        freqs.push_back(f);
        decays.push_back(p.decay_rates_per_s[i] * extra_damping);
        amps.push_back(amp);
        phases.push_back(rng.uniform(0.0, kTwoPi));
        amp *= p.brightness;
    }
    for (std::size_t n = onset; n < out.size(); ++n) {
        const double t = static_cast<double>(n - onset) / fs_hz;
        double s = 0.0;
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            s += amps[i] * std::exp(-decays[i] * t) * std::sin(kTwoPi * freqs[i] * t + phases[i]);
        }
        out[n] += level * s;
    }
}

// Unit-RMS noise through the material's band, cascaded twice for steeper skirts.
std::vector<double> band_noise(std::size_t n, const MaterialProfile& p, int fs_hz, Rng& rng) {
    double lo = std::max(10.0, p.noise_band_hz.first);
    double hi = std::min(0.45 * fs_hz, p.noise_band_hz.second);
    if (hi <= lo) hi = lo * 1.5;
    Biquad f1 = Biquad::bandpass(lo, hi, fs_hz);
    Biquad f2 = Biquad::bandpass(lo, hi, fs_hz);
    std::vector<double> out(n);
    double sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = f2.process(f1.process(rng.normal()));
        sumsq += out[i] * out[i];
    }
    const double rms = std::sqrt(sumsq / static_cast<double>(n));
    if (rms > 0.0) {
        for (auto& v : out) v /= rms;
    }
    return out;
}

void scale_to_peak(std::vector<double>& out, double target) {
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
        const double s = target / peak;
        for (auto& v : out) v *= s;
    }
}

} // namespace

const char* to_string(InteractionKind kind) {
    switch (kind) {
        case InteractionKind::tap: return "tap";
        case InteractionKind::knock: return "knock";
        case InteractionKind::slow: return "slow";
        case InteractionKind::drag: return "drag";
        case InteractionKind::blank: return "blank";
    }
    return "?";
}

InteractionKind interaction_from_string(const std::string& name) {
    if (name == "tap") return InteractionKind::tap;
    if (name == "knock") return InteractionKind::knock;
    if (name == "slow") return InteractionKind::slow;
    if (name == "drag") return InteractionKind::drag;
    if (name == "blank") return InteractionKind::blank;
    throw InvalidConfig("unknown interaction '" + name + "'");
}

AudioClip synth_clip(const MaterialProfile& profile, InteractionKind kind, double duration_s,
                     int fs_hz, std::uint64_t seed, const JitterSpec& jitter) {
    if (duration_s < 0.25) throw InvalidDuration("clip duration must be >= 0.25 s");
    if (fs_hz < 8000) throw InvalidConfig("synth requires fs >= 8000 Hz");

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
    std::vector<double> out(n, 0.0);
    Rng rng(seed);

    if (kind == InteractionKind::blank) {
        // -60 dBFS noise floor
        for (auto& v : out) v = 1e-3 * rng.normal();
    } else {
        validate_profile(profile, fs_hz);
        const double amp_jit = 1.0 + jitter.amp_frac * (2.0 * rng.uniform01() - 1.0);
        double onset = 0.05 + jitter.onset_s * (2.0 * rng.uniform01() - 1.0);
        onset = std::max(0.0, onset);

        switch (kind) {
            case InteractionKind::tap:
                add_modes(out, profile, fs_hz, onset, 5.0, 1.0, rng, jitter);
                scale_to_peak(out, 0.25 * amp_jit);
                break;
            case InteractionKind::knock:
                add_modes(out, profile, fs_hz, onset, 1.0, 1.0, rng, jitter);
                scale_to_peak(out, 0.75 * amp_jit);
                break;
            case InteractionKind::slow: {
                // gradual press: ramped band noise plus faint mode excitation
                const auto noise = band_noise(n, profile, fs_hz, rng);
                const std::size_t start = static_cast<std::size_t>(std::llround(onset * fs_hz));
                const double ramp_len = std::max(1.0, 0.6 * (static_cast<double>(n) - start));
                for (std::size_t i = start; i < n; ++i) {
                    const double env = std::min(1.0, static_cast<double>(i - start) / ramp_len);
                    out[i] += env * noise[i];
                }
                scale_to_peak(out, 0.10 * amp_jit);
                add_modes(out, profile, fs_hz, onset, 4.0, 0.02, rng, jitter);
                break;
            }
            case InteractionKind::drag: {
                // sustained sliding: band noise with slow amplitude flutter
                const auto noise = band_noise(n, profile, fs_hz, rng);
                const double flutter_hz = rng.uniform(4.0, 9.0);
                const double flutter_phase = rng.uniform(0.0, kTwoPi);
                const std::size_t start = static_cast<std::size_t>(std::llround(onset * fs_hz));
                for (std::size_t i = start; i < n; ++i) {
                    const double t = static_cast<double>(i) / fs_hz;
                    const double flutter = 1.0 + 0.35 * std::sin(kTwoPi * flutter_hz * t + flutter_phase);
                    out[i] += flutter * noise[i];
                }
                scale_to_peak(out, 0.40 * amp_jit);
                break;
            }
            case InteractionKind::blank:
                break;
        }
    }

    AudioClip clip;
    clip.sample_rate_hz = fs_hz;
    clip.source_id = std::string(profile.name.empty() ? "blank" : profile.name) + "/" + to_string(kind);
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        clip.samples[i] = static_cast<float>(std::clamp(out[i], -0.99, 0.99));
    }
    return clip;
}

CorpusSpec default_corpus_spec() {
    CorpusSpec spec;
    spec.interactions = {InteractionKind::tap, InteractionKind::knock, InteractionKind::slow,
                         InteractionKind::drag};
    spec.clips_per_cell = 10;
    spec.clip_duration_s = 1.0;
    spec.fs_hz = 48000;
    spec.master_seed = 1;

    // Rigid family: high, slowly decaying modes. Soft family: low, heavily
    // damped modes with noise-dominated contact.
    spec.profiles = {
        {"glass_cup", {1200, 3150, 6420, 9800}, {3, 4, 5, 6}, {4000, 9000}, 0.90},
        {"ceramic_mug", {900, 2300, 4900, 7600}, {6, 8, 10, 12}, {3000, 7000}, 0.80},
        {"steel_tumbler", {1600, 4200, 8300, 11500}, {2.5, 3, 4, 5}, {5000, 11000}, 1.00},
        {"plastic_lid", {700, 1900, 3400}, {25, 35, 45}, {1500, 4500}, 0.55},
        {"wooden_table", {450, 1150, 2250}, {18, 26, 34}, {800, 3000}, 0.50},
        {"human_skin", {250, 600}, {60, 90}, {300, 1200}, 0.20},
        {"leather_case", {320, 820}, {45, 70}, {500, 2000}, 0.30},
        {"plush_toy", {180, 420}, {80, 120}, {200, 900}, 0.15},
        {"notebook", {380, 950}, {50, 80}, {600, 2500}, 0.35},
    };
    return spec;
}

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw InvalidConfig("unknown key '" + key + "' in " + where);
        }
    }
}

} // namespace

CorpusSpec load_corpus_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus spec " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidConfig("corpus spec " + path + ": " + e.what());
    }

    CorpusSpec spec = default_corpus_spec();
    reject_unknown_keys(j, {"profiles", "interactions", "clips_per_cell", "clip_duration_s",
                            "fs_hz", "master_seed", "jitter"},
                        "corpus spec");
    if (j.contains("clips_per_cell")) spec.clips_per_cell = j["clips_per_cell"].get<int>();
    if (j.contains("clip_duration_s")) spec.clip_duration_s = j["clip_duration_s"].get<double>();
    if (j.contains("fs_hz")) spec.fs_hz = j["fs_hz"].get<int>();
    if (j.contains("master_seed")) spec.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("jitter")) {
        const auto& jt = j["jitter"];
        reject_unknown_keys(jt, {"freq_frac", "amp_frac", "onset_s"}, "jitter");
        if (jt.contains("freq_frac")) spec.jitter.freq_frac = jt["freq_frac"].get<double>();
        if (jt.contains("amp_frac")) spec.jitter.amp_frac = jt["amp_frac"].get<double>();
        if (jt.contains("onset_s")) spec.jitter.onset_s = jt["onset_s"].get<double>();
    }
    if (j.contains("interactions")) {
        spec.interactions.clear();
        for (const auto& name : j["interactions"]) {
            spec.interactions.push_back(interaction_from_string(name.get<std::string>()));
        }
    }
    if (j.contains("profiles")) {
        spec.profiles.clear();
        for (const auto& p : j["profiles"]) {
            reject_unknown_keys(p, {"name", "modal_freqs_hz", "decay_rates_per_s",
                                    "noise_band_hz", "brightness"},
                                "profile");
            MaterialProfile mp;
            mp.name = p.at("name").get<std::string>();
            mp.modal_freqs_hz = p.at("modal_freqs_hz").get<std::vector<double>>();
            mp.decay_rates_per_s = p.at("decay_rates_per_s").get<std::vector<double>>();
            const auto band = p.at("noise_band_hz").get<std::vector<double>>();
            if (band.size() != 2) throw InvalidConfig("profile '" + mp.name + "': noise_band_hz needs [lo, hi]");
            mp.noise_band_hz = {band[0], band[1]};
            if (p.contains("brightness")) mp.brightness = p["brightness"].get<double>();
            spec.profiles.push_back(std::move(mp));
        }
    }
    return spec;
}

std::vector<ManifestEntry> generate_corpus(const CorpusSpec& spec, const std::string& out_dir) {
    if (spec.profiles.empty()) throw InvalidConfig("corpus spec has no profiles");
    if (spec.interactions.empty()) throw InvalidConfig("corpus spec has no interactions");
    if (spec.clips_per_cell < 1) throw InvalidConfig("clips_per_cell must be >= 1");
    for (auto kind : spec.interactions) {
        if (kind == InteractionKind::blank) {
            throw InvalidConfig("blank is generated implicitly; do not list it as an interaction");
        }
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    std::vector<ManifestEntry> manifest;
    auto emit = [&](const MaterialProfile& profile, InteractionKind kind, const std::string& cls,
                    int index) {
        const std::uint64_t seed = derive_seed(spec.master_seed, cls, static_cast<std::uint64_t>(index));
        AudioClip clip = synth_clip(profile, kind, spec.clip_duration_s, spec.fs_hz, seed, spec.jitter);
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03d.wav", to_string(kind), index);
        const fs::path dir = fs::path(out_dir) / cls;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string());
        const fs::path path = dir / name;
        write_wav(clip, path.string());
        manifest.push_back({(fs::path(cls) / name).string(), cls, seed});
    };

    for (const auto& profile : spec.profiles) {
        int index = 0;
        for (auto kind : spec.interactions) {
            for (int c = 0; c < spec.clips_per_cell; ++c) {
                emit(profile, kind, profile.name, index++);
            }
        }
    }
    const int blank_count = static_cast<int>(spec.interactions.size()) * spec.clips_per_cell;
    MaterialProfile dummy;
    for (int i = 0; i < blank_count; ++i) {
        emit(dummy, InteractionKind::blank, "blank", i);
    }

    std::ofstream mf(fs::path(out_dir) / "manifest.csv");
    if (!mf) throw IoError("cannot write manifest.csv");
    mf << "path,class,seed\n";
    for (const auto& e : manifest) {
        mf << e.path << "," << e.class_name << "," << e.seed << "\n";
    }
    return manifest;
}

} // namespace acsense
