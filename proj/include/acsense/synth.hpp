#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acsense/audio_io.hpp"

namespace acsense {

// A material's acoustic fingerprint for the synthetic corpus: a handful of
// decaying modes for impacts plus a noise band for sliding contact.
struct MaterialProfile {
    std::string name;
    std::vector<double> modal_freqs_hz;      // 2..5 entries, strictly increasing
    std::vector<double> decay_rates_per_s;   // one per mode, > 0
    std::pair<double, double> noise_band_hz; // friction noise band (low, high)
    double brightness = 0.5;                 // in [0,1]; mode i amplitude scales as brightness^i
};

enum class InteractionKind { tap, knock, slow, drag, blank };

const char* to_string(InteractionKind kind);
InteractionKind interaction_from_string(const std::string& name);

// Per-clip perturbation ranges; keeps the classifier from memorizing
// exact waveforms.
struct JitterSpec {
    double freq_frac = 0.10;   // +-10% mode frequency
    double amp_frac = 0.20;    // +-20% amplitude
    double onset_s = 0.030;    // +-30 ms onset
};

struct CorpusSpec {
    std::vector<MaterialProfile> profiles;
    std::vector<InteractionKind> interactions;   // non-blank kinds
    int clips_per_cell = 10;
    double clip_duration_s = 1.0;
    int fs_hz = 48000;
    std::uint64_t master_seed = 1u;
    JitterSpec jitter;
};

// Nine profiles spanning rigid (high, slow-decaying modes) and soft
// (low, fast-decaying, noise-dominated) families, all four interactions,
// 10 clips per cell at 48 kHz.
CorpusSpec default_corpus_spec();

// JSON spec file; unknown keys are rejected by name.
CorpusSpec load_corpus_spec(const std::string& path);

AudioClip synth_clip(const MaterialProfile& profile, InteractionKind kind, double duration_s,
                     int fs_hz, std::uint64_t seed, const JitterSpec& jitter = {});

struct ManifestEntry {
    std::string path;
    std::string class_name;
    std::uint64_t seed;
};

// Writes WAVs in the corpus layout (class label = material name; the four
// interactions are within-class variation; blanks under "blank") plus
// manifest.csv. Deterministic in the spec: per-clip seeds are derived as
// hash(master_seed, class, index).
std::vector<ManifestEntry> generate_corpus(const CorpusSpec& spec, const std::string& out_dir);

} // namespace acsense
