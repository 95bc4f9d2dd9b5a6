#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acsense/features.hpp"
#include "acsense/framing.hpp"
#include "acsense/nn/checkpoint.hpp"

namespace acsense {

// One streaming feature frame. t_s is the frame's end time in stream
// seconds (sample-count-derived, not wall clock); seq is assigned when the
// frame is produced, so gaps in emitted seq values account for drops.
struct FrameEvent {
    std::int64_t seq = 0;
    double t_s = 0.0;
    std::vector<double> mel;                       // time-averaged log-mel, length n_mels
    std::vector<std::vector<double>> mel_matrix;   // full matrix when requested, else empty

    struct Pred {
        std::string class_name;
        std::vector<double> probs;
        bool is_contact = false;
    };
    std::optional<Pred> prediction;
};

enum class DropPolicy { drop_oldest, block };

struct StreamConfig {
    int sample_rate_hz = 48000;
    FramingConfig framing = streaming_framing();
    FeatureConfig features = streaming_features();
    const nn::Checkpoint* checkpoint = nullptr;   // optional classifier
    double tau = 0.5;
    std::size_t queue_capacity = 64;
    DropPolicy drop_policy = DropPolicy::drop_oldest;
    bool emit_full_matrix = false;
};

struct StreamStats {
    std::int64_t frames_emitted = 0;
    std::int64_t frames_dropped = 0;
    std::int64_t samples_read = 0;
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void write(const FrameEvent& ev) = 0;
};

// One JSON object per line, keys {seq, t_s, mel, class, probs, contact};
// floats carry at most 6 significant digits; events without a prediction
// omit the class/probs/contact keys.
void write_event(const FrameEvent& ev, std::ostream& out);

class JsonlSink : public EventSink {
public:
    explicit JsonlSink(std::ostream& out) : out_(out) {}
    void write(const FrameEvent& ev) override { write_event(ev, out_); }

private:
    std::ostream& out_;
};

// Two-stage pipeline over little-endian int16 mono PCM: the calling thread
// ingests bytes into a rolling window buffer and produces frames every hop;
// a consumer thread featurizes (and classifies, when a checkpoint is set)
// and writes events to the sink. Frames are classified on the full frame
// spectrogram; the event payload carries its time average.
StreamStats run_stream(std::istream& pcm, const StreamConfig& cfg, EventSink& sink);

} // namespace acsense
