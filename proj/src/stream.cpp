#include "acsense/stream.hpp"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <exception>
#include <thread>

#include "acsense/audio_io.hpp"
#include "acsense/bounded_queue.hpp"
#include "acsense/classify.hpp"
#include "acsense/errors.hpp"

namespace acsense {
namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void append_json_string(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
}

void append_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fmt6(values[i]);
    }
    out += ']';
}

struct WorkItem {
    std::int64_t seq = 0;
    double t_s = 0.0;
    std::vector<float> samples;
};

} // namespace

void write_event(const FrameEvent& ev, std::ostream& out) {
    std::string line;
    line.reserve(64 + ev.mel.size() * 10);
    line += "{\"seq\":";
    line += std::to_string(ev.seq);
    line += ",\"t_s\":";
    line += fmt6(ev.t_s);
    line += ",\"mel\":";
    append_array(line, ev.mel);
    if (!ev.mel_matrix.empty()) {
        line += ",\"mel_matrix\":[";
        for (std::size_t m = 0; m < ev.mel_matrix.size(); ++m) {
            if (m) line += ',';
            append_array(line, ev.mel_matrix[m]);
        }
        line += ']';
    }
    if (ev.prediction) {
        line += ",\"class\":";
        append_json_string(line, ev.prediction->class_name);
        line += ",\"probs\":";
        append_array(line, ev.prediction->probs);
        line += ",\"contact\":";
        line += ev.prediction->is_contact ? "true" : "false";
    }
    line += "}\n";
    out << line;
    if (!out) throw IoError("event sink write failed");
}

StreamStats run_stream(std::istream& pcm, const StreamConfig& cfg, EventSink& sink) {
    validate(cfg.framing);
    if (cfg.sample_rate_hz <= 0) throw InvalidConfig("stream: sample rate must be positive");
    const std::int64_t win = window_len_samples(cfg.framing, cfg.sample_rate_hz);
    const std::int64_t hop = hop_len_samples(cfg.framing, cfg.sample_rate_hz);
    if (win < cfg.features.stft.n_fft) {
        throw WindowTooShort("stream: frame of " + std::to_string(win) +
                             " samples is shorter than n_fft " +
                             std::to_string(cfg.features.stft.n_fft));
    }
    if (cfg.checkpoint) {
        const std::string ckpt_digest = config_digest(cfg.checkpoint->features);
        const std::string mine = config_digest(cfg.features);
        if (ckpt_digest != mine) {
            throw DigestMismatch("checkpoint featurization [" + ckpt_digest +
                                 "] != stream config [" + mine + "]");
        }
    }

    StreamStats stats;
    BoundedQueue<WorkItem> queue(cfg.queue_capacity);
    std::atomic<std::int64_t> emitted{0};
    std::exception_ptr consumer_error;
    std::atomic<bool> consumer_failed{false};

    std::thread consumer([&] {
        try {
            Featurizer featurizer(cfg.features);
            const int blank_id = cfg.checkpoint
                ? [&] {
                      for (std::size_t i = 0; i < cfg.checkpoint->class_names.size(); ++i) {
                          if (cfg.checkpoint->class_names[i] == "blank") return static_cast<int>(i);
                      }
                      return 0;
                  }()
                : 0;
            WorkItem item;
            while (queue.pop(item)) {
                MelSpectrogram spec = featurizer.process(item.samples, cfg.sample_rate_hz);
                FrameEvent ev;
                ev.seq = item.seq;
                ev.t_s = item.t_s;
                ev.mel = mel_time_average(spec);
                if (cfg.emit_full_matrix) {
                    ev.mel_matrix.resize(static_cast<std::size_t>(spec.n_mels));
                    for (int m = 0; m < spec.n_mels; ++m) {
                        auto& row = ev.mel_matrix[static_cast<std::size_t>(m)];
                        row.resize(static_cast<std::size_t>(spec.n_frames));
                        for (int t = 0; t < spec.n_frames; ++t) row[static_cast<std::size_t>(t)] = spec.at(m, t);
                    }
                }
                if (cfg.checkpoint) {
                    Prediction pred = predict(cfg.checkpoint->model, spec, blank_id, cfg.tau);
                    FrameEvent::Pred p;
                    p.class_name = cfg.checkpoint->class_names[static_cast<std::size_t>(pred.class_id)];
                    p.probs = pred.probs;
                    p.is_contact = pred.is_contact;
                    ev.prediction = std::move(p);
                }
                sink.write(ev);
                emitted.fetch_add(1, std::memory_order_relaxed);
            }
        } catch (...) {
            consumer_error = std::current_exception();
            consumer_failed.store(true);
            queue.close();
        }
    });

    // Ingest stage: bytes -> samples -> rolling window buffer -> frames.
    bool malformed = false;
    {
        std::vector<float> buffer;
        std::size_t consumed = 0;        // samples already behind the next frame start
        std::int64_t next_seq = 0;
        char raw[8192];
        char carry = 0;
        bool has_carry = false;

        while (pcm && !consumer_failed.load()) {
            pcm.read(raw, sizeof(raw));
            const std::streamsize got = pcm.gcount();
            if (got <= 0) break;

            std::size_t i = 0;
            if (has_carry) {
                const auto lo = static_cast<unsigned char>(carry);
                const auto hi = static_cast<unsigned char>(raw[0]);
                buffer.push_back(decode_sample_i16(
                    static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)))));
                ++stats.samples_read;
                has_carry = false;
                i = 1;
            }
            for (; i + 1 < static_cast<std::size_t>(got); i += 2) {
                const auto lo = static_cast<unsigned char>(raw[i]);
                const auto hi = static_cast<unsigned char>(raw[i + 1]);
                buffer.push_back(decode_sample_i16(
                    static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)))));
                ++stats.samples_read;
            }
            if (i < static_cast<std::size_t>(got)) {
                carry = raw[i];
                has_carry = true;
            }

            while (static_cast<std::int64_t>(buffer.size() - consumed) >= win) {
                WorkItem item;
                item.seq = next_seq;
                item.t_s = static_cast<double>(win + next_seq * hop) / cfg.sample_rate_hz;
                item.samples.assign(buffer.begin() + static_cast<std::ptrdiff_t>(consumed),
                                    buffer.begin() + static_cast<std::ptrdiff_t>(consumed) + win);
                ++next_seq;
                consumed += static_cast<std::size_t>(hop);

                if (cfg.drop_policy == DropPolicy::drop_oldest) {
                    stats.frames_dropped +=
                        static_cast<std::int64_t>(queue.push_drop_oldest(std::move(item)));
                } else {
                    queue.push_block(std::move(item));
                }
                if (consumer_failed.load()) break;
            }
            // keep memory bounded: discard everything behind the next frame
            if (consumed > static_cast<std::size_t>(win + hop)) {
                buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(consumed));
                consumed = 0;
            }
        }
        malformed = has_carry;
    }

    queue.close();
    consumer.join();
    if (consumer_error) std::rethrow_exception(consumer_error);
    if (malformed) throw MalformedPcm("stream ended on an odd byte count");

    stats.frames_emitted = emitted.load();
    return stats;
}

} // namespace acsense
