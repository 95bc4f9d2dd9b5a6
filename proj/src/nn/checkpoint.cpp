#include "acsense/nn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "acsense/errors.hpp"

using json = nlohmann::json;

namespace acsense::nn {
namespace {

constexpr char kMagic[8] = {'M', 'I', 'C', 'C', 'H', 'K', '0', '1'};
constexpr int kFormatVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) {
            c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
        }
        table[i] = c;
    }
    return table;
}

json feature_config_to_json(const FeatureConfig& cfg) {
    return json{{"n_fft", cfg.stft.n_fft},
                {"hop_length", cfg.stft.hop_length},
                {"window_fn", cfg.stft.window_fn == WindowFn::hann ? "hann" : "rectangular"},
                {"n_mels", cfg.n_mels},
                {"f_min_hz", cfg.f_min_hz},
                {"f_max_hz", cfg.f_max_hz},
                {"emphasis_enabled", cfg.emphasis.enabled},
                {"emphasis_nyquist_fraction", cfg.emphasis.nyquist_fraction},
                {"emphasis_gain", cfg.emphasis.gain},
                {"eps_floor", cfg.eps_floor}};
}

FeatureConfig feature_config_from_json(const json& j) {
    FeatureConfig cfg;
    cfg.stft.n_fft = j.at("n_fft").get<int>();
    cfg.stft.hop_length = j.at("hop_length").get<int>();
    cfg.stft.window_fn = j.at("window_fn").get<std::string>() == "hann" ? WindowFn::hann
                                                                        : WindowFn::rectangular;
    cfg.n_mels = j.at("n_mels").get<int>();
    cfg.f_min_hz = j.at("f_min_hz").get<double>();
    cfg.f_max_hz = j.at("f_max_hz").get<double>();
    cfg.emphasis.enabled = j.at("emphasis_enabled").get<bool>();
    cfg.emphasis.nyquist_fraction = j.at("emphasis_nyquist_fraction").get<double>();
    cfg.emphasis.gain = j.at("emphasis_gain").get<double>();
    cfg.eps_floor = j.at("eps_floor").get<double>();
    return cfg;
}

void append_u32le(std::string& out, std::uint32_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
    out += static_cast<char>((v >> 16) & 0xff);
    out += static_cast<char>((v >> 24) & 0xff);
}

void append_tensor(std::string& out, const TensorF& t) {
    for (float f : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        append_u32le(out, bits);
    }
}

std::uint32_t take_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// All parameter and buffer tensors of a model, in the pinned manifest order.
std::vector<std::pair<std::string, TensorF*>> model_tensors(SpectrogramCnnF& model) {
    auto list = model.trainable();
    for (auto& entry : model.buffers()) list.push_back(entry);
    return list;
}

} // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t seed) {
    static const auto table = make_crc_table();
    std::uint32_t c = seed ^ 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) {
        c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    }
    return c ^ 0xffffffffu;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    auto& model = const_cast<SpectrogramCnnF&>(ckpt.model);   // enumeration only
    auto tensors = model_tensors(model);

    std::vector<std::pair<std::string, const TensorF*>> payload;
    for (auto& [name, t] : tensors) payload.emplace_back(name, t);
    if (ckpt.adam) {
        auto named = model.trainable();
        for (std::size_t i = 0; i < named.size(); ++i) {
            payload.emplace_back("adam.m." + named[i].first, &ckpt.adam->m[i]);
            payload.emplace_back("adam.v." + named[i].first, &ckpt.adam->v[i]);
        }
    }

    json manifest = json::array();
    for (const auto& [name, t] : payload) {
        manifest.push_back(json::array({name, "f32", t->shape}));
    }
    json header{{"format_version", kFormatVersion},
                {"arch",
                 {{"blocks", json::array({json::array({1, 16}), json::array({16, 32}),
                                          json::array({32, 64})})},
                  {"kernel", 3},
                  {"stride", 2},
                  {"padding", 1},
                  {"pool", "global_avg"},
                  {"classifier", "linear"}}},
                {"n_classes", model.n_classes},
                {"class_names", ckpt.class_names},
                {"features", feature_config_to_json(ckpt.features)},
                {"feature_digest", config_digest(ckpt.features)},
                {"framing", {{"window_len_s", ckpt.framing.window_len_s}, {"hop_s", ckpt.framing.hop_s}}},
                {"has_adam", ckpt.adam.has_value()},
                {"adam_t", ckpt.adam ? ckpt.adam->t : 0},
                {"tensors", manifest}};

    const std::string header_str = header.dump();
    std::string blob;
    blob.append(kMagic, sizeof(kMagic));
    append_u32le(blob, static_cast<std::uint32_t>(header_str.size()));
    blob += header_str;
    for (const auto& [name, t] : payload) append_tensor(blob, *t);

    const std::uint32_t crc =
        crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size());
    append_u32le(blob, crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (blob.size() < sizeof(kMagic) + 8) throw BadMagic("checkpoint too small");
    if (std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
        throw BadMagic("bad checkpoint magic");
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    const std::uint32_t stored_crc = take_u32le(bytes + blob.size() - 4);
    const std::uint32_t actual_crc = crc32(bytes, blob.size() - 4);
    if (stored_crc != actual_crc) {
        throw ChecksumMismatch("checkpoint checksum mismatch in " + path);
    }

    const std::uint32_t header_len = take_u32le(bytes + sizeof(kMagic));
    const std::size_t header_off = sizeof(kMagic) + 4;
    if (header_off + header_len + 4 > blob.size()) throw TruncatedData("checkpoint header overruns file");
    json header;
    try {
        header = json::parse(blob.substr(header_off, header_len));
    } catch (const json::exception& e) {
        throw TruncatedData(std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    if (header.at("format_version").get<int>() != kFormatVersion) {
        throw VersionMismatch("checkpoint format version " +
                              std::to_string(header.at("format_version").get<int>()) +
                              " unsupported");
    }

    Checkpoint ckpt;
    ckpt.model.n_classes = header.at("n_classes").get<int>();
    ckpt.class_names = header.at("class_names").get<std::vector<std::string>>();
    ckpt.features = feature_config_from_json(header.at("features"));
    ckpt.framing.window_len_s = header.at("framing").at("window_len_s").get<double>();
    ckpt.framing.hop_s = header.at("framing").at("hop_s").get<double>();

    // Allocate model tensors, then fill from the payload in manifest order.
    ckpt.model = SpectrogramCnnF::random_init(ckpt.model.n_classes, 0);
    const bool has_adam = header.at("has_adam").get<bool>();
    if (has_adam) {
        auto named = ckpt.model.trainable();
        std::vector<TensorF*> params;
        for (auto& [name, t] : named) params.push_back(t);
        ckpt.adam = AdamState<float>::init_like(params);
        ckpt.adam->t = header.at("adam_t").get<std::int64_t>();
    }

    std::vector<std::pair<std::string, TensorF*>> dest;
    for (auto& entry : model_tensors(ckpt.model)) dest.push_back(entry);
    if (has_adam) {
        auto named = ckpt.model.trainable();
        for (std::size_t i = 0; i < named.size(); ++i) {
            dest.emplace_back("adam.m." + named[i].first, &ckpt.adam->m[i]);
            dest.emplace_back("adam.v." + named[i].first, &ckpt.adam->v[i]);
        }
    }

    const json& manifest = header.at("tensors");
    if (manifest.size() != dest.size()) {
        throw VersionMismatch("checkpoint manifest has " + std::to_string(manifest.size()) +
                              " tensors, expected " + std::to_string(dest.size()));
    }
    std::size_t off = header_off + header_len;
    for (std::size_t i = 0; i < dest.size(); ++i) {
        const auto& entry = manifest[i];
        const std::string name = entry[0].get<std::string>();
        const std::string dtype = entry[1].get<std::string>();
        const auto shape = entry[2].get<std::vector<std::int64_t>>();
        if (name != dest[i].first || dtype != "f32") {
            throw VersionMismatch("unexpected tensor '" + name + "' at manifest slot " +
                                  std::to_string(i));
        }
        TensorF& t = *dest[i].second;
        if (shape != t.shape) {
            t = TensorF(shape);
        }
        const std::size_t bytes_needed = t.data.size() * 4;
        if (off + bytes_needed > blob.size() - 4) throw TruncatedData("checkpoint payload truncated");
        for (std::size_t k = 0; k < t.data.size(); ++k) {
            const std::uint32_t bits = take_u32le(bytes + off + 4 * k);
            float f;
            std::memcpy(&f, &bits, 4);
            t.data[k] = f;
        }
        off += bytes_needed;
    }
    if (off != blob.size() - 4) throw TruncatedData("checkpoint payload has trailing bytes");
    return ckpt;
}

} // namespace acsense::nn
