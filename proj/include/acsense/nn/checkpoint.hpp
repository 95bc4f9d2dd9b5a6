#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acsense/features.hpp"
#include "acsense/framing.hpp"
#include "acsense/nn/adam.hpp"
#include "acsense/nn/model.hpp"

namespace acsense::nn {

// A trained model together with everything needed to reproduce its inputs:
// class names, featurization config (and digest), and framing. Optionally
// carries optimizer state so training can resume.
struct Checkpoint {
    SpectrogramCnnF model;
    std::vector<std::string> class_names;
    FeatureConfig features;
    FramingConfig framing;
    std::optional<AdamState<float>> adam;
};

// File layout: magic "MICCHK01", u32 header length, UTF-8 JSON header
// (format_version, topology, n_classes, featurization digest + config,
// class names, tensor manifest [(name, dtype, shape)]), tensor payloads in
// manifest order as little-endian f32, then a CRC32 of every preceding byte.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t seed = 0);

} // namespace acsense::nn
