#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emogene/errors.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

inline constexpr std::size_t kLandmarkPoints = 68;
inline constexpr std::size_t kLandmarkDims = 3;
inline constexpr std::size_t kLandmarkFlat = kLandmarkPoints * kLandmarkDims;  // 204
inline constexpr std::size_t kPoseDim = 12;  // flattened 3x4 rotation|translation

// Per-frame 68x3 landmark tensor, centered canonical units.
struct LandmarkSequence {
    Tensor<float> values;  // {frames, 68, 3}

    LandmarkSequence() : values({0, kLandmarkPoints, kLandmarkDims}) {}
    explicit LandmarkSequence(std::size_t frames)
        : values({frames, kLandmarkPoints, kLandmarkDims}) {}

    std::size_t frames() const { return values.shape[0]; }
    float& at(std::size_t f, std::size_t p, std::size_t d) { return values.at(f, p, d); }
    float at(std::size_t f, std::size_t p, std::size_t d) const { return values.at(f, p, d); }

    // One frame flattened to {204}
    Tensor<float> frame_flat(std::size_t f) const {
        Tensor<float> out({kLandmarkFlat});
        std::copy(values.data.begin() + f * kLandmarkFlat,
                  values.data.begin() + (f + 1) * kLandmarkFlat, out.data.begin());
        return out;
    }
};

// Per-frame audio feature vectors plus a scalar RMS energy track.
struct AudioFeatureSequence {
    Tensor<float> features;     // {frames, feature_dim}
    std::vector<float> energy;  // frames, >= 0

    std::size_t frames() const { return features.shape.empty() ? 0 : features.shape[0]; }
    std::size_t feature_dim() const { return features.shape.size() < 2 ? 0 : features.shape[1]; }

    float mean_energy() const {
        if (energy.empty()) return 0.f;
        double s = 0;
        for (float e : energy) s += e;
        return static_cast<float>(s / energy.size());
    }
};

// Per-frame head pose, flattened 3x4 rotation-translation rows.
struct PoseTensor {
    Tensor<float> values;  // {frames, 12}

    PoseTensor() : values({0, kPoseDim}) {}
    explicit PoseTensor(std::size_t frames) : values({frames, kPoseDim}) {}

    std::size_t frames() const { return values.shape[0]; }
    float* row(std::size_t f) { return &values.data[f * kPoseDim]; }
    const float* row(std::size_t f) const { return &values.data[f * kPoseDim]; }
};

enum class EmotionLabel : int {
    Happy = 0,
    Sad,
    Angry,
    Surprise,
    Disgust,
    Neutral,
    Contempt,
    Fear,
};

inline constexpr std::size_t kEmotionCount = 8;

inline const std::array<std::string, kEmotionCount>& emotion_names() {
    static const std::array<std::string, kEmotionCount> names = {
        "happy", "sad", "angry", "surprise", "disgust", "neutral", "contempt", "fear"};
    return names;
}

inline std::string to_string(EmotionLabel e) {
    return emotion_names()[static_cast<int>(e)];
}

inline std::optional<EmotionLabel> parse_emotion(const std::string& s) {
    const auto& names = emotion_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return static_cast<EmotionLabel>(i);
    return std::nullopt;
}

// Named-tensor parameter set; round-trips bit-exactly through save/load.
struct Checkpoint {
    std::map<std::string, Tensor<float>> tensors;
    std::uint32_t version = 1;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Binary I/O. All formats little-endian with a 4-byte magic.

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw IoError(IoCode::Truncated, std::string("truncated reading ") + what);
}

inline void write_u32(std::ostream& os, std::uint32_t v) { write_bytes(os, &v, 4); }
inline void write_u64(std::ostream& os, std::uint64_t v) { write_bytes(os, &v, 8); }

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v;
    read_bytes(is, &v, 4, what);
    return v;
}
inline std::uint64_t read_u64(std::istream& is, const char* what) {
    std::uint64_t v;
    read_bytes(is, &v, 8, what);
    return v;
}

inline void expect_magic(std::istream& is, const char magic[4], const char* fmt) {
    char buf[4];
    read_bytes(is, buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0)
        throw IoError(IoCode::BadMagic, std::string("bad magic for ") + fmt);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(IoCode::OpenFailed, "cannot open for write: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(IoCode::OpenFailed, "cannot open for read: " + path);
    return is;
}

}  // namespace detail

// LMK1: magic, u32 frames/points/dims, then frames*points*dims f32.
inline void save_landmarks(const LandmarkSequence& seq, const std::string& path) {
    auto os = detail::open_out(path);
    detail::write_bytes(os, "LMK1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(seq.frames()));
    detail::write_u32(os, static_cast<std::uint32_t>(kLandmarkPoints));
    detail::write_u32(os, static_cast<std::uint32_t>(kLandmarkDims));
    detail::write_bytes(os, seq.values.data.data(), seq.values.size() * 4);
}

inline LandmarkSequence load_landmarks(const std::string& path) {
    auto is = detail::open_in(path);
    detail::expect_magic(is, "LMK1", "landmarks");
    const auto frames = detail::read_u32(is, "frames");
    const auto points = detail::read_u32(is, "points");
    const auto dims = detail::read_u32(is, "dims");
    if (points != kLandmarkPoints || dims != kLandmarkDims)
        throw IoError(IoCode::BadPointCount,
                      "landmark file is not 68x3: " + std::to_string(points) + "x" +
                          std::to_string(dims));
    LandmarkSequence seq(frames);
    detail::read_bytes(is, seq.values.data.data(), seq.values.size() * 4, "landmark payload");
    return seq;
}

// POS1: magic, u32 frames, u32 dim (12), then frames*12 f32.
inline void save_poses(const PoseTensor& poses, const std::string& path) {
    auto os = detail::open_out(path);
    detail::write_bytes(os, "POS1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(poses.frames()));
    detail::write_u32(os, static_cast<std::uint32_t>(kPoseDim));
    detail::write_bytes(os, poses.values.data.data(), poses.values.size() * 4);
}

inline PoseTensor load_poses(const std::string& path) {
    auto is = detail::open_in(path);
    detail::expect_magic(is, "POS1", "poses");
    const auto frames = detail::read_u32(is, "frames");
    const auto dim = detail::read_u32(is, "dim");
    if (dim != kPoseDim)
        throw IoError(IoCode::BadHeader, "pose dim != 12");
    PoseTensor poses(frames);
    detail::read_bytes(is, poses.values.data.data(), poses.values.size() * 4, "pose payload");
    return poses;
}

// AUD1: magic, u32 frames, u32 feature_dim, features f32, energy f32.
inline void save_audio(const AudioFeatureSequence& audio, const std::string& path) {
    auto os = detail::open_out(path);
    detail::write_bytes(os, "AUD1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(audio.frames()));
    detail::write_u32(os, static_cast<std::uint32_t>(audio.feature_dim()));
    detail::write_bytes(os, audio.features.data.data(), audio.features.size() * 4);
    detail::write_bytes(os, audio.energy.data(), audio.energy.size() * 4);
}

inline AudioFeatureSequence load_audio(const std::string& path) {
    auto is = detail::open_in(path);
    detail::expect_magic(is, "AUD1", "audio");
    const auto frames = detail::read_u32(is, "frames");
    const auto dim = detail::read_u32(is, "feature_dim");
    AudioFeatureSequence audio;
    audio.features = Tensor<float>({frames, dim});
    audio.energy.assign(frames, 0.f);
    detail::read_bytes(is, audio.features.data.data(), audio.features.size() * 4,
                       "audio features");
    detail::read_bytes(is, audio.energy.data(), frames * 4, "audio energy");
    return audio;
}

// EGCK: magic, u32 version, u64 seed, u32 tensor count, then per tensor
// (u32 name length, name bytes, u32 rank, u32 dims..., f32 data). Tensors
// are stored in map order, so byte output is deterministic.
inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    auto os = detail::open_out(path);
    detail::write_bytes(os, "EGCK", 4);
    detail::write_u32(os, ckpt.version);
    detail::write_u64(os, ckpt.seed);
    detail::write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        detail::write_bytes(os, name.data(), name.size());
        detail::write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) detail::write_u32(os, static_cast<std::uint32_t>(d));
        detail::write_bytes(os, t.data.data(), t.size() * 4);
    }
}

inline Checkpoint load_checkpoint(const std::string& path) {
    auto is = detail::open_in(path);
    detail::expect_magic(is, "EGCK", "checkpoint");
    Checkpoint ckpt;
    const auto version = detail::read_u32(is, "version");
    if (version != 1)
        throw IoError(IoCode::VersionMismatch,
                      "unsupported checkpoint version " + std::to_string(version));
    ckpt.version = version;
    ckpt.seed = detail::read_u64(is, "seed");
    const auto count = detail::read_u32(is, "tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_u32(is, "name length");
        std::string name(name_len, '\0');
        detail::read_bytes(is, name.data(), name_len, "name");
        const auto rank = detail::read_u32(is, "rank");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = detail::read_u32(is, "dim");
        Tensor<float> t(shape);
        detail::read_bytes(is, t.data.data(), t.size() * 4, "tensor data");
        if (ckpt.tensors.count(name))
            throw IoError(IoCode::DuplicateTensorName, "duplicate tensor: " + name);
        ckpt.tensors.emplace(name, std::move(t));
    }
    return ckpt;
}

}  // namespace emogene
