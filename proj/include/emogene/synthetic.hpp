#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/rng.hpp"

namespace emogene {

// Fixed 68-point neutral face template in a centered unit box, y up.
// Standard annotation order: jaw 0-16, brows 17-26, nose 27-35,
// eyes 36-47, mouth 48-67.
inline Tensor<float> face_template() {
    Tensor<float> t({kLandmarkPoints, kLandmarkDims});
    auto set = [&](std::size_t i, float x, float y, float z) {
        t.at(i, 0) = x;
        t.at(i, 1) = y;
        t.at(i, 2) = z;
    };
    const float pi = 3.14159265358979323846f;
    // jaw: x sweeps -0.42..0.42, y dips to the chin at center
    for (std::size_t i = 0; i < 17; ++i) {
        const float u = static_cast<float>(i) / 16.f;  // 0..1
        const float x = -0.42f + 0.84f * u;
        const float y = 0.10f - 0.55f * std::sin(pi * u);
        set(i, x, y, 0.05f);
    }
    // brows: two arcs
    for (std::size_t i = 0; i < 5; ++i) {
        const float u = static_cast<float>(i) / 4.f;
        set(17 + i, -0.30f + 0.22f * u, 0.22f + 0.04f * std::sin(pi * u), -0.02f);
        set(22 + i, 0.08f + 0.22f * u, 0.22f + 0.04f * std::sin(pi * u), -0.02f);
    }
    // nose bridge 27-30, base 31-35
    for (std::size_t i = 0; i < 4; ++i)
        set(27 + i, 0.f, 0.16f - 0.09f * static_cast<float>(i), -0.08f);
    for (std::size_t i = 0; i < 5; ++i)
        set(31 + i, -0.06f + 0.03f * static_cast<float>(i), -0.14f, -0.05f);
    // eyes: two hexagons
    for (std::size_t i = 0; i < 6; ++i) {
        const float a = 2.f * pi * static_cast<float>(i) / 6.f;
        set(36 + i, -0.19f + 0.07f * std::cos(a), 0.10f + 0.03f * std::sin(a), -0.02f);
        set(42 + i, 0.19f + 0.07f * std::cos(a), 0.10f + 0.03f * std::sin(a), -0.02f);
    }
    // mouth: outer ring 48-59, inner ring 60-67
    for (std::size_t i = 0; i < 12; ++i) {
        const float a = 2.f * pi * static_cast<float>(i) / 12.f;
        set(48 + i, 0.12f * std::cos(a + pi), -0.26f + 0.05f * std::sin(a + pi), 0.f);
    }
    for (std::size_t i = 0; i < 8; ++i) {
        const float a = 2.f * pi * static_cast<float>(i) / 8.f;
        set(60 + i, 0.07f * std::cos(a + pi), -0.26f + 0.02f * std::sin(a + pi), 0.f);
    }
    return t;
}

// Points displaced downward in proportion to audio energy (mouth opening):
// lower outer lip and lower inner lip.
inline const std::vector<std::pair<std::size_t, float>>& mouth_drive_weights() {
    static const std::vector<std::pair<std::size_t, float>> w = {
        {55, 1.0f}, {56, 1.0f}, {57, 1.0f}, {58, 1.0f}, {59, 1.0f},
        {65, 0.8f}, {66, 0.8f}, {67, 0.8f},
    };
    return w;
}

struct EmotionDelta {
    std::size_t point;
    float dx, dy, dz;
};

struct GeneratorConfig {
    std::size_t feature_dim = 16;
    float mouth_gain = 0.30f;
    float energy_amp = 0.25f;
    std::map<EmotionLabel, std::vector<EmotionDelta>> deltas;

    static GeneratorConfig defaults() {
        GeneratorConfig c;
        using E = EmotionLabel;
        c.deltas[E::Happy] = {{48, 0.f, 0.05f, 0.f}, {54, 0.f, 0.05f, 0.f}};
        c.deltas[E::Sad] = {{48, 0.f, -0.05f, 0.f}, {54, 0.f, -0.05f, 0.f},
                            {21, 0.f, -0.02f, 0.f}, {22, 0.f, -0.02f, 0.f}};
        c.deltas[E::Angry] = {{19, 0.f, -0.04f, 0.f}, {20, 0.f, -0.04f, 0.f},
                              {21, 0.f, -0.05f, 0.f}, {22, 0.f, -0.05f, 0.f},
                              {23, 0.f, -0.04f, 0.f}, {24, 0.f, -0.04f, 0.f}};
        c.deltas[E::Surprise] = {{17, 0.f, 0.06f, 0.f}, {18, 0.f, 0.06f, 0.f},
                                 {19, 0.f, 0.06f, 0.f}, {20, 0.f, 0.06f, 0.f},
                                 {21, 0.f, 0.06f, 0.f}, {22, 0.f, 0.06f, 0.f},
                                 {23, 0.f, 0.06f, 0.f}, {24, 0.f, 0.06f, 0.f},
                                 {25, 0.f, 0.06f, 0.f}, {26, 0.f, 0.06f, 0.f},
                                 {57, 0.f, -0.04f, 0.f}};
        c.deltas[E::Disgust] = {{31, 0.f, 0.03f, 0.f}, {32, 0.f, 0.03f, 0.f},
                                {33, 0.f, 0.03f, 0.f}, {34, 0.f, 0.03f, 0.f},
                                {35, 0.f, 0.03f, 0.f}, {50, 0.f, 0.03f, 0.f},
                                {52, 0.f, 0.03f, 0.f}};
        c.deltas[E::Neutral] = {};
        c.deltas[E::Contempt] = {{48, 0.f, 0.04f, 0.f}};
        c.deltas[E::Fear] = {{17, 0.f, 0.05f, 0.f}, {21, 0.f, 0.05f, 0.f},
                             {22, 0.f, 0.05f, 0.f}, {26, 0.f, 0.05f, 0.f},
                             {48, 0.f, -0.03f, 0.f}, {54, 0.f, -0.03f, 0.f}};
        return c;
    }

    // Landmark indices a label displaces (oracle for label-sensitivity checks).
    std::vector<std::size_t> displaced_points(EmotionLabel e) const {
        std::vector<std::size_t> out;
        auto it = deltas.find(e);
        if (it == deltas.end()) return out;
        for (const auto& d : it->second) out.push_back(d.point);
        return out;
    }

    // Ground-truth displacement of a label as a full 68x3 tensor.
    Tensor<float> delta_tensor(EmotionLabel e) const {
        Tensor<float> t({kLandmarkPoints, kLandmarkDims});
        auto it = deltas.find(e);
        if (it != deltas.end())
            for (const auto& d : it->second) {
                t.at(d.point, 0) += d.dx;
                t.at(d.point, 1) += d.dy;
                t.at(d.point, 2) += d.dz;
            }
        return t;
    }

    // key=value echo so tests and reports can read the ground truth back.
    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError(IoCode::OpenFailed, "cannot write config: " + path);
        os << "feature_dim = " << feature_dim << "\n";
        os << "mouth_gain = " << mouth_gain << "\n";
        os << "energy_amp = " << energy_amp << "\n";
        for (const auto& [label, list] : deltas) {
            os << "delta." << emogene::to_string(label) << " = ";
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (i) os << ";";
                os << list[i].point << ":" << list[i].dx << "," << list[i].dy << ","
                   << list[i].dz;
            }
            os << "\n";
        }
    }

    static GeneratorConfig read(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError(IoCode::OpenFailed, "cannot read config: " + path);
        GeneratorConfig c;
        c.deltas.clear();
        std::string line;
        while (std::getline(is, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key == "feature_dim") c.feature_dim = std::stoul(val);
            else if (key == "mouth_gain") c.mouth_gain = std::stof(val);
            else if (key == "energy_amp") c.energy_amp = std::stof(val);
            else if (key.rfind("delta.", 0) == 0) {
                auto label = parse_emotion(key.substr(6));
                if (!label) throw ConfigError("unknown emotion in config: " + key);
                std::vector<EmotionDelta> list;
                std::stringstream ss(val);
                std::string entry;
                while (std::getline(ss, entry, ';')) {
                    if (entry.empty()) continue;
                    EmotionDelta d{};
                    char colon, c1, c2;
                    std::stringstream es(entry);
                    es >> d.point >> colon >> d.dx >> c1 >> d.dy >> c2 >> d.dz;
                    list.push_back(d);
                }
                c.deltas[*label] = list;
            }
        }
        return c;
    }
};

struct SyntheticClip {
    AudioFeatureSequence audio;
    LandmarkSequence neutral;
    LandmarkSequence emotional;
    EmotionLabel label;
};

// Nonnegative energy envelope from seeded sinusoids; zero when amp is 0.
inline std::vector<float> synth_energy(std::size_t frames, float amp, Rng& rng) {
    const double f1 = 0.05 + 0.15 * rng.uniform();
    const double f2 = 0.02 + 0.08 * rng.uniform();
    const double p1 = 6.28318530717958647692 * rng.uniform();
    const double p2 = 6.28318530717958647692 * rng.uniform();
    std::vector<float> e(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const double s = 0.5 * (std::sin(6.28318530717958647692 * f1 * t + p1) +
                                std::sin(6.28318530717958647692 * f2 * t + p2));
        e[t] = amp * static_cast<float>(std::abs(s));
    }
    return e;
}

inline AudioFeatureSequence synth_audio(std::size_t frames, const GeneratorConfig& cfg,
                                        Rng& rng) {
    AudioFeatureSequence audio;
    audio.features = Tensor<float>({frames, cfg.feature_dim});
    audio.energy = synth_energy(frames, cfg.energy_amp, rng);
    // low-pass filtered Gaussian channels
    std::vector<float> state(cfg.feature_dim, 0.f);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
            state[d] = 0.8f * state[d] + 0.2f * static_cast<float>(rng.gaussian());
            audio.features.at(t, d) = state[d];
        }
    return audio;
}

// Neutral landmarks: template plus energy-driven mouth opening.
inline LandmarkSequence neutral_from_energy(const std::vector<float>& energy,
                                            const GeneratorConfig& cfg) {
    const Tensor<float> tmpl = face_template();
    LandmarkSequence seq(energy.size());
    for (std::size_t f = 0; f < energy.size(); ++f) {
        for (std::size_t p = 0; p < kLandmarkPoints; ++p)
            for (std::size_t d = 0; d < kLandmarkDims; ++d)
                seq.at(f, p, d) = tmpl.at(p, d);
        for (const auto& [p, w] : mouth_drive_weights())
            seq.at(f, p, 1) -= energy[f] * cfg.mouth_gain * w;
    }
    return seq;
}

inline SyntheticClip generate_clip(std::uint64_t clip_seed, std::size_t frames,
                                   EmotionLabel label, const GeneratorConfig& cfg) {
    if (frames < 2) throw Error("frames_per_clip must be >= 2");
    if (cfg.deltas.find(label) == cfg.deltas.end() &&
        label != EmotionLabel::Neutral)
        throw ConfigError("no delta table for emotion " + emogene::to_string(label));
    Rng rng(clip_seed, "clip");
    SyntheticClip clip;
    clip.label = label;
    clip.audio = synth_audio(frames, cfg, rng);
    clip.neutral = neutral_from_energy(clip.audio.energy, cfg);
    // additive, energy-independent emotion displacement
    const Tensor<float> delta = cfg.delta_tensor(label);
    clip.emotional = clip.neutral;
    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t p = 0; p < kLandmarkPoints; ++p)
            for (std::size_t d = 0; d < kLandmarkDims; ++d)
                clip.emotional.at(f, p, d) += delta.at(p, d);
    return clip;
}

// Paired clips cycling through the 8 emotions.
inline std::vector<SyntheticClip> generate_synthetic_dataset(
    std::uint64_t seed, std::size_t n_clips, std::size_t frames_per_clip,
    const GeneratorConfig& cfg) {
    std::vector<SyntheticClip> out;
    out.reserve(n_clips);
    for (std::size_t i = 0; i < n_clips; ++i) {
        const auto label = static_cast<EmotionLabel>(i % kEmotionCount);
        out.push_back(generate_clip(seed * 1000003ull + i, frames_per_clip, label, cfg));
    }
    return out;
}

// Smoothly moving head-pose trace: small rotations about y plus a drifting
// translation. Rotation block determinant is 1 by construction.
inline PoseTensor generate_pose_trace(std::uint64_t seed, std::size_t frames,
                                      float motion_scale = 0.1f) {
    Rng rng(seed, "pose-trace");
    const double f = 0.02 + 0.05 * rng.uniform();
    const double phase = 6.28318530717958647692 * rng.uniform();
    PoseTensor poses(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const float ang =
            motion_scale * static_cast<float>(std::sin(6.28318530717958647692 * f * t + phase));
        const float c = std::cos(ang), s = std::sin(ang);
        float* r = poses.row(t);
        // rotation about y | translation
        r[0] = c;  r[1] = 0; r[2] = s;  r[3] = 0.02f * ang;
        r[4] = 0;  r[5] = 1; r[6] = 0;  r[7] = 0.01f * ang;
        r[8] = -s; r[9] = 0; r[10] = c; r[11] = 0.f;
    }
    return poses;
}

}  // namespace emogene
