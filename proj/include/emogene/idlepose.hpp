#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/rng.hpp"

namespace emogene {

struct IdleSegment {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
};

struct IdleBounds {
    std::size_t len_min = 1;
    std::size_t len_max = 1;
    std::vector<std::size_t> identified_idle_pose_indices;  // run start indices
};

enum class IdleSamplingMode {
    RandomIdleFixedGap,  // default configuration
    FixedIdleRandomGap,
    RandomIdleRandomGap,
    Even,
};

struct SamplerConfig {
    std::size_t len_gap = 2;
    std::uint64_t seed = 0;
    double epsilon = 1e-6;            // tolerance on "cosine similarity == 1"
    float silence_threshold = 1e-3f;  // mean RMS below this means silent
    // fallbacks when no idle run is found in the source
    std::size_t default_len_min = 2;
    std::size_t default_len_max = 4;
    IdleSamplingMode mode = IdleSamplingMode::RandomIdleFixedGap;
};

inline double cosine_similarity(const float* x, const float* y, std::size_t dim) {
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        dot += static_cast<double>(x[i]) * y[i];
        nx += static_cast<double>(x[i]) * x[i];
        ny += static_cast<double>(y[i]) * y[i];
    }
    if (nx == 0 || ny == 0) throw Error("cosine_similarity: zero-norm vector");
    return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

// A maximal run of k >= 2 consecutive poses whose successive similarities are
// all >= 1 - epsilon is an idle run of length k; returns the min and max run
// length plus each run's start index.
inline IdleBounds find_idle_bounds(const PoseTensor& poses, double epsilon) {
    if (poses.frames() < 2) throw Error("find_idle_bounds: need >= 2 frames");
    IdleBounds bounds;
    std::vector<std::size_t> lengths;
    std::size_t run_start = 0, run_len = 1;
    for (std::size_t i = 0; i + 1 < poses.frames(); ++i) {
        const double sim = cosine_similarity(poses.row(i), poses.row(i + 1), kPoseDim);
        if (sim >= 1.0 - epsilon) {
            ++run_len;
        } else {
            if (run_len >= 2) {
                lengths.push_back(run_len);
                bounds.identified_idle_pose_indices.push_back(run_start);
            }
            run_start = i + 1;
            run_len = 1;
        }
    }
    if (run_len >= 2) {
        lengths.push_back(run_len);
        bounds.identified_idle_pose_indices.push_back(run_start);
    }
    if (lengths.empty()) throw NoIdleError("no idle run found");
    bounds.len_min = *std::min_element(lengths.begin(), lengths.end());
    bounds.len_max = *std::max_element(lengths.begin(), lengths.end());
    return bounds;
}

// Segment generation with random idle lengths and a fixed gap. position
// starts at 0; each iteration draws l uniformly in
// [len_min, min(len_max, n - position)] (breaking when that upper bound
// drops below len_min), emits [start, start+l-1] unless the segment plus
// gap would run past n, then advances position past the segment and gap.
inline std::vector<IdleSegment> generate_segments(std::size_t n, std::size_t len_min,
                                                  std::size_t len_max,
                                                  std::size_t len_gap,
                                                  std::uint64_t seed) {
    if (len_min < 1 || len_min > len_max)
        throw Error("generate_segments: need 1 <= len_min <= len_max");
    Rng rng(seed, "idle-segments");
    std::vector<IdleSegment> segments;
    std::size_t position = 0;
    while (position < n) {
        const std::size_t hi = std::min(len_max, n - position);
        if (hi < len_min) break;
        const auto l = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(len_min),
                            static_cast<std::int64_t>(hi)));
        const std::size_t start = position;
        const std::size_t end = start + l - 1;
        if (end + len_gap >= n) break;
        segments.push_back({start, end});
        position = end + 1 + len_gap;
    }
    return segments;
}

// Ablation presets around the default sampler. "Even" alternates the mean
// idle length with the configured gap; the random-gap modes draw the gap
// from [1, len_gap].
inline std::vector<IdleSegment> generate_segments_preset(
    IdleSamplingMode mode, std::size_t n, std::size_t len_min, std::size_t len_max,
    std::size_t len_gap, std::uint64_t seed) {
    if (mode == IdleSamplingMode::RandomIdleFixedGap)
        return generate_segments(n, len_min, len_max, len_gap, seed);
    if (len_min < 1 || len_min > len_max)
        throw Error("generate_segments: need 1 <= len_min <= len_max");
    Rng rng(seed, "idle-segments");
    std::vector<IdleSegment> segments;
    std::size_t position = 0;
    const std::size_t even_len = (len_min + len_max) / 2;
    while (position < n) {
        std::size_t l;
        switch (mode) {
            case IdleSamplingMode::FixedIdleRandomGap: l = len_max; break;
            case IdleSamplingMode::Even: l = even_len; break;
            default: {
                const std::size_t hi = std::min(len_max, n - position);
                if (hi < len_min) l = 0;
                else
                    l = static_cast<std::size_t>(rng.uniform_int(
                        static_cast<std::int64_t>(len_min), static_cast<std::int64_t>(hi)));
            }
        }
        if (l < len_min || position + l > n) break;
        std::size_t gap = len_gap;
        if (mode == IdleSamplingMode::FixedIdleRandomGap ||
            mode == IdleSamplingMode::RandomIdleRandomGap)
            gap = static_cast<std::size_t>(
                rng.uniform_int(1, static_cast<std::int64_t>(std::max<std::size_t>(len_gap, 1))));
        const std::size_t start = position;
        const std::size_t end = start + l - 1;
        if (end + gap >= n) break;
        segments.push_back({start, end});
        position = end + 1 + gap;
    }
    return segments;
}

// Fill segment spans with replicas of the pose just before the segment
// (keeping the motion-stillness transition continuous); non-segment
// positions consume source poses in order. Segments starting at 0 replicate
// the first identified idle pose when provided, else source frame 0.
inline PoseTensor build_idle_pose_tensor(
    const PoseTensor& source, const std::vector<IdleSegment>& segments,
    std::size_t n_out, const std::vector<std::size_t>* idle_indices = nullptr) {
    std::vector<int> seg_of(n_out, -1);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        if (seg.start > seg.end || seg.end >= n_out)
            throw Error("build_idle_pose_tensor: segment out of range");
        for (std::size_t i = seg.start; i <= seg.end; ++i) {
            if (seg_of[i] != -1) throw Error("build_idle_pose_tensor: overlapping segments");
            seg_of[i] = static_cast<int>(s);
        }
    }
    PoseTensor out(n_out);
    std::size_t next_src = 0;
    for (std::size_t i = 0; i < n_out; ++i) {
        const float* src_row = nullptr;
        if (seg_of[i] >= 0) {
            if (i > 0) {
                src_row = out.row(i - 1);  // replicate the last pre-segment pose
            } else {
                const std::size_t idx =
                    (idle_indices && !idle_indices->empty()) ? (*idle_indices)[0] : 0;
                if (idx >= source.frames())
                    throw Error("build_idle_pose_tensor: idle index out of range");
                src_row = source.row(idx);
            }
        } else {
            if (next_src >= source.frames())
                throw Error("build_idle_pose_tensor: source too short");
            src_row = source.row(next_src++);
        }
        std::copy(src_row, src_row + kPoseDim, out.row(i));
    }
    return out;
}

// Silent audio takes the idle path; anything else passes through unchanged.
inline PoseTensor idle_pipeline(const PoseTensor& source,
                                const AudioFeatureSequence& audio,
                                const SamplerConfig& cfg, bool* idle_taken = nullptr) {
    if (idle_taken) *idle_taken = false;
    if (audio.mean_energy() >= cfg.silence_threshold) return source;
    if (idle_taken) *idle_taken = true;
    std::size_t len_min = cfg.default_len_min, len_max = cfg.default_len_max;
    std::vector<std::size_t> idle_indices;
    try {
        const IdleBounds bounds = find_idle_bounds(source, cfg.epsilon);
        len_min = bounds.len_min;
        len_max = bounds.len_max;
        idle_indices = bounds.identified_idle_pose_indices;
    } catch (const NoIdleError&) {
        // fall back to configured defaults
    }
    const auto segments = generate_segments_preset(cfg.mode, source.frames(), len_min,
                                                   len_max, cfg.len_gap, cfg.seed);
    return build_idle_pose_tensor(source, segments, source.frames(), &idle_indices);
}

}  // namespace emogene
