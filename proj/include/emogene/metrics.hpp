#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/image.hpp"
#include "emogene/mlp.hpp"
#include "emogene/optimizer.hpp"
#include "emogene/synthetic.hpp"

namespace emogene {

inline constexpr std::size_t kMouthStart = 48;  // mouth region of the 68-point scheme
inline constexpr std::size_t kMouthEnd = 68;    // exclusive
inline constexpr std::size_t kSsimWindow = 7;   // uniform window

struct MotionStats {
    double vel_avg = 0, vel_std = 0, acc_avg = 0, acc_std = 0;
};

struct MetricReport {
    double ssim = 0;
    double psnr = 0;  // dB; infinite() sentinel when MSE == 0
    double emotion_score = 0;
    double m_lmd = 0, f_lmd = 0;
    MotionStats motion;

    static double infinite() { return std::numeric_limits<double>::infinity(); }
};

inline double mse(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ShapeError("psnr/mse: image shape mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
    if (peak <= 0) throw Error("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return MetricReport::infinite();
    return 10.0 * std::log10(peak * peak / m);
}

// Mean local SSIM, 7x7 uniform window, valid positions only, channels
// averaged. C1=(0.01L)^2, C2=(0.03L)^2 with L=1.
inline double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ShapeError("ssim: image shape mismatch");
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ShapeError("ssim: image smaller than window");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const std::size_t n = kSsimWindow * kSsimWindow;
    double total = 0;
    std::size_t windows = 0;
    for (std::size_t c = 0; c < a.channels; ++c)
        for (std::size_t y = 0; y + kSsimWindow <= a.height; ++y)
            for (std::size_t x = 0; x + kSsimWindow <= a.width; ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (std::size_t dy = 0; dy < kSsimWindow; ++dy)
                    for (std::size_t dx = 0; dx < kSsimWindow; ++dx) {
                        const double va = a.at(x + dx, y + dy, c);
                        const double vb = b.at(x + dx, y + dy, c);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double mu_a = sa / n, mu_b = sb / n;
                const double var_a = saa / n - mu_a * mu_a;
                const double var_b = sbb / n - mu_b * mu_b;
                const double cov = sab / n - mu_a * mu_b;
                const double val = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                                   ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                total += val;
                ++windows;
            }
    return total / static_cast<double>(windows);
}

// Mean per-landmark Euclidean distance over a point range [lo, hi).
inline double lmd_range(const LandmarkSequence& a, const LandmarkSequence& b,
                        std::size_t lo, std::size_t hi) {
    if (a.frames() != b.frames()) throw ShapeError("lmd: frame count mismatch");
    if (a.frames() == 0) return 0.0;
    double acc = 0;
    for (std::size_t f = 0; f < a.frames(); ++f)
        for (std::size_t p = lo; p < hi; ++p) {
            double d2 = 0;
            for (std::size_t d = 0; d < kLandmarkDims; ++d) {
                const double diff =
                    static_cast<double>(a.at(f, p, d)) - b.at(f, p, d);
                d2 += diff * diff;
            }
            acc += std::sqrt(d2);
        }
    return acc / (static_cast<double>(a.frames()) * static_cast<double>(hi - lo));
}

inline std::pair<double, double> lmd(const LandmarkSequence& a,
                                     const LandmarkSequence& b) {
    const double m = lmd_range(a, b, kMouthStart, kMouthEnd);
    const double f = lmd_range(a, b, 0, kLandmarkPoints);
    return {m, f};
}

// v(t) = x(t+1) - x(t), a(t) = v(t+1) - v(t); stats over the vector norms,
// population standard deviation.
inline MotionStats motion_stats(const PoseTensor& poses) {
    if (poses.frames() < 3) throw ShapeError("motion_stats: need >= 3 frames");
    const std::size_t n = poses.frames();
    std::vector<std::vector<double>> vel(n - 1, std::vector<double>(kPoseDim));
    for (std::size_t t = 0; t + 1 < n; ++t)
        for (std::size_t d = 0; d < kPoseDim; ++d)
            vel[t][d] = static_cast<double>(poses.row(t + 1)[d]) - poses.row(t)[d];
    auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    auto mean_std = [](const std::vector<double>& xs) {
        double m = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        double var = 0;
        for (double x : xs) var += (x - m) * (x - m);
        return std::pair<double, double>{m, std::sqrt(var / xs.size())};
    };
    std::vector<double> vnorm(n - 1), anorm(n - 2);
    for (std::size_t t = 0; t + 1 < n; ++t) vnorm[t] = norm(vel[t]);
    for (std::size_t t = 0; t + 2 < n; ++t) {
        std::vector<double> a(kPoseDim);
        for (std::size_t d = 0; d < kPoseDim; ++d) a[d] = vel[t + 1][d] - vel[t][d];
        anorm[t] = norm(a);
    }
    MotionStats out;
    std::tie(out.vel_avg, out.vel_std) = mean_std(vnorm);
    std::tie(out.acc_avg, out.acc_std) = mean_std(anorm);
    return out;
}

// Zero-velocity of a pose tensor over a frame span [start, end].
inline bool span_is_still(const PoseTensor& poses, std::size_t start, std::size_t end) {
    for (std::size_t t = start; t < end; ++t)
        for (std::size_t d = 0; d < kPoseDim; ++d)
            if (poses.row(t + 1)[d] != poses.row(t)[d]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Emotion scoring proxy: small landmark-frame classifier, softmax over the 8
// labels. Stands in for an external emotion recognizer.

struct EmotionClassifier {
    Mlp<float> mlp;  // 204 -> hidden -> 8
    bool trained = false;
};

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0;
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (auto& v : out) v /= denom;
    return out;
}

inline std::vector<double> emotion_probs_frame(const EmotionClassifier& cls,
                                               const Tensor<float>& frame_flat) {
    const Tensor<float> logits = mlp_forward(cls.mlp, frame_flat);
    std::vector<double> l(logits.data.begin(), logits.data.end());
    return softmax(l);
}

inline double emotion_score(const EmotionClassifier& cls, const LandmarkSequence& seq,
                            EmotionLabel target) {
    if (!cls.trained) throw Error("emotion classifier is untrained");
    if (seq.frames() == 0) throw Error("emotion_score: empty sequence");
    double acc = 0;
    for (std::size_t f = 0; f < seq.frames(); ++f)
        acc += emotion_probs_frame(cls, seq.frame_flat(f))[static_cast<int>(target)];
    return acc / static_cast<double>(seq.frames());
}

struct ClassifierTrainConfig {
    std::size_t hidden = 64;
    std::size_t steps = 400;
    float lr = 1e-2f;
};

inline EmotionClassifier train_emotion_classifier(
    const std::vector<SyntheticClip>& dataset, const ClassifierTrainConfig& cfg,
    std::uint64_t seed) {
    Rng rng(seed, "emotion-classifier");
    EmotionClassifier cls;
    cls.mlp = Mlp<float>::make({kLandmarkFlat, cfg.hidden, kEmotionCount},
                               {Activation::ReLU, Activation::Identity}, rng);
    Optimizer<float> opt(OptimizerKind::Adam, cfg.lr);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const auto& clip =
            dataset[static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1))];
        const auto f =
            static_cast<std::size_t>(rng.uniform_int(0, clip.emotional.frames() - 1));
        const Tensor<float> x = clip.emotional.frame_flat(f);
        MlpCache<float> cache;
        const Tensor<float> logits = mlp_forward(cls.mlp, x, &cache);
        std::vector<double> l(logits.data.begin(), logits.data.end());
        const auto p = softmax(l);
        // cross-entropy gradient: p - onehot
        Tensor<float> up({kEmotionCount});
        for (std::size_t k = 0; k < kEmotionCount; ++k)
            up[k] = static_cast<float>(p[k]) -
                    (k == static_cast<std::size_t>(clip.label) ? 1.f : 0.f);
        const auto grads = mlp_backward(cls.mlp, cache, up);
        std::vector<Tensor<float>*> params;
        std::vector<const Tensor<float>*> gs;
        for (std::size_t i = 0; i < cls.mlp.layers.size(); ++i) {
            params.push_back(&cls.mlp.layers[i].w);
            params.push_back(&cls.mlp.layers[i].b);
            gs.push_back(&grads.dw[i]);
            gs.push_back(&grads.db[i]);
        }
        opt.step(params, gs);
    }
    cls.trained = true;
    return cls;
}

}  // namespace emogene
