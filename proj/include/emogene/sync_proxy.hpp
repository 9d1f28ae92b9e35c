#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/mlp.hpp"
#include "emogene/optimizer.hpp"
#include "emogene/rng.hpp"
#include "emogene/synthetic.hpp"

namespace emogene {

inline constexpr std::size_t kSyncWindow = 5;

// Contrastive audio/landmark embedder standing in for an external
// lip-sync scorer. Score is the cosine distance (1 - cos) between the two
// branch embeddings over a 5-frame window, so it lives in [0, 2].
struct SyncScorer {
    Mlp<float> audio_net;  // 5 * audio_dim -> embed
    Mlp<float> lmk_net;    // 5 * 204 -> embed
    std::size_t audio_dim = 0;
    bool trained = false;
};

namespace detail {

struct CosineGrad {
    double value;                 // cos(u, v)
    std::vector<double> du, dv;
};

inline CosineGrad cosine_with_grad(const std::vector<double>& u,
                                   const std::vector<double>& v) {
    double dot = 0, nu2 = 0, nv2 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu2 += u[i] * u[i];
        nv2 += v[i] * v[i];
    }
    const double nu = std::sqrt(nu2) + 1e-12, nv = std::sqrt(nv2) + 1e-12;
    CosineGrad g;
    g.value = dot / (nu * nv);
    g.du.resize(u.size());
    g.dv.resize(v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        g.du[i] = v[i] / (nu * nv) - g.value * u[i] / (nu * nu);
        g.dv[i] = u[i] / (nu * nv) - g.value * v[i] / (nv * nv);
    }
    return g;
}

}  // namespace detail

// audio_window: {5 * audio_dim}; landmark_window: {5 * 204}.
inline float sync_score(const SyncScorer& scorer, const Tensor<float>& audio_window,
                        const Tensor<float>& landmark_window) {
    if (audio_window.size() != kSyncWindow * scorer.audio_dim ||
        landmark_window.size() != kSyncWindow * kLandmarkFlat)
        throw ShapeError("sync_score: window must cover exactly 5 frames");
    const Tensor<float> ea = mlp_forward(scorer.audio_net, audio_window);
    const Tensor<float> el = mlp_forward(scorer.lmk_net, landmark_window);
    std::vector<double> u(ea.data.begin(), ea.data.end());
    std::vector<double> v(el.data.begin(), el.data.end());
    const auto g = detail::cosine_with_grad(u, v);
    return static_cast<float>(1.0 - g.value);
}

// Score plus gradient with respect to the landmark window (used as the
// VAE's sync-loss hook; the scorer itself stays frozen there).
inline std::pair<float, Tensor<float>> sync_score_with_landmark_grad(
    const SyncScorer& scorer, const Tensor<float>& audio_window,
    const Tensor<float>& landmark_window) {
    if (audio_window.size() != kSyncWindow * scorer.audio_dim ||
        landmark_window.size() != kSyncWindow * kLandmarkFlat)
        throw ShapeError("sync_score: window must cover exactly 5 frames");
    const Tensor<float> ea = mlp_forward(scorer.audio_net, audio_window);
    MlpCache<float> cache;
    const Tensor<float> el = mlp_forward(scorer.lmk_net, landmark_window, &cache);
    std::vector<double> u(ea.data.begin(), ea.data.end());
    std::vector<double> v(el.data.begin(), el.data.end());
    const auto g = detail::cosine_with_grad(u, v);
    Tensor<float> up({el.size()});
    for (std::size_t i = 0; i < el.size(); ++i)
        up[i] = static_cast<float>(-g.dv[i]);  // d(1 - cos)/d el
    const auto grads = mlp_backward(scorer.lmk_net, cache, up);
    return {static_cast<float>(1.0 - g.value), grads.dx};
}

struct SyncTrainConfig {
    std::size_t embed = 32;
    std::size_t hidden = 64;
    std::size_t steps = 800;
    float lr = 1e-3f;
    float margin = 1.0f;  // hinge margin for misaligned pairs
};

// Contrastive training: aligned (audio, landmark) windows are pulled
// together, windows paired across clips/offsets are pushed apart.
inline SyncScorer train_sync_proxy(const std::vector<SyntheticClip>& dataset,
                                   const SyncTrainConfig& cfg, std::uint64_t seed) {
    if (dataset.empty()) throw Error("train_sync_proxy: empty dataset");
    const std::size_t audio_dim = dataset[0].audio.feature_dim() + 1;  // + energy
    Rng rng(seed, "train-sync");
    SyncScorer scorer;
    scorer.audio_dim = audio_dim;
    scorer.audio_net =
        Mlp<float>::make({kSyncWindow * audio_dim, cfg.hidden, cfg.embed},
                         {Activation::ReLU, Activation::Identity}, rng);
    scorer.lmk_net =
        Mlp<float>::make({kSyncWindow * kLandmarkFlat, cfg.hidden, cfg.embed},
                         {Activation::ReLU, Activation::Identity}, rng);
    Optimizer<float> opt(OptimizerKind::Adam, cfg.lr);

    auto audio_window = [&](const SyntheticClip& c, std::size_t start) {
        Tensor<float> w({kSyncWindow * audio_dim});
        for (std::size_t f = 0; f < kSyncWindow; ++f) {
            for (std::size_t d = 0; d + 1 < audio_dim; ++d)
                w[f * audio_dim + d] = c.audio.features.at(start + f, d);
            w[f * audio_dim + audio_dim - 1] = c.audio.energy[start + f];
        }
        return w;
    };
    auto lmk_window = [&](const SyntheticClip& c, std::size_t start) {
        Tensor<float> w({kSyncWindow * kLandmarkFlat});
        for (std::size_t f = 0; f < kSyncWindow; ++f) {
            const auto fr = c.neutral.frame_flat(start + f);
            std::copy(fr.data.begin(), fr.data.end(),
                      w.data.begin() + f * kLandmarkFlat);
        }
        return w;
    };

    auto pair_step = [&](const Tensor<float>& aw, const Tensor<float>& lw, bool aligned) {
        MlpCache<float> ca, cl;
        const Tensor<float> ea = mlp_forward(scorer.audio_net, aw, &ca);
        const Tensor<float> el = mlp_forward(scorer.lmk_net, lw, &cl);
        std::vector<double> u(ea.data.begin(), ea.data.end());
        std::vector<double> v(el.data.begin(), el.data.end());
        const auto g = detail::cosine_with_grad(u, v);
        const double dist = 1.0 - g.value;
        // aligned: loss = dist; misaligned: loss = max(0, margin - dist)
        double scale;
        if (aligned) scale = 1.0;
        else if (dist < cfg.margin) scale = -1.0;
        else return;
        Tensor<float> upa({ea.size()}), upl({el.size()});
        for (std::size_t i = 0; i < ea.size(); ++i)
            upa[i] = static_cast<float>(-scale * g.du[i]);
        for (std::size_t i = 0; i < el.size(); ++i)
            upl[i] = static_cast<float>(-scale * g.dv[i]);
        const auto ga = mlp_backward(scorer.audio_net, ca, upa);
        const auto gl = mlp_backward(scorer.lmk_net, cl, upl);
        std::vector<Tensor<float>*> params;
        std::vector<const Tensor<float>*> gs;
        for (std::size_t i = 0; i < scorer.audio_net.layers.size(); ++i) {
            params.push_back(&scorer.audio_net.layers[i].w);
            params.push_back(&scorer.audio_net.layers[i].b);
            gs.push_back(&ga.dw[i]);
            gs.push_back(&ga.db[i]);
        }
        for (std::size_t i = 0; i < scorer.lmk_net.layers.size(); ++i) {
            params.push_back(&scorer.lmk_net.layers[i].w);
            params.push_back(&scorer.lmk_net.layers[i].b);
            gs.push_back(&gl.dw[i]);
            gs.push_back(&gl.db[i]);
        }
        opt.step(params, gs);
    };

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const auto& ca =
            dataset[static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1))];
        if (ca.audio.frames() < kSyncWindow) continue;
        const auto sa = static_cast<std::size_t>(
            rng.uniform_int(0, ca.audio.frames() - kSyncWindow));
        pair_step(audio_window(ca, sa), lmk_window(ca, sa), true);
        // negative: different clip or different offset
        const auto& cb =
            dataset[static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1))];
        if (cb.neutral.frames() < kSyncWindow) continue;
        auto sb = static_cast<std::size_t>(
            rng.uniform_int(0, cb.neutral.frames() - kSyncWindow));
        if (&ca == &cb && sb == sa) sb = (sb + kSyncWindow) % (cb.neutral.frames() - kSyncWindow + 1);
        pair_step(audio_window(ca, sa), lmk_window(cb, sb), false);
    }
    scorer.trained = true;
    return scorer;
}

}  // namespace emogene
