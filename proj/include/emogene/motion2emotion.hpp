#pragma once

#include <cstdint>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/mlp.hpp"
#include "emogene/optimizer.hpp"
#include "emogene/rng.hpp"
#include "emogene/synthetic.hpp"

namespace emogene {

inline constexpr std::size_t kEmotionEmbedDim = 16;

// 8 x d_e learned embedding table, one row per emotion label.
template <typename T>
struct EmotionEmbedder {
    Tensor<T> table;  // {8, d_e}

    // One-hot-extended init: unit vector on the label coordinate, zero tail.
    static EmotionEmbedder one_hot(std::size_t d_e = kEmotionEmbedDim) {
        EmotionEmbedder e;
        e.table = Tensor<T>({kEmotionCount, d_e});
        for (std::size_t i = 0; i < kEmotionCount && i < d_e; ++i)
            e.table.at(i, i) = T(1);
        return e;
    }

    std::size_t dim() const { return table.shape[1]; }

    Tensor<T> embed(EmotionLabel label) const {
        const auto row = static_cast<std::size_t>(label);
        Tensor<T> out({dim()});
        for (std::size_t i = 0; i < dim(); ++i) out[i] = table.at(row, i);
        return out;
    }
};

// 3 FC layers with ReLU between: FC(ReLU(FC(ReLU(FC(x))))). Input is the
// concatenated neutral landmark frame (204) and emotion embedding; output
// is the per-frame deformation displacement (204).
template <typename T>
struct Ldm {
    Mlp<T> mlp;

    static Ldm make(std::size_t d_e, std::size_t hidden, Rng& rng) {
        Ldm l;
        l.mlp = Mlp<T>::make({kLandmarkFlat + d_e, hidden, hidden, kLandmarkFlat},
                             {Activation::ReLU, Activation::ReLU, Activation::Identity},
                             rng);
        return l;
    }

    std::size_t embed_dim() const { return mlp.input_dim() - kLandmarkFlat; }
};

template <typename T>
Tensor<T> ldm_concat_input(const Tensor<T>& neutral_flat, const Tensor<T>& emb) {
    if (neutral_flat.size() != kLandmarkFlat)
        throw ShapeError("ldm: neutral frame must be 68x3 flattened");
    Tensor<T> x({kLandmarkFlat + emb.size()});
    std::copy(neutral_flat.data.begin(), neutral_flat.data.end(), x.data.begin());
    std::copy(emb.data.begin(), emb.data.end(), x.data.begin() + kLandmarkFlat);
    return x;
}

// Displacement prediction for one frame.
template <typename T>
Tensor<T> ldm_forward(const Ldm<T>& ldm, const Tensor<T>& neutral_flat,
                      const Tensor<T>& emb, MlpCache<T>* cache = nullptr) {
    if (emb.size() != ldm.embed_dim())
        throw ShapeError("ldm: embedding dim mismatch");
    return mlp_forward(ldm.mlp, ldm_concat_input(neutral_flat, emb), cache);
}

// Emotional landmark = neutral + displacement, element-wise.
template <typename T>
Tensor<T> compose_emotional(const Tensor<T>& neutral_flat, const Tensor<T>& delta) {
    if (!neutral_flat.same_shape(delta))
        throw ShapeError("compose_emotional: shape mismatch");
    Tensor<T> out(neutral_flat.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = neutral_flat[i] + delta[i];
    return out;
}

// Mean squared error over all 68*3 coordinates (and batch rows, if any).
template <typename T>
T ldm_loss(const Tensor<T>& gt_emotional, const Tensor<T>& pred_emotional) {
    if (!gt_emotional.same_shape(pred_emotional))
        throw ShapeError("ldm_loss: shape mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < gt_emotional.size(); ++i) {
        const double d = static_cast<double>(gt_emotional[i]) - pred_emotional[i];
        acc += d * d;
    }
    const T loss = static_cast<T>(acc / gt_emotional.size());
    if (!std::isfinite(static_cast<double>(loss)))
        throw NumericError("ldm_loss: non-finite");
    return loss;
}

struct LdmTrainConfig {
    std::size_t hidden = 256;
    std::size_t d_e = kEmotionEmbedDim;
    std::size_t steps = 1500;
    float lr = 1e-3f;
    // gaussian noise on the network input; makes the predicted displacement
    // robust to neutral tracks that drift off the training manifold
    float input_noise = 0.f;
};

struct LdmTrainResult {
    Ldm<float> ldm;
    EmotionEmbedder<float> embedder;
    std::vector<float> loss_curve;
};

// Joint training of the LDM and the embedder on (neutral, emotional, label)
// triples, one random frame per step.
inline LdmTrainResult train_ldm(const std::vector<SyntheticClip>& dataset,
                                const LdmTrainConfig& cfg, std::uint64_t seed) {
    Rng rng(seed, "train-ldm");
    LdmTrainResult res;
    res.ldm = Ldm<float>::make(cfg.d_e, cfg.hidden, rng);
    res.embedder = EmotionEmbedder<float>::one_hot(cfg.d_e);
    Optimizer<float> opt(OptimizerKind::Adam, cfg.lr);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const auto& clip =
            dataset[static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1))];
        const auto f =
            static_cast<std::size_t>(rng.uniform_int(0, clip.neutral.frames() - 1));
        const Tensor<float> neutral = clip.neutral.frame_flat(f);
        const Tensor<float> gt = clip.emotional.frame_flat(f);
        const Tensor<float> emb = res.embedder.embed(clip.label);

        Tensor<float> net_in = neutral;
        if (cfg.input_noise > 0.f)
            for (auto& v : net_in.data)
                v += cfg.input_noise * static_cast<float>(rng.gaussian());
        MlpCache<float> cache;
        const Tensor<float> delta = ldm_forward(res.ldm, net_in, emb, &cache);
        const Tensor<float> pred = compose_emotional(neutral, delta);
        const float loss = ldm_loss(gt, pred);
        if (!std::isfinite(loss))
            throw DivergenceError(step, "train_ldm diverged at step " + std::to_string(step));
        res.loss_curve.push_back(loss);

        // d loss / d pred = 2 (pred - gt) / n; pred = neutral + delta
        Tensor<float> up({kLandmarkFlat});
        for (std::size_t i = 0; i < kLandmarkFlat; ++i)
            up[i] = 2.f * (pred[i] - gt[i]) / static_cast<float>(kLandmarkFlat);
        const auto grads = mlp_backward(res.ldm.mlp, cache, up);

        // embedding rows get the tail of the input gradient
        Tensor<float> emb_grad({kEmotionCount, cfg.d_e});
        const auto row = static_cast<std::size_t>(clip.label);
        for (std::size_t i = 0; i < cfg.d_e; ++i)
            emb_grad.at(row, i) = grads.dx[kLandmarkFlat + i];

        std::vector<Tensor<float>*> params;
        std::vector<const Tensor<float>*> gs;
        for (std::size_t i = 0; i < res.ldm.mlp.layers.size(); ++i) {
            params.push_back(&res.ldm.mlp.layers[i].w);
            params.push_back(&res.ldm.mlp.layers[i].b);
            gs.push_back(&grads.dw[i]);
            gs.push_back(&grads.db[i]);
        }
        params.push_back(&res.embedder.table);
        gs.push_back(&emb_grad);
        opt.step(params, gs);
    }
    return res;
}

// Apply a trained LDM to every frame of a neutral sequence.
inline LandmarkSequence apply_ldm(const Ldm<float>& ldm,
                                  const EmotionEmbedder<float>& embedder,
                                  const LandmarkSequence& neutral, EmotionLabel label) {
    const Tensor<float> emb = embedder.embed(label);
    LandmarkSequence out(neutral.frames());
    for (std::size_t f = 0; f < neutral.frames(); ++f) {
        const Tensor<float> n = neutral.frame_flat(f);
        const Tensor<float> delta = ldm_forward(ldm, n, emb);
        const Tensor<float> e = compose_emotional(n, delta);
        std::copy(e.data.begin(), e.data.end(),
                  out.values.data.begin() + f * kLandmarkFlat);
    }
    return out;
}

}  // namespace emogene
