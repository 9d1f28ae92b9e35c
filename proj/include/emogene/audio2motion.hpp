#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emogene/conv1d.hpp"
#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/mlp.hpp"
#include "emogene/optimizer.hpp"
#include "emogene/rng.hpp"
#include "emogene/sync_proxy.hpp"
#include "emogene/synthetic.hpp"

namespace emogene {

// Audio features + energy as one {frames, feature_dim + 1} tensor.
template <typename T = float>
Tensor<T> audio_tensor(const AudioFeatureSequence& audio) {
    const std::size_t fd = audio.feature_dim();
    Tensor<T> out({audio.frames(), fd + 1});
    for (std::size_t f = 0; f < audio.frames(); ++f) {
        for (std::size_t d = 0; d < fd; ++d)
            out.at(f, d) = static_cast<T>(audio.features.at(f, d));
        out.at(f, fd) = static_cast<T>(audio.energy[f]);
    }
    return out;
}

template <typename T = float>
Tensor<T> landmark_tensor(const LandmarkSequence& seq) {
    Tensor<T> out({seq.frames(), kLandmarkFlat});
    for (std::size_t i = 0; i < seq.values.size(); ++i)
        out.data[i] = static_cast<T>(seq.values.data[i]);
    return out;
}

inline LandmarkSequence landmarks_from_tensor(const Tensor<float>& t) {
    LandmarkSequence seq(t.shape[0]);
    std::copy(t.data.begin(), t.data.end(), seq.values.data.begin());
    return seq;
}

// VAE with dilated-convolution encoder and decoder. The encoder consumes
// (landmarks, audio) per frame and mean-pools over time to a per-clip
// posterior (mu, log sigma^2); the decoder maps (z broadcast, audio) back
// to a landmark sequence of the same length as the audio.
template <typename T>
struct Vae {
    std::vector<Conv1d<T>> enc_convs, dec_convs;
    Mlp<T> enc_head;  // channels -> 2 * latent_dim
    Mlp<T> dec_head;  // channels -> 204
    std::size_t latent_dim = 0;
    std::size_t audio_dim = 0;  // feature_dim + 1

    static Vae make(std::size_t audio_dim, std::size_t latent_dim,
                    std::size_t channels, std::size_t n_layers, Rng& rng) {
        Vae v;
        v.latent_dim = latent_dim;
        v.audio_dim = audio_dim;
        std::size_t in = kLandmarkFlat + audio_dim;
        for (std::size_t i = 0; i < n_layers; ++i) {
            v.enc_convs.push_back(
                Conv1d<T>::make(in, channels, std::size_t(1) << i, Activation::ReLU, rng));
            in = channels;
        }
        v.enc_head = Mlp<T>::make({channels, 2 * latent_dim}, {Activation::Identity}, rng);
        in = audio_dim + latent_dim;
        for (std::size_t i = 0; i < n_layers; ++i) {
            v.dec_convs.push_back(
                Conv1d<T>::make(in, channels, std::size_t(1) << i, Activation::ReLU, rng));
            in = channels;
        }
        v.dec_head = Mlp<T>::make({channels, kLandmarkFlat}, {Activation::Identity}, rng);
        return v;
    }

    // Fixed enumeration order; also used for checkpoints.
    template <typename F>
    void visit_params(F&& f) {
        for (std::size_t i = 0; i < enc_convs.size(); ++i) {
            f("enc_conv" + std::to_string(i) + ".w", enc_convs[i].w);
            f("enc_conv" + std::to_string(i) + ".b", enc_convs[i].b);
        }
        for (std::size_t i = 0; i < enc_head.layers.size(); ++i) {
            f("enc_head" + std::to_string(i) + ".w", enc_head.layers[i].w);
            f("enc_head" + std::to_string(i) + ".b", enc_head.layers[i].b);
        }
        for (std::size_t i = 0; i < dec_convs.size(); ++i) {
            f("dec_conv" + std::to_string(i) + ".w", dec_convs[i].w);
            f("dec_conv" + std::to_string(i) + ".b", dec_convs[i].b);
        }
        for (std::size_t i = 0; i < dec_head.layers.size(); ++i) {
            f("dec_head" + std::to_string(i) + ".w", dec_head.layers[i].w);
            f("dec_head" + std::to_string(i) + ".b", dec_head.layers[i].b);
        }
    }
};

template <typename T>
struct VaePosterior {
    Tensor<T> mu, log_var;  // each {latent_dim}
};

namespace detail {

template <typename T>
struct EncodeCache {
    Tensor<T> enc_input;  // {F, 204 + audio_dim}
    std::vector<Conv1dCache<T>> convs;
    MlpCache<T> head;
    std::size_t frames = 0;
};

template <typename T>
struct DecodeCache {
    std::vector<Conv1dCache<T>> convs;
    MlpCache<T> head;
    std::size_t frames = 0;
};

}  // namespace detail

template <typename T>
VaePosterior<T> encode(const Vae<T>& vae, const Tensor<T>& landmarks,
                       const Tensor<T>& audio,
                       detail::EncodeCache<T>* cache = nullptr) {
    if (landmarks.shape[0] != audio.shape[0])
        throw ShapeError("encode: landmark/audio frame mismatch");
    const std::size_t frames = audio.shape[0];
    Tensor<T> x({frames, kLandmarkFlat + vae.audio_dim});
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t i = 0; i < kLandmarkFlat; ++i)
            x.at(f, i) = landmarks.at(f, i);
        for (std::size_t i = 0; i < vae.audio_dim; ++i)
            x.at(f, kLandmarkFlat + i) = audio.at(f, i);
    }
    if (cache) {
        cache->enc_input = x;
        cache->convs.resize(vae.enc_convs.size());
        cache->frames = frames;
    }
    for (std::size_t i = 0; i < vae.enc_convs.size(); ++i)
        x = conv1d_forward(vae.enc_convs[i], x, cache ? &cache->convs[i] : nullptr);
    // temporal mean pool
    const std::size_t ch = x.shape[1];
    Tensor<T> pooled({ch});
    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t c = 0; c < ch; ++c) pooled[c] += x.at(f, c);
    for (std::size_t c = 0; c < ch; ++c) pooled[c] /= static_cast<T>(frames);
    const Tensor<T> head =
        mlp_forward(vae.enc_head, pooled, cache ? &cache->head : nullptr);
    VaePosterior<T> post;
    post.mu = Tensor<T>({vae.latent_dim});
    post.log_var = Tensor<T>({vae.latent_dim});
    for (std::size_t i = 0; i < vae.latent_dim; ++i) {
        post.mu[i] = head[i];
        post.log_var[i] = head[vae.latent_dim + i];
    }
    return post;
}

template <typename T>
Tensor<T> decode(const Vae<T>& vae, const Tensor<T>& z, const Tensor<T>& audio,
                 detail::DecodeCache<T>* cache = nullptr) {
    if (z.size() != vae.latent_dim) throw ShapeError("decode: latent dim mismatch");
    if (!z.all_finite()) throw NumericError("decode: non-finite latent");
    const std::size_t frames = audio.shape[0];
    Tensor<T> x({frames, vae.audio_dim + vae.latent_dim});
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t i = 0; i < vae.audio_dim; ++i) x.at(f, i) = audio.at(f, i);
        for (std::size_t i = 0; i < vae.latent_dim; ++i)
            x.at(f, vae.audio_dim + i) = z[i];
    }
    if (cache) {
        cache->convs.resize(vae.dec_convs.size());
        cache->frames = frames;
    }
    for (std::size_t i = 0; i < vae.dec_convs.size(); ++i)
        x = conv1d_forward(vae.dec_convs[i], x, cache ? &cache->convs[i] : nullptr);
    return mlp_forward(vae.dec_head, x, cache ? &cache->head : nullptr);
}

// Convenience wrapper over domain types; inference path, decoder only.
inline LandmarkSequence decode_landmarks(const Vae<float>& vae, const Tensor<float>& z,
                                         const AudioFeatureSequence& audio) {
    return landmarks_from_tensor(decode(vae, z, audio_tensor<float>(audio)));
}

template <typename T>
struct VaeLoss {
    T total = 0, recon = 0, kl = 0, sync = 0;
};

// KL(posterior || N(0, I)) = sum_i 0.5 (mu^2 + sigma^2 - log sigma^2 - 1).
template <typename T>
T gaussian_kl(const Tensor<T>& mu, const Tensor<T>& log_var) {
    T acc = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const T var = std::exp(log_var[i]);
        acc += T(0.5) * (mu[i] * mu[i] + var - log_var[i] - T(1));
    }
    return acc;
}

template <typename T>
struct VaeGrads {
    std::vector<Conv1dGrads<T>> enc_convs, dec_convs;
    MlpGrads<T> enc_head, dec_head;
};

// Optional sync-loss hook: maps the predicted landmark tensor {F, 204} to a
// scalar score and its gradient with respect to the prediction.
template <typename T>
using SyncHook = std::function<std::pair<T, Tensor<T>>(const Tensor<T>& pred)>;

// Monte-Carlo ELBO: reconstruction + KL + optional sync term, with the
// reparameterized sample z = mu + sigma * eps. Fills grads when asked.
template <typename T>
VaeLoss<T> vae_loss(const Vae<T>& vae, const Tensor<T>& landmarks,
                    const Tensor<T>& audio, const Tensor<T>& eps,
                    const SyncHook<T>& sync_hook = nullptr,
                    VaeGrads<T>* grads = nullptr, T kl_weight = T(1),
                    T sync_weight = T(1)) {
    detail::EncodeCache<T> ec;
    detail::DecodeCache<T> dc;
    const auto post = encode(vae, landmarks, audio, &ec);
    const std::size_t L = vae.latent_dim;
    Tensor<T> sigma({L}), z({L});
    for (std::size_t i = 0; i < L; ++i) {
        sigma[i] = std::exp(T(0.5) * post.log_var[i]);
        z[i] = post.mu[i] + sigma[i] * eps[i];
    }
    const Tensor<T> pred = decode(vae, z, audio, &dc);

    VaeLoss<T> loss;
    const std::size_t n = pred.size();
    for (std::size_t i = 0; i < n; ++i) {
        const T d = pred[i] - landmarks.data[i];
        loss.recon += d * d;
    }
    loss.recon /= static_cast<T>(n);
    loss.kl = gaussian_kl(post.mu, post.log_var);
    Tensor<T> sync_grad;
    if (sync_hook) {
        auto [s, g] = sync_hook(pred);
        loss.sync = s;
        sync_grad = std::move(g);
    }
    loss.total = loss.recon + kl_weight * loss.kl + sync_weight * loss.sync;
    if (!std::isfinite(static_cast<double>(loss.total)))
        throw NumericError("vae_loss: non-finite loss");
    if (!grads) return loss;

    // d total / d pred
    Tensor<T> dpred(pred.shape);
    for (std::size_t i = 0; i < n; ++i)
        dpred.data[i] = T(2) * (pred[i] - landmarks.data[i]) / static_cast<T>(n);
    if (sync_hook)
        for (std::size_t i = 0; i < n; ++i)
            dpred.data[i] += sync_weight * sync_grad.data[i];

    // decoder backward
    grads->dec_head = mlp_backward(vae.dec_head, dc.head, dpred);
    Tensor<T> dcur = grads->dec_head.dx;
    grads->dec_convs.resize(vae.dec_convs.size());
    for (std::size_t i = vae.dec_convs.size(); i-- > 0;) {
        grads->dec_convs[i] = conv1d_backward(vae.dec_convs[i], dc.convs[i], dcur);
        dcur = grads->dec_convs[i].dx;
    }
    // z gradient: sum the broadcast latent channels over frames
    Tensor<T> dz({L});
    for (std::size_t f = 0; f < dc.frames; ++f)
        for (std::size_t i = 0; i < L; ++i)
            dz[i] += dcur.at(f, vae.audio_dim + i);

    // reparameterization + KL into (mu, log_var)
    Tensor<T> dhead({2 * L});
    for (std::size_t i = 0; i < L; ++i) {
        const T var = std::exp(post.log_var[i]);
        T dmu = dz[i] + kl_weight * post.mu[i];
        T dlv = dz[i] * eps[i] * T(0.5) * sigma[i] +
                kl_weight * T(0.5) * (var - T(1));
        dhead[i] = dmu;
        dhead[L + i] = dlv;
    }

    // encoder backward through head, mean pool, conv stack
    grads->enc_head = mlp_backward(vae.enc_head, ec.head, dhead);
    const std::size_t ch = grads->enc_head.dx.size();
    Tensor<T> dpool({ec.frames, ch});
    for (std::size_t f = 0; f < ec.frames; ++f)
        for (std::size_t c = 0; c < ch; ++c)
            dpool.at(f, c) = grads->enc_head.dx[c] / static_cast<T>(ec.frames);
    dcur = std::move(dpool);
    grads->enc_convs.resize(vae.enc_convs.size());
    for (std::size_t i = vae.enc_convs.size(); i-- > 0;) {
        grads->enc_convs[i] = conv1d_backward(vae.enc_convs[i], ec.convs[i], dcur);
        dcur = grads->enc_convs[i].dx;
    }
    return loss;
}

struct A2mTrainConfig {
    std::size_t latent_dim = 16;
    std::size_t channels = 32;
    std::size_t n_layers = 4;  // dilations 1,2,4,8
    std::size_t steps = 1200;
    float lr = 1e-3f;
    float kl_weight = 1e-3f;
    float sync_weight = 1.0f;
};

struct A2mTrainResult {
    Vae<float> vae;
    std::vector<VaeLoss<float>> loss_curve;
};

inline A2mTrainResult train_a2m(const std::vector<SyntheticClip>& dataset,
                                const A2mTrainConfig& cfg, std::uint64_t seed,
                                const SyncScorer* sync = nullptr) {
    if (dataset.empty()) throw Error("train_a2m: empty dataset");
    const std::size_t audio_dim = dataset[0].audio.feature_dim() + 1;
    Rng rng(seed, "train-a2m");
    A2mTrainResult res;
    res.vae = Vae<float>::make(audio_dim, cfg.latent_dim, cfg.channels, cfg.n_layers, rng);

    std::vector<Tensor<float>*> params;
    res.vae.visit_params([&](const std::string&, Tensor<float>& t) { params.push_back(&t); });
    Optimizer<float> opt(OptimizerKind::Adam, cfg.lr);

    std::vector<Tensor<float>> audio_t, lmk_t;
    for (const auto& c : dataset) {
        audio_t.push_back(audio_tensor<float>(c.audio));
        lmk_t.push_back(landmark_tensor<float>(c.neutral));
    }

    SyncHook<float> hook = nullptr;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const auto ci = static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1));
        Tensor<float> eps({cfg.latent_dim});
        for (auto& e : eps.data) e = static_cast<float>(rng.gaussian());

        if (sync && dataset[ci].audio.frames() >= kSyncWindow) {
            const auto win = static_cast<std::size_t>(
                rng.uniform_int(0, dataset[ci].audio.frames() - kSyncWindow));
            const auto& at = audio_t[ci];
            hook = [&, win](const Tensor<float>& pred) {
                Tensor<float> aw({kSyncWindow * at.shape[1]});
                Tensor<float> lw({kSyncWindow * kLandmarkFlat});
                for (std::size_t f = 0; f < kSyncWindow; ++f) {
                    for (std::size_t d = 0; d < at.shape[1]; ++d)
                        aw[f * at.shape[1] + d] = at.at(win + f, d);
                    for (std::size_t d = 0; d < kLandmarkFlat; ++d)
                        lw[f * kLandmarkFlat + d] = pred.at(win + f, d);
                }
                auto [score, dlw] = sync_score_with_landmark_grad(*sync, aw, lw);
                Tensor<float> dpred(pred.shape);
                for (std::size_t f = 0; f < kSyncWindow; ++f)
                    for (std::size_t d = 0; d < kLandmarkFlat; ++d)
                        dpred.at(win + f, d) = dlw[f * kLandmarkFlat + d];
                return std::make_pair(score, dpred);
            };
        } else {
            hook = nullptr;
        }

        VaeGrads<float> grads;
        VaeLoss<float> loss;
        try {
            loss = vae_loss<float>(res.vae, lmk_t[ci], audio_t[ci], eps, hook, &grads,
                                   cfg.kl_weight, cfg.sync_weight);
        } catch (const NumericError&) {
            throw DivergenceError(step, "train_a2m diverged at step " + std::to_string(step));
        }
        res.loss_curve.push_back(loss);

        std::vector<const Tensor<float>*> gs;
        for (std::size_t i = 0; i < grads.enc_convs.size(); ++i) {
            gs.push_back(&grads.enc_convs[i].dw);
            gs.push_back(&grads.enc_convs[i].db);
        }
        for (std::size_t i = 0; i < grads.enc_head.dw.size(); ++i) {
            gs.push_back(&grads.enc_head.dw[i]);
            gs.push_back(&grads.enc_head.db[i]);
        }
        for (std::size_t i = 0; i < grads.dec_convs.size(); ++i) {
            gs.push_back(&grads.dec_convs[i].dw);
            gs.push_back(&grads.dec_convs[i].db);
        }
        for (std::size_t i = 0; i < grads.dec_head.dw.size(); ++i) {
            gs.push_back(&grads.dec_head.dw[i]);
            gs.push_back(&grads.dec_head.db[i]);
        }
        opt.step(params, gs);
    }
    return res;
}

}  // namespace emogene
