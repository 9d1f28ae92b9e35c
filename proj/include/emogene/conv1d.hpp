#pragma once

#include <vector>

#include "emogene/errors.hpp"
#include "emogene/mlp.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

// Dilated 1-D convolution over a {frames, channels} sequence, kernel 3,
// symmetric zero padding so output length equals input length.
template <typename T>
struct Conv1d {
    Tensor<T> w;  // {out_ch, in_ch, k}
    Tensor<T> b;  // {out_ch}
    std::size_t dilation = 1;
    Activation act = Activation::ReLU;

    std::size_t in_channels() const { return w.shape[1]; }
    std::size_t out_channels() const { return w.shape[0]; }
    std::size_t kernel() const { return w.shape[2]; }

    static Conv1d make(std::size_t in_ch, std::size_t out_ch, std::size_t dilation,
                       Activation act, Rng& rng, std::size_t k = 3) {
        Conv1d c;
        const T scale = std::sqrt(T(2) / T(in_ch * k));
        c.w = Tensor<T>::randn({out_ch, in_ch, k}, rng, scale);
        c.b = Tensor<T>({out_ch});
        c.dilation = dilation;
        c.act = act;
        return c;
    }
};

template <typename T>
struct Conv1dCache {
    Tensor<T> input, pre, post;
};

template <typename T>
Tensor<T> conv1d_forward(const Conv1d<T>& layer, const Tensor<T>& x,
                         Conv1dCache<T>* cache = nullptr) {
    if (x.shape.size() != 2 || x.shape[1] != layer.in_channels())
        throw ShapeError("conv1d: input channel mismatch");
    const std::size_t frames = x.shape[0];
    const std::size_t in_ch = layer.in_channels(), out_ch = layer.out_channels();
    const std::size_t k = layer.kernel();
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    const auto dil = static_cast<std::ptrdiff_t>(layer.dilation);
    Tensor<T> pre({frames, out_ch});
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t o = 0; o < out_ch; ++o) {
            T acc = layer.b[o];
            for (std::size_t j = 0; j < k; ++j) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(t) + (static_cast<std::ptrdiff_t>(j) - half) * dil;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
                const T* xr = &x.data[static_cast<std::size_t>(src) * in_ch];
                const T* wr = &layer.w.data[(o * in_ch) * k + j];
                for (std::size_t i = 0; i < in_ch; ++i) acc += wr[i * k] * xr[i];
            }
            pre.at(t, o) = acc;
        }
    Tensor<T> post({frames, out_ch});
    for (std::size_t i = 0; i < pre.size(); ++i)
        post[i] = apply_activation(layer.act, pre[i]);
    if (cache) {
        cache->input = x;
        cache->pre = pre;
        cache->post = post;
    }
    return post;
}

template <typename T>
struct Conv1dGrads {
    Tensor<T> dw, db, dx;
};

template <typename T>
Conv1dGrads<T> conv1d_backward(const Conv1d<T>& layer, const Conv1dCache<T>& cache,
                               const Tensor<T>& upstream) {
    const std::size_t frames = cache.input.shape[0];
    const std::size_t in_ch = layer.in_channels(), out_ch = layer.out_channels();
    const std::size_t k = layer.kernel();
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    const auto dil = static_cast<std::ptrdiff_t>(layer.dilation);
    if (!upstream.same_shape(cache.post))
        throw ShapeError("conv1d_backward: upstream shape mismatch");
    Conv1dGrads<T> g;
    g.dw = Tensor<T>(layer.w.shape);
    g.db = Tensor<T>(layer.b.shape);
    g.dx = Tensor<T>(cache.input.shape);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t o = 0; o < out_ch; ++o) {
            const T up = upstream.at(t, o) *
                         activation_grad(layer.act, cache.pre.at(t, o), cache.post.at(t, o));
            if (up == T(0)) continue;
            g.db[o] += up;
            for (std::size_t j = 0; j < k; ++j) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(t) + (static_cast<std::ptrdiff_t>(j) - half) * dil;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
                const T* xr = &cache.input.data[static_cast<std::size_t>(src) * in_ch];
                T* dxr = &g.dx.data[static_cast<std::size_t>(src) * in_ch];
                for (std::size_t i = 0; i < in_ch; ++i) {
                    g.dw.data[(o * in_ch + i) * k + j] += up * xr[i];
                    dxr[i] += up * layer.w.data[(o * in_ch + i) * k + j];
                }
            }
        }
    return g;
}

}  // namespace emogene
