#pragma once

#include <cmath>
#include <vector>

#include "emogene/errors.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

enum class Activation { Identity, ReLU, Sigmoid, Softplus };

template <typename T>
T apply_activation(Activation a, T x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::ReLU: return x > T(0) ? x : T(0);
        case Activation::Sigmoid: return T(1) / (T(1) + std::exp(-x));
        case Activation::Softplus:
            // log(1+e^x), stable for large |x|
            return x > T(20) ? x : std::log1p(std::exp(x));
    }
    return x;
}

template <typename T>
T activation_grad(Activation a, T pre, T post) {
    switch (a) {
        case Activation::Identity: return T(1);
        case Activation::ReLU: return pre > T(0) ? T(1) : T(0);
        case Activation::Sigmoid: return post * (T(1) - post);
        case Activation::Softplus: return T(1) / (T(1) + std::exp(-pre));
    }
    return T(1);
}

template <typename T>
struct MlpLayer {
    Tensor<T> w;  // {out, in}
    Tensor<T> b;  // {out}
    Activation act = Activation::Identity;
};

// Fully connected stack. Input rows are samples: x shape {n, in} or {in}.
template <typename T>
struct Mlp {
    std::vector<MlpLayer<T>> layers;

    std::size_t input_dim() const { return layers.front().w.shape[1]; }
    std::size_t output_dim() const { return layers.back().w.shape[0]; }

    void validate() const {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            if (l.w.shape.size() != 2 || l.b.shape.size() != 1 ||
                l.b.shape[0] != l.w.shape[0])
                throw ShapeError("mlp layer " + std::to_string(i) + " malformed");
            if (i > 0 && layers[i - 1].w.shape[0] != l.w.shape[1])
                throw ShapeError("mlp layer dims do not chain at layer " +
                                 std::to_string(i));
        }
    }

    // He-style init, biases zero.
    static Mlp make(const std::vector<std::size_t>& dims,
                    const std::vector<Activation>& acts, Rng& rng) {
        Mlp m;
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            MlpLayer<T> l;
            const T scale = std::sqrt(T(2) / T(dims[i]));
            l.w = Tensor<T>::randn({dims[i + 1], dims[i]}, rng, scale);
            l.b = Tensor<T>({dims[i + 1]});
            l.act = acts[i];
            m.layers.push_back(std::move(l));
        }
        return m;
    }
};

template <typename T>
struct MlpCache {
    // inputs[i] is the input to layer i; pre[i]/post[i] its pre- and
    // post-activation values. All shape {n, dim}.
    std::vector<Tensor<T>> inputs, pre, post;
};

template <typename T>
Tensor<T> as_batch(const Tensor<T>& x) {
    if (x.shape.size() == 1) return Tensor<T>({1, x.shape[0]}, x.data);
    return x;
}

template <typename T>
Tensor<T> mlp_forward(const Mlp<T>& m, const Tensor<T>& x,
                      MlpCache<T>* cache = nullptr) {
    Tensor<T> cur = as_batch(x);
    const bool was_vector = x.shape.size() == 1;
    if (cur.shape[1] != m.input_dim())
        throw ShapeError("mlp input dim " + std::to_string(cur.shape[1]) +
                         " != expected " + std::to_string(m.input_dim()));
    for (const auto& l : m.layers) {
        const std::size_t n = cur.shape[0];
        const std::size_t in = l.w.shape[1], out = l.w.shape[0];
        Tensor<T> pre({n, out});
        for (std::size_t r = 0; r < n; ++r) {
            const T* xr = &cur.data[r * in];
            for (std::size_t o = 0; o < out; ++o) {
                T acc = l.b[o];
                const T* wr = &l.w.data[o * in];
                for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
                pre.at(r, o) = acc;
            }
        }
        Tensor<T> post({n, out});
        for (std::size_t i = 0; i < pre.size(); ++i)
            post[i] = apply_activation(l.act, pre[i]);
        if (cache) {
            cache->inputs.push_back(cur);
            cache->pre.push_back(pre);
            cache->post.push_back(post);
        }
        cur = std::move(post);
    }
    if (was_vector) return Tensor<T>({cur.shape[1]}, cur.data);
    return cur;
}

template <typename T>
struct MlpGrads {
    std::vector<Tensor<T>> dw, db;
    Tensor<T> dx;
};

// upstream shape must match the forward output ({n, out} or {out}).
template <typename T>
MlpGrads<T> mlp_backward(const Mlp<T>& m, const MlpCache<T>& cache,
                         const Tensor<T>& upstream) {
    Tensor<T> grad = as_batch(upstream);
    if (grad.shape[1] != m.output_dim())
        throw ShapeError("upstream grad dim mismatch");
    if (grad.shape[0] != cache.inputs.front().shape[0])
        throw ShapeError("upstream grad batch mismatch");
    MlpGrads<T> out;
    out.dw.resize(m.layers.size());
    out.db.resize(m.layers.size());
    for (std::size_t li = m.layers.size(); li-- > 0;) {
        const auto& l = m.layers[li];
        const std::size_t n = grad.shape[0];
        const std::size_t in = l.w.shape[1], o_dim = l.w.shape[0];
        // through the activation
        Tensor<T> dpre({n, o_dim});
        for (std::size_t i = 0; i < dpre.size(); ++i)
            dpre[i] = grad[i] *
                      activation_grad(l.act, cache.pre[li][i], cache.post[li][i]);
        out.dw[li] = Tensor<T>({o_dim, in});
        out.db[li] = Tensor<T>({o_dim});
        Tensor<T> dx({n, in});
        for (std::size_t r = 0; r < n; ++r) {
            const T* xr = &cache.inputs[li].data[r * in];
            for (std::size_t o = 0; o < o_dim; ++o) {
                const T g = dpre.at(r, o);
                out.db[li][o] += g;
                T* wgr = &out.dw[li].data[o * in];
                const T* wr = &l.w.data[o * in];
                T* dxr = &dx.data[r * in];
                for (std::size_t i = 0; i < in; ++i) {
                    wgr[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
            }
        }
        grad = std::move(dx);
    }
    out.dx = std::move(grad);
    return out;
}

}  // namespace emogene
