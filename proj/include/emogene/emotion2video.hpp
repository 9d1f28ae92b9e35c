#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"
#include "emogene/image.hpp"
#include "emogene/mlp.hpp"
#include "emogene/optimizer.hpp"
#include "emogene/rng.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

inline constexpr std::size_t kXOctaves = 6;
inline constexpr std::size_t kDOctaves = 2;
inline constexpr std::size_t kLmkSummaryDim = 32;

constexpr std::size_t pe_dim(std::size_t octaves) { return 3 * (1 + 2 * octaves); }

// [x, sin(2^k x), cos(2^k x) for k < octaves], per component.
template <typename T>
void positional_encode(const T x[3], std::size_t octaves, T* out) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < 3; ++i) out[idx++] = x[i];
    for (std::size_t k = 0; k < octaves; ++k) {
        const T f = static_cast<T>(std::size_t(1) << k);
        for (std::size_t i = 0; i < 3; ++i) {
            out[idx++] = std::sin(f * x[i]);
            out[idx++] = std::cos(f * x[i]);
        }
    }
}

struct Ray {
    double origin[3];
    double dir[3];  // unit
    double t_near, t_far;
};

// Pinhole camera on the +z axis looking toward -z.
struct Camera {
    std::size_t width = 32, height = 32;
    double focal = 32.0;
    double origin[3] = {0.0, 0.0, 1.8};
    double t_near = 0.8, t_far = 2.8;

    Ray pixel_ray(std::size_t px, std::size_t py) const {
        if (t_near >= t_far) throw Error("camera: t_near must be < t_far");
        const double dx = (static_cast<double>(px) + 0.5 - width * 0.5) / focal;
        const double dy = -(static_cast<double>(py) + 0.5 - height * 0.5) / focal;
        const double dz = -1.0;
        const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
        Ray r;
        for (int i = 0; i < 3; ++i) r.origin[i] = origin[i];
        r.dir[0] = dx / n;
        r.dir[1] = dy / n;
        r.dir[2] = dz / n;
        r.t_near = t_near;
        r.t_far = t_far;
        return r;
    }
};

// Focal tracks width so the field of view is resolution-independent.
inline Camera make_camera(std::size_t w, std::size_t h) {
    Camera c;
    c.width = w;
    c.height = h;
    c.focal = static_cast<double>(w);
    return c;
}

// ---------------------------------------------------------------------------
// Transmittance quadrature (shared by the renderer and its tests).

struct TransmittanceResult {
    std::vector<double> at_samples;  // T at each t_sample; starts at 1
    double residual;                 // T past t_far
};

inline TransmittanceResult transmittance(const std::vector<double>& sigma,
                                         const std::vector<double>& ts,
                                         double t_near, double t_far) {
    if (sigma.size() != ts.size() || ts.empty())
        throw Error("transmittance: sample size mismatch");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_near || ts[i] > t_far)
            throw Error("transmittance: sample outside [t_near, t_far]");
        if (i && ts[i] <= ts[i - 1])
            throw Error("transmittance: t_samples must be strictly increasing");
    }
    TransmittanceResult res;
    res.at_samples.resize(ts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        res.at_samples[i] = std::exp(-acc);
        const double delta = (i + 1 < ts.size()) ? ts[i + 1] - ts[i] : t_far - ts[i];
        acc += sigma[i] * delta;
    }
    res.residual = std::exp(-acc);
    return res;
}

// ---------------------------------------------------------------------------
// Discretized volume rendering over N equal bins. One sample per bin,
// midpoint by default, stratified when an rng is supplied.

template <typename T>
struct RaySamples {
    std::vector<double> ts;
    std::vector<T> sigma;   // N
    std::vector<T> color;   // 3N interleaved
    double delta = 0;       // bin width
};

template <typename T>
void sample_ray_ts(const Ray& ray, std::size_t n_samples, Rng* rng,
                   RaySamples<T>& out) {
    if (ray.t_near >= ray.t_far) throw Error("render_ray: degenerate ray");
    if (n_samples < 2) throw Error("render_ray: need >= 2 samples");
    out.delta = (ray.t_far - ray.t_near) / static_cast<double>(n_samples);
    out.ts.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double u = rng ? rng->uniform() : 0.5;
        out.ts[i] = ray.t_near + (static_cast<double>(i) + u) * out.delta;
    }
}

// C = sum_i T_i * (1 - exp(-sigma_i * delta)) * c_i ; also yields residual
// transmittance past the far bound.
template <typename T>
std::array<T, 3> composite(const RaySamples<T>& s, T* residual_out = nullptr) {
    std::array<T, 3> c{T(0), T(0), T(0)};
    T trans = T(1);
    for (std::size_t i = 0; i < s.sigma.size(); ++i) {
        const T alpha = T(1) - std::exp(-s.sigma[i] * static_cast<T>(s.delta));
        for (int ch = 0; ch < 3; ++ch) c[ch] += trans * alpha * s.color[3 * i + ch];
        trans *= std::exp(-s.sigma[i] * static_cast<T>(s.delta));
    }
    if (residual_out) *residual_out = trans;
    return c;
}

// Gradients of (C, residual) with respect to per-sample color and density.
template <typename T>
void composite_backward(const RaySamples<T>& s, const std::array<T, 3>& dC,
                        T dResidual, std::vector<T>& dcolor, std::vector<T>& dsigma) {
    const std::size_t n = s.sigma.size();
    const T delta = static_cast<T>(s.delta);
    dcolor.assign(3 * n, T(0));
    dsigma.assign(n, T(0));
    // forward transmittances
    std::vector<T> trans(n);
    T t = T(1);
    for (std::size_t i = 0; i < n; ++i) {
        trans[i] = t;
        t *= std::exp(-s.sigma[i] * delta);
    }
    const T t_res = t;
    // suffix[i][ch] = sum_{j>i} T_j alpha_j c_j dotted with dC downstream
    std::array<T, 3> suffix{T(0), T(0), T(0)};
    for (std::size_t i = n; i-- > 0;) {
        const T att = std::exp(-s.sigma[i] * delta);
        const T alpha = T(1) - att;
        T dsig = T(0);
        for (int ch = 0; ch < 3; ++ch) {
            dcolor[3 * i + ch] = dC[ch] * trans[i] * alpha;
            dsig += dC[ch] * delta *
                    (trans[i] * att * s.color[3 * i + ch] - suffix[ch]);
        }
        dsig += dResidual * (-delta * t_res);
        dsigma[i] = dsig;
        for (int ch = 0; ch < 3; ++ch)
            suffix[ch] += trans[i] * alpha * s.color[3 * i + ch];
    }
}

// Render a ray through an arbitrary field. FieldFn(x[3], d[3], c[3], sigma&).
template <typename T, typename FieldFn>
std::array<T, 3> render_ray(FieldFn&& field, const Ray& ray, std::size_t n_samples,
                            Rng* rng = nullptr, T* residual_out = nullptr,
                            RaySamples<T>* samples_out = nullptr) {
    RaySamples<T> s;
    sample_ray_ts(ray, n_samples, rng, s);
    s.sigma.resize(n_samples);
    s.color.resize(3 * n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        T x[3];
        for (int k = 0; k < 3; ++k)
            x[k] = static_cast<T>(ray.origin[k] + s.ts[i] * ray.dir[k]);
        T d[3] = {static_cast<T>(ray.dir[0]), static_cast<T>(ray.dir[1]),
                  static_cast<T>(ray.dir[2])};
        field(x, d, &s.color[3 * i], s.sigma[i]);
    }
    const auto c = composite(s, residual_out);
    if (samples_out) *samples_out = std::move(s);
    return c;
}

// ---------------------------------------------------------------------------
// Neural fields. The final MLP layer is linear; color goes through sigmoid,
// density through softplus.

template <typename T>
struct HeadField {
    Tensor<T> proj_w;  // {32, 204} landmark summary projection
    Tensor<T> proj_b;  // {32}
    Mlp<T> mlp;        // pe(x) + pe(d) + 32 -> 4

    static constexpr std::size_t input_dim() {
        return pe_dim(kXOctaves) + pe_dim(kDOctaves) + kLmkSummaryDim;
    }

    static HeadField make(std::size_t hidden, Rng& rng) {
        HeadField f;
        f.proj_w = Tensor<T>::randn({kLmkSummaryDim, kLandmarkFlat}, rng,
                                    static_cast<T>(std::sqrt(1.0 / kLandmarkFlat)));
        f.proj_b = Tensor<T>({kLmkSummaryDim});
        f.mlp = Mlp<T>::make({input_dim(), hidden, hidden, 4},
                             {Activation::ReLU, Activation::ReLU, Activation::Identity},
                             rng);
        return f;
    }

    template <typename F>
    void visit_params(F&& f, const std::string& prefix = "head.") {
        f(prefix + "proj.w", proj_w);
        f(prefix + "proj.b", proj_b);
        for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
            f(prefix + "mlp" + std::to_string(i) + ".w", mlp.layers[i].w);
            f(prefix + "mlp" + std::to_string(i) + ".b", mlp.layers[i].b);
        }
    }
};

template <typename T>
struct TorsoField {
    Tensor<T> proj_w;  // {32, 204}
    Tensor<T> proj_b;  // {32}
    Mlp<T> mlp;        // pe(x) + C_head(3) + d0(3) + P(12) + 32 -> 4
    T d0[3] = {T(0), T(0), T(-1)};  // canonical view direction

    static constexpr std::size_t input_dim() {
        return pe_dim(kXOctaves) + 3 + 3 + kPoseDim + kLmkSummaryDim;
    }

    static TorsoField make(std::size_t hidden, Rng& rng) {
        TorsoField f;
        f.proj_w = Tensor<T>::randn({kLmkSummaryDim, kLandmarkFlat}, rng,
                                    static_cast<T>(std::sqrt(1.0 / kLandmarkFlat)));
        f.proj_b = Tensor<T>({kLmkSummaryDim});
        f.mlp = Mlp<T>::make({input_dim(), hidden, hidden, 4},
                             {Activation::ReLU, Activation::ReLU, Activation::Identity},
                             rng);
        return f;
    }

    template <typename F>
    void visit_params(F&& f, const std::string& prefix = "torso.") {
        f(prefix + "proj.w", proj_w);
        f(prefix + "proj.b", proj_b);
        for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
            f(prefix + "mlp" + std::to_string(i) + ".w", mlp.layers[i].w);
            f(prefix + "mlp" + std::to_string(i) + ".b", mlp.layers[i].b);
        }
    }
};

template <typename T, typename FieldT>
Tensor<T> landmark_summary(const FieldT& field, const Tensor<T>& lmk_flat) {
    if (lmk_flat.size() != kLandmarkFlat)
        throw ShapeError("landmark_summary: expected flattened 68x3 frame");
    Tensor<T> out({kLmkSummaryDim});
    for (std::size_t o = 0; o < kLmkSummaryDim; ++o) {
        T acc = field.proj_b[o];
        for (std::size_t i = 0; i < kLandmarkFlat; ++i)
            acc += field.proj_w.at(o, i) * lmk_flat[i];
        out[o] = acc;
    }
    return out;
}

template <typename T>
void split_field_output(const Tensor<T>& raw, T c[3], T& sigma) {
    for (int k = 0; k < 3; ++k) c[k] = apply_activation(Activation::Sigmoid, raw[k]);
    sigma = apply_activation(Activation::Softplus, raw[3]);
}

// Single-point field query: c in [0,1]^3, sigma >= 0. d must be unit norm.
template <typename T>
void field_eval(const HeadField<T>& field, const T x[3], const T d[3],
                const Tensor<T>& summary, T c[3], T& sigma,
                MlpCache<T>* cache = nullptr) {
    const T dn = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if (std::abs(static_cast<double>(dn) - 1.0) > 1e-6)
        throw Error("field_eval: direction must be unit norm");
    Tensor<T> in({HeadField<T>::input_dim()});
    positional_encode(x, kXOctaves, in.data.data());
    positional_encode(d, kDOctaves, in.data.data() + pe_dim(kXOctaves));
    std::copy(summary.data.begin(), summary.data.end(),
              in.data.begin() + pe_dim(kXOctaves) + pe_dim(kDOctaves));
    const Tensor<T> raw = mlp_forward(field.mlp, in, cache);
    split_field_output(raw, c, sigma);
}

template <typename T>
void torso_field_eval(const TorsoField<T>& field, const T x[3], const T c_head[3],
                      const T pose[kPoseDim], const Tensor<T>& summary, T c[3],
                      T& sigma, MlpCache<T>* cache = nullptr) {
    Tensor<T> in({TorsoField<T>::input_dim()});
    std::size_t off = 0;
    positional_encode(x, kXOctaves, in.data.data());
    off += pe_dim(kXOctaves);
    for (int k = 0; k < 3; ++k) in[off++] = c_head[k];
    for (int k = 0; k < 3; ++k) in[off++] = field.d0[k];
    for (std::size_t k = 0; k < kPoseDim; ++k) in[off++] = pose[k];
    std::copy(summary.data.begin(), summary.data.end(), in.data.begin() + off);
    const Tensor<T> raw = mlp_forward(field.mlp, in, cache);
    split_field_output(raw, c, sigma);
}

// ---------------------------------------------------------------------------
// Frame rendering: head pass then torso pass along the same pixel ray,
// composited behind the residual head transmittance.

struct RenderConfig {
    std::size_t n_samples = 128;
    std::size_t n_samples_torso = 32;
    std::uint64_t seed = 0;     // 0 => midpoint rule (deterministic)
    bool use_torso = true;
};

template <typename T>
std::array<T, 3> render_pixel(const HeadField<T>& head, const TorsoField<T>* torso,
                              const Ray& ray, const Tensor<T>& head_summary,
                              const Tensor<T>* torso_summary, const T* pose,
                              const RenderConfig& cfg, Rng* rng) {
    T residual = T(1);
    auto head_fn = [&](const T x[3], const T d[3], T* c, T& sigma) {
        field_eval(head, x, d, head_summary, c, sigma);
    };
    auto c_head = render_ray<T>(head_fn, ray, cfg.n_samples, rng, &residual);
    if (!torso) return c_head;
    T ch[3] = {c_head[0], c_head[1], c_head[2]};
    auto torso_fn = [&](const T x[3], const T[3], T* c, T& sigma) {
        torso_field_eval(*torso, x, ch, pose, *torso_summary, c, sigma);
    };
    const auto c_torso = render_ray<T>(torso_fn, ray, cfg.n_samples_torso, rng);
    std::array<T, 3> out;
    for (int k = 0; k < 3; ++k) out[k] = c_head[k] + residual * c_torso[k];
    return out;
}

template <typename T>
Image render_frame(const HeadField<T>& head, const TorsoField<T>* torso,
                   const Camera& camera, const Tensor<T>& lmk_flat, const T* pose,
                   const RenderConfig& cfg) {
    const Tensor<T> head_summary = landmark_summary(head, lmk_flat);
    Tensor<T> torso_summary;
    if (torso) torso_summary = landmark_summary(*torso, lmk_flat);
    Image img(camera.width, camera.height, 3);
    for (std::size_t py = 0; py < camera.height; ++py)
        for (std::size_t px = 0; px < camera.width; ++px) {
            // per-pixel rng derivation keeps output independent of traversal order
            Rng pixel_rng(cfg.seed ^ hash_tag("px" + std::to_string(py * camera.width + px)));
            Rng* rng = cfg.seed ? &pixel_rng : nullptr;
            const auto c = render_pixel(head, torso, camera.pixel_ray(px, py),
                                        head_summary, torso ? &torso_summary : nullptr,
                                        pose, cfg, rng);
            for (int k = 0; k < 3; ++k)
                img.at(px, py, k) = static_cast<float>(c[k]);
        }
    return img;
}

// ---------------------------------------------------------------------------
// Procedural ground-truth scene: an emissive head ellipsoid whose mouth
// region tracks the mouth landmarks, plus a static torso blob. Rendered
// with the same quadrature as the neural fields, so the training target is
// exactly representable by the rendering model.

struct SceneParams {
    double head_radii[3] = {0.45, 0.55, 0.45};
    double head_density = 25.0;
    double skin[3] = {0.80, 0.62, 0.50};
    double mouth_color[3] = {0.55, 0.10, 0.10};
    double torso_center[3] = {0.0, -1.05, 0.0};
    double torso_radii[3] = {0.62, 0.50, 0.40};
    double torso_density = 20.0;
    double torso_color[3] = {0.20, 0.30, 0.52};
};

// Mouth openness from a landmark frame: inner-lip top (62) to bottom (66)
// vertical gap.
inline double mouth_openness(const Tensor<float>& lmk_flat) {
    const double top = lmk_flat[62 * 3 + 1];
    const double bottom = lmk_flat[66 * 3 + 1];
    return std::max(0.0, top - bottom);
}

inline void scene_eval(const SceneParams& sp, const Tensor<float>& lmk_flat,
                       const float pose[kPoseDim], const double x[3], double c[3],
                       double& sigma) {
    // head point in canonical frame: undo the pose rotation/translation
    double local[3];
    if (pose) {
        double shifted[3] = {x[0] - pose[3], x[1] - pose[7], x[2] - pose[11]};
        for (int r = 0; r < 3; ++r)
            local[r] = pose[0 + r] * shifted[0] + pose[4 + r] * shifted[1] +
                       pose[8 + r] * shifted[2];  // R^T * (x - t)
    } else {
        for (int r = 0; r < 3; ++r) local[r] = x[r];
    }
    double q = 0;
    for (int k = 0; k < 3; ++k) {
        const double u = local[k] / sp.head_radii[k];
        q += u * u;
    }
    const double head_sigma = sp.head_density * std::max(0.0, 1.0 - q);
    double col[3] = {sp.skin[0], sp.skin[1], sp.skin[2]};
    if (head_sigma > 0) {
        // mouth region follows the mouth landmark centroid and openness
        double mx = 0, my = 0;
        for (std::size_t p = 48; p < 68; ++p) {
            mx += lmk_flat[p * 3 + 0];
            my += lmk_flat[p * 3 + 1];
        }
        mx /= 20.0;
        my /= 20.0;
        const double r_mouth = 0.07 + 2.0 * mouth_openness(lmk_flat);
        const double dx = local[0] - mx, dy = local[1] - my, dz = local[2] - 0.40;
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < r_mouth * r_mouth) {
            const double w = 1.0 - d2 / (r_mouth * r_mouth);
            for (int k = 0; k < 3; ++k)
                col[k] = (1.0 - w) * col[k] + w * sp.mouth_color[k];
        }
        // brow line tints the upper face with expression changes
        const double brow_y = (lmk_flat[19 * 3 + 1] + lmk_flat[24 * 3 + 1]) * 0.5;
        if (local[1] > 0.1) col[0] = std::min(1.0, col[0] + 1.5 * (brow_y - 0.22));
    }
    // static torso blob (world frame)
    double qt = 0;
    for (int k = 0; k < 3; ++k) {
        const double u = (x[k] - sp.torso_center[k]) / sp.torso_radii[k];
        qt += u * u;
    }
    const double torso_sigma = sp.torso_density * std::max(0.0, 1.0 - qt);
    sigma = head_sigma + torso_sigma;
    if (sigma > 0) {
        for (int k = 0; k < 3; ++k)
            c[k] = (head_sigma * col[k] + torso_sigma * sp.torso_color[k]) / sigma;
    } else {
        for (int k = 0; k < 3; ++k) c[k] = 0.0;
    }
}

inline Image render_gt_frame(const SceneParams& sp, const Camera& camera,
                             const Tensor<float>& lmk_flat, const float pose[kPoseDim],
                             std::size_t n_samples = 128) {
    Image img(camera.width, camera.height, 3);
    auto fn = [&](const double x[3], const double[3], double* c, double& sigma) {
        scene_eval(sp, lmk_flat, pose, x, c, sigma);
    };
    for (std::size_t py = 0; py < camera.height; ++py)
        for (std::size_t px = 0; px < camera.width; ++px) {
            const auto c = render_ray<double>(fn, camera.pixel_ray(px, py), n_samples);
            for (int k = 0; k < 3; ++k) img.at(px, py, k) = static_cast<float>(c[k]);
        }
    return img;
}

// ---------------------------------------------------------------------------
// Training.

struct NerfFrame {
    Image image;
    Tensor<float> lmk_flat;  // {204}
    std::array<float, kPoseDim> pose;
};

struct NerfTrainConfig {
    std::size_t hidden = 64;
    std::size_t n_samples = 32;
    std::size_t n_samples_torso = 16;
    std::size_t batch_rays = 128;
    std::size_t steps = 1500;
    float lr = 5e-3f;
    bool train_torso = true;
};

struct NerfModel {
    HeadField<float> head;
    TorsoField<float> torso;
};

struct NerfTrainResult {
    NerfModel model;
    std::vector<float> loss_curve;
};

namespace detail {

// Accumulates gradients for one field's parameter set.
template <typename T, typename FieldT>
struct FieldGradAcc {
    Tensor<T> proj_w, proj_b;
    std::vector<Tensor<T>> mlp_w, mlp_b;

    explicit FieldGradAcc(const FieldT& f)
        : proj_w(f.proj_w.shape), proj_b(f.proj_b.shape) {
        for (const auto& l : f.mlp.layers) {
            mlp_w.emplace_back(l.w.shape);
            mlp_b.emplace_back(l.b.shape);
        }
    }

    void add_mlp(const MlpGrads<T>& g) {
        for (std::size_t i = 0; i < mlp_w.size(); ++i) {
            for (std::size_t j = 0; j < mlp_w[i].size(); ++j)
                mlp_w[i].data[j] += g.dw[i].data[j];
            for (std::size_t j = 0; j < mlp_b[i].size(); ++j)
                mlp_b[i].data[j] += g.db[i].data[j];
        }
    }

    // d(summary) accumulated over samples -> projection grads
    void add_proj(const Tensor<T>& dsummary, const Tensor<T>& lmk_flat) {
        for (std::size_t o = 0; o < kLmkSummaryDim; ++o) {
            proj_b[o] += dsummary[o];
            for (std::size_t i = 0; i < kLandmarkFlat; ++i)
                proj_w.at(o, i) += dsummary[o] * lmk_flat[i];
        }
    }
};

}  // namespace detail

// Loss and gradients for one ray against a ground-truth pixel; shared by
// training and the renderer gradient check. Returns sum of squared channel
// errors. Gradients are accumulated into the FieldGradAcc objects.
template <typename T>
T nerf_ray_loss_grad(const HeadField<T>& head, const TorsoField<T>* torso,
                     const Ray& ray, const Tensor<T>& lmk_flat, const T* pose,
                     const T gt[3], std::size_t n_samples, std::size_t n_samples_torso,
                     Rng* rng, detail::FieldGradAcc<T, HeadField<T>>& head_acc,
                     detail::FieldGradAcc<T, TorsoField<T>>* torso_acc) {
    const Tensor<T> head_summary = landmark_summary(head, lmk_flat);

    // head pass with per-sample caches
    RaySamples<T> hs;
    sample_ray_ts(ray, n_samples, rng, hs);
    hs.sigma.resize(n_samples);
    hs.color.resize(3 * n_samples);
    std::vector<MlpCache<T>> head_caches(n_samples);
    std::vector<Tensor<T>> head_raw(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        T x[3], d[3];
        for (int k = 0; k < 3; ++k) {
            x[k] = static_cast<T>(ray.origin[k] + hs.ts[i] * ray.dir[k]);
            d[k] = static_cast<T>(ray.dir[k]);
        }
        Tensor<T> in({HeadField<T>::input_dim()});
        positional_encode(x, kXOctaves, in.data.data());
        positional_encode(d, kDOctaves, in.data.data() + pe_dim(kXOctaves));
        std::copy(head_summary.data.begin(), head_summary.data.end(),
                  in.data.begin() + pe_dim(kXOctaves) + pe_dim(kDOctaves));
        head_raw[i] = mlp_forward(head.mlp, in, &head_caches[i]);
        split_field_output(head_raw[i], &hs.color[3 * i], hs.sigma[i]);
    }
    T residual = T(1);
    const auto c_head = composite(hs, &residual);

    // torso pass
    RaySamples<T> tsamp;
    std::vector<MlpCache<T>> torso_caches;
    std::vector<Tensor<T>> torso_raw;
    Tensor<T> torso_summary;
    std::array<T, 3> c_torso{T(0), T(0), T(0)};
    if (torso) {
        torso_summary = landmark_summary(*torso, lmk_flat);
        sample_ray_ts(ray, n_samples_torso, rng, tsamp);
        tsamp.sigma.resize(n_samples_torso);
        tsamp.color.resize(3 * n_samples_torso);
        torso_caches.resize(n_samples_torso);
        torso_raw.resize(n_samples_torso);
        T ch[3] = {c_head[0], c_head[1], c_head[2]};
        for (std::size_t i = 0; i < n_samples_torso; ++i) {
            T x[3];
            for (int k = 0; k < 3; ++k)
                x[k] = static_cast<T>(ray.origin[k] + tsamp.ts[i] * ray.dir[k]);
            Tensor<T> in({TorsoField<T>::input_dim()});
            std::size_t off = 0;
            positional_encode(x, kXOctaves, in.data.data());
            off += pe_dim(kXOctaves);
            for (int k = 0; k < 3; ++k) in[off++] = ch[k];
            for (int k = 0; k < 3; ++k) in[off++] = torso->d0[k];
            for (std::size_t k = 0; k < kPoseDim; ++k) in[off++] = pose[k];
            std::copy(torso_summary.data.begin(), torso_summary.data.end(),
                      in.data.begin() + off);
            torso_raw[i] = mlp_forward(torso->mlp, in, &torso_caches[i]);
            split_field_output(torso_raw[i], &tsamp.color[3 * i], tsamp.sigma[i]);
        }
        c_torso = composite(tsamp);
    }

    std::array<T, 3> c_final;
    for (int k = 0; k < 3; ++k)
        c_final[k] = c_head[k] + (torso ? residual * c_torso[k] : T(0));

    T loss = T(0);
    std::array<T, 3> dC;
    for (int k = 0; k < 3; ++k) {
        const T d = c_final[k] - gt[k];
        loss += d * d;
        dC[k] = T(2) * d;
    }

    // backward: final = c_head + residual * c_torso(c_head, ...)
    std::array<T, 3> dC_head = dC;
    T dResidual = T(0);
    if (torso) {
        std::array<T, 3> dC_torso;
        for (int k = 0; k < 3; ++k) {
            dC_torso[k] = dC[k] * residual;
            dResidual += dC[k] * c_torso[k];
        }
        std::vector<T> dcol, dsig;
        composite_backward(tsamp, dC_torso, T(0), dcol, dsig);
        Tensor<T> dsummary({kLmkSummaryDim});
        for (std::size_t i = 0; i < tsamp.sigma.size(); ++i) {
            Tensor<T> draw({4});
            for (int k = 0; k < 3; ++k) {
                const T c = tsamp.color[3 * i + k];
                draw[k] = dcol[3 * i + k] * c * (T(1) - c);
            }
            draw[3] = dsig[i] * apply_activation(Activation::Sigmoid, torso_raw[i][3]);
            const auto g = mlp_backward(torso->mlp, torso_caches[i], draw);
            torso_acc->add_mlp(g);
            // input grads: C_head channels and landmark summary
            const std::size_t ch_off = pe_dim(kXOctaves);
            for (int k = 0; k < 3; ++k) dC_head[k] += g.dx[ch_off + k];
            const std::size_t sum_off = ch_off + 3 + 3 + kPoseDim;
            for (std::size_t k = 0; k < kLmkSummaryDim; ++k)
                dsummary[k] += g.dx[sum_off + k];
        }
        torso_acc->add_proj(dsummary, lmk_flat);
    }

    // head pass backward
    std::vector<T> dcol, dsig;
    composite_backward(hs, dC_head, dResidual, dcol, dsig);
    Tensor<T> dsummary({kLmkSummaryDim});
    for (std::size_t i = 0; i < hs.sigma.size(); ++i) {
        Tensor<T> draw({4});
        for (int k = 0; k < 3; ++k) {
            const T c = hs.color[3 * i + k];
            draw[k] = dcol[3 * i + k] * c * (T(1) - c);
        }
        draw[3] = dsig[i] * apply_activation(Activation::Sigmoid, head_raw[i][3]);
        const auto g = mlp_backward(head.mlp, head_caches[i], draw);
        head_acc.add_mlp(g);
        const std::size_t sum_off = pe_dim(kXOctaves) + pe_dim(kDOctaves);
        for (std::size_t k = 0; k < kLmkSummaryDim; ++k)
            dsummary[k] += g.dx[sum_off + k];
    }
    head_acc.add_proj(dsummary, lmk_flat);
    return loss;
}

inline NerfTrainResult train_nerf(const std::vector<NerfFrame>& frames,
                                  const NerfTrainConfig& cfg, std::uint64_t seed) {
    if (frames.empty()) throw Error("train_nerf: no frames");
    Rng rng(seed, "train-nerf");
    NerfTrainResult res;
    res.model.head = HeadField<float>::make(cfg.hidden, rng);
    res.model.torso = TorsoField<float>::make(cfg.hidden, rng);
    const Camera camera = make_camera(frames[0].image.width, frames[0].image.height);

    std::vector<Tensor<float>*> params;
    res.model.head.visit_params(
        [&](const std::string&, Tensor<float>& t) { params.push_back(&t); });
    if (cfg.train_torso)
        res.model.torso.visit_params(
            [&](const std::string&, Tensor<float>& t) { params.push_back(&t); });
    Optimizer<float> opt(OptimizerKind::Adam, cfg.lr);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        detail::FieldGradAcc<float, HeadField<float>> head_acc(res.model.head);
        detail::FieldGradAcc<float, TorsoField<float>> torso_acc(res.model.torso);
        double loss = 0;
        const auto fi = static_cast<std::size_t>(rng.uniform_int(0, frames.size() - 1));
        const auto& frame = frames[fi];
        for (std::size_t b = 0; b < cfg.batch_rays; ++b) {
            const auto px = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(camera.width) - 1));
            const auto py = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(camera.height) - 1));
            float gt[3];
            for (int k = 0; k < 3; ++k) gt[k] = frame.image.at(px, py, k);
            loss += nerf_ray_loss_grad<float>(
                res.model.head, cfg.train_torso ? &res.model.torso : nullptr,
                camera.pixel_ray(px, py), frame.lmk_flat, frame.pose.data(), gt,
                cfg.n_samples, cfg.n_samples_torso, &rng, head_acc,
                cfg.train_torso ? &torso_acc : nullptr);
        }
        loss /= static_cast<double>(cfg.batch_rays);
        if (!std::isfinite(loss))
            throw DivergenceError(step, "train_nerf diverged at step " + std::to_string(step));
        res.loss_curve.push_back(static_cast<float>(loss));

        const float inv = 1.f / static_cast<float>(cfg.batch_rays);
        std::vector<Tensor<float>> gs_store;
        auto scaled = [&](const Tensor<float>& t) {
            Tensor<float> g(t.shape);
            for (std::size_t i = 0; i < t.size(); ++i) g.data[i] = t.data[i] * inv;
            return g;
        };
        gs_store.push_back(scaled(head_acc.proj_w));
        gs_store.push_back(scaled(head_acc.proj_b));
        for (std::size_t i = 0; i < head_acc.mlp_w.size(); ++i) {
            gs_store.push_back(scaled(head_acc.mlp_w[i]));
            gs_store.push_back(scaled(head_acc.mlp_b[i]));
        }
        if (cfg.train_torso) {
            gs_store.push_back(scaled(torso_acc.proj_w));
            gs_store.push_back(scaled(torso_acc.proj_b));
            for (std::size_t i = 0; i < torso_acc.mlp_w.size(); ++i) {
                gs_store.push_back(scaled(torso_acc.mlp_w[i]));
                gs_store.push_back(scaled(torso_acc.mlp_b[i]));
            }
        }
        std::vector<const Tensor<float>*> gs;
        for (const auto& g : gs_store) gs.push_back(&g);
        opt.step(params, gs);
    }
    return res;
}

}  // namespace emogene
